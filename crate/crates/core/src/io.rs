//! CSV and legacy-VTK emission, plus readers for the emitted formats.
//!
//! All floating-point output uses `{:.16e}`, which is lossless for f64,
//! so every file written here can be re-read bit-exactly.

use crate::diagnostics::EnergyRecord;
use crate::error::{Error, Result};
use crate::fem::NodalField;
use crate::mesh::Mesh;
use crate::study::RateReport;
use std::io::Write;
use std::path::Path;

pub const ENERGY_CSV_HEADER: &str = "step,t,E,E_modified,H_norm_sq,r,r_drift";

/// Writes per-step energy diagnostics as CSV.
pub fn emit_energy_csv(records: &[EnergyRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "refusing to write an empty energy CSV",
        )));
    }
    let mut out = String::new();
    out.push_str(ENERGY_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.step_index,
            r.t,
            r.energy,
            r.modified(),
            r.h_norm_sq,
            r.r,
            r.r_drift
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Row of a re-parsed energy CSV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyCsvRow {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    pub energy_modified: f64,
    pub h_norm_sq: f64,
    pub r: f64,
    pub r_drift: f64,
}

/// Reads back a file produced by [`emit_energy_csv`].
pub fn read_energy_csv(path: &Path) -> Result<Vec<EnergyCsvRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == ENERGY_CSV_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "bad energy CSV header: {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Parse(format!(
                "energy CSV row {} has {} fields, expected 7",
                i + 2,
                f.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| Error::Parse(format!("row {}: bad number `{s}`: {e}", i + 2)))
        };
        rows.push(EnergyCsvRow {
            step: f[0]
                .parse()
                .map_err(|e| Error::Parse(format!("row {}: bad step: {e}", i + 2)))?,
            t: num(f[1])?,
            energy: num(f[2])?,
            energy_modified: num(f[3])?,
            h_norm_sq: num(f[4])?,
            r: num(f[5])?,
            r_drift: num(f[6])?,
        });
    }
    Ok(rows)
}

/// Writes the convergence-study rate table as CSV.
///
/// One row per mesh pair; the rate columns are empty on the first row
/// (a rate needs two pairs).
pub fn emit_rate_csv(report: &RateReport, path: &Path) -> Result<()> {
    let mut out = String::from("coarse_n,h,k,err_l2,err_h1,err_linf,rate_l2,rate_h1,rate_linf\n");
    for (i, p) in report.pairs.iter().enumerate() {
        let rates = if i == 0 {
            ",,".to_string()
        } else {
            let r = report.rates[i - 1];
            format!("{:.6},{:.6},{:.6}", r.l2, r.h1, r.linf)
        };
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            p.coarse_n, p.h, p.k, p.l2, p.h1, p.linf, rates
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Human-readable study summary (what `study` prints).
pub fn format_rate_summary(report: &RateReport) -> String {
    let mut s = String::new();
    s.push_str("level   n        err_L2        err_H1      err_Linf  rate_L2  rate_H1\n");
    for (i, p) in report.pairs.iter().enumerate() {
        s.push_str(&format!(
            "{:>5} {:>3}  {:>12.5e}  {:>12.5e}  {:>12.5e}",
            i, p.coarse_n, p.l2, p.h1, p.linf
        ));
        if i > 0 {
            let r = report.rates[i - 1];
            s.push_str(&format!("  {:>7.3}  {:>7.3}", r.l2, r.h1));
        }
        s.push('\n');
    }
    s.push_str(&format!(
        "max |E_modified - E| per level: {:?}\n",
        report.energy_gaps
    ));
    s
}

/// Writes a nodal 3-vector field as a legacy ASCII VTK unstructured grid
/// (cell type 5 = triangle), with the field as POINT_DATA VECTORS "u".
pub fn emit_field_vtk(u: &NodalField, mesh: &Mesh, path: &Path) -> Result<()> {
    if u.num_nodes() != mesh.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: mesh.num_nodes(),
            got: u.num_nodes(),
            context: "VTK field",
        });
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_vtk_grid(&mut f, mesh)?;
    writeln!(f, "POINT_DATA {}", mesh.num_nodes())?;
    writeln!(f, "VECTORS u double")?;
    for i in 0..u.num_nodes() {
        let v = u.get(i);
        writeln!(f, "{:.16e} {:.16e} {:.16e}", v[0], v[1], v[2])?;
    }
    f.flush()?;
    Ok(())
}

/// Writes just the mesh (no point data) for visual inspection.
pub fn emit_mesh_vtk(mesh: &Mesh, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_vtk_grid(&mut f, mesh)?;
    f.flush()?;
    Ok(())
}

fn write_vtk_grid<W: Write>(f: &mut W, mesh: &Mesh) -> Result<()> {
    writeln!(f, "# vtk DataFile Version 3.0")?;
    writeln!(f, "llb-sav field snapshot")?;
    writeln!(f, "ASCII")?;
    writeln!(f, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(f, "POINTS {} double", mesh.num_nodes())?;
    for p in &mesh.nodes {
        writeln!(f, "{:.16e} {:.16e} 0.0", p[0], p[1])?;
    }
    writeln!(f, "CELLS {} {}", mesh.num_triangles(), 4 * mesh.num_triangles())?;
    for t in &mesh.triangles {
        writeln!(f, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(f, "CELL_TYPES {}", mesh.num_triangles())?;
    for _ in 0..mesh.num_triangles() {
        writeln!(f, "5")?;
    }
    Ok(())
}
