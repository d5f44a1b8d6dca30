//! Writes the mesh and a sequence of magnetisation snapshots as legacy
//! ASCII VTK files, viewable in ParaView or VisIt.
//!
//! ```sh
//! cargo run --example field_snapshots
//! ```

use std::fs;

use llb_sav::config::RunConfig;
use llb_sav::fem::assemble_mass_stiffness;
use llb_sav::io::{emit_field_vtk, emit_mesh_vtk};
use llb_sav::mesh::build_structured;
use llb_sav::stepper::run;

fn main() -> llb_sav::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.apply_preset("simulation2")?;
    cfg.n = 24;
    cfg.k = 5e-4;
    cfg.t_end = 0.02;

    let out = std::env::temp_dir().join("llb_snapshots");
    fs::create_dir_all(&out)?;

    let ops = assemble_mass_stiffness(build_structured(cfg.domain, cfg.n)?);
    emit_mesh_vtk(&ops.mesh, &out.join("mesh.vtk"))?;

    let init = cfg.initial;
    let traj = run(
        |x, y| init.value(x, y),
        |x, y| init.gradient(x, y),
        &ops,
        &cfg.scheme_config(),
    )?;

    let stride = 10;
    let mut written = 0;
    for state in traj.states.iter().step_by(stride) {
        let path = out.join(format!("u_{:05}.vtk", state.step_index));
        emit_field_vtk(&state.u, &ops.mesh, &path)?;
        written += 1;
    }
    println!(
        "{} snapshots (every {} steps of {} total) in {}",
        written,
        stride,
        traj.states.len() - 1,
        out.display()
    );
    println!("open mesh.vtk / u_*.vtk in ParaView to inspect the field");
    Ok(())
}
