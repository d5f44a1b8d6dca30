//! Nested-mesh convergence study: compares each trajectory against the
//! next refinement (prolongation onto the fine space) and reports
//! log2-rates in L2, H1, and max norms.
//!
//! The fixed-k family isolates the spatial order of the P1
//! discretisation; the proportional family `k = c h` exposes the
//! combined space-time order along a refinement path.
//!
//! ```sh
//! cargo run --example convergence_study
//! ```

use std::env::temp_dir;

use llb_sav::config::RunConfig;
use llb_sav::io::{emit_rate_csv, format_rate_summary};
use llb_sav::sparse::SolverKind;
use llb_sav::stepper::{Bdf2Init, Scheme};
use llb_sav::study::{run_study, Coupling, StudySpec};

fn main() -> llb_sav::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.apply_preset("simulation1")?;

    let spatial = StudySpec {
        domain: cfg.domain,
        base_n: 8,
        levels: 4,
        coupling: Coupling::FixedK { k: 1e-4 },
        scheme: Scheme::Euler,
        coeff: cfg.coeff,
        initial: cfg.initial,
        t_end: 1e-3,
        solver: SolverKind::Lu,
        tol: 1e-11,
        bdf2_init: Bdf2Init::EulerSubsteps,
    };
    println!("spatial study (simulation1, Euler, fixed k = 1e-4):");
    let report = run_study(&spatial)?;
    println!("{}", format_rate_summary(&report));
    let path = temp_dir().join("llb_rates_spatial.csv");
    emit_rate_csv(&report, &path)?;
    println!("written to {}\n", path.display());

    let c = 1.0 / 320.0;
    let h8 = llb_sav::mesh::build_structured(cfg.domain, 8)?.h;
    let coupled = StudySpec {
        coupling: Coupling::Proportional { c },
        scheme: Scheme::Bdf2,
        bdf2_init: Bdf2Init::ImplicitOneStep,
        t_end: 2.0 * c * h8,
        levels: 3,
        ..spatial
    };
    println!("coupled study (simulation1, BDF2, k = h/320):");
    let report = run_study(&coupled)?;
    println!("{}", format_rate_summary(&report));
    if let Some(head) = report.headline() {
        println!("finest-pair L2 rate: {:.3}", head.l2);
    }
    Ok(())
}
