//! Energy-stable finite-element solver for the Landau-Lifshitz-Bloch
//! (LLB) equation above the Curie temperature.
//!
//! The LLB equation evolves a magnetisation field `u : D -> R^3` whose
//! magnitude is free to vary, driven by the effective field
//! `H = sigma lap u - kappa mu u - kappa |u|^2 u`:
//!
//! ```text
//!   du/dt = -gamma u x H + alpha H        on D x (0, T),
//!   du/dn = 0                             on the boundary.
//! ```
//!
//! The solver discretises in space with P1 finite elements on structured
//! triangulations of a rectangle and in time with two *linear*,
//! unconditionally energy-stable schemes built on a scalar auxiliary
//! variable (SAV) `r(t) = sqrt(F[u])` for the quartic energy part: a
//! semi-implicit Euler scheme and a linearly extrapolated BDF2 scheme.
//! Each step costs a single sparse linear solve plus a scalar Schur
//! complement for `r`; both schemes dissipate a modified energy exactly,
//! for every step size.
//!
//! Module map:
//! - [`mesh`]: nested structured triangulations and exact prolongation.
//! - [`quadrature`]: the degree-4 triangle rule used for all integrals.
//! - [`fem`]: P1 assembly (mass, stiffness, cross term, SAV load) and
//!   the L2 / Ritz projections.
//! - [`sparse`]: CSR matrices, CG / LU / GMRES solves, bordered systems.
//! - [`stepper`]: the two SAV time steppers and trajectory driver.
//! - [`diagnostics`]: true and modified energies, norms, SAV drift.
//! - [`study`]: cross-level convergence-rate studies on nested meshes.
//! - [`config`] / [`io`]: flat key-value run configs, CSV and VTK files.
//! - [`selftest`]: operator invariants and the dense constant-field
//!   oracle behind the CLI `check` subcommand.
//!
//! The `examples/` directory exercises every major capability end to
//! end; `src/bin/llb.rs` is a thin CLI over the same API.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod initial;
pub mod io;
pub mod mesh;
pub mod quadrature;
pub mod selftest;
pub mod sparse;
pub mod stepper;
pub mod study;

pub use config::{parse_config, RunConfig, PRESET_NAMES};
pub use diagnostics::{
    energy_records, modified_energy_bdf2, modified_energy_euler, norms, true_energy, EnergyRecord,
    Norms,
};
pub use error::{Error, Result};
pub use fem::{
    assemble_mass_stiffness, cross_matrix, l2_project, ritz_project, sav_load_vector,
    Coefficients, FemOperators, NodalField,
};
pub use initial::InitialData;
pub use mesh::{build_structured, eval_p1, prolong, refine, Mesh, Rectangle};
pub use sparse::{solve_bordered, solve_spd, BorderedSystem, CsrMatrix, SolverKind};
pub use stepper::{
    bdf2_init, bdf2_step, euler_step, init_euler, run, Bdf2Init, Scheme, SchemeConfig, State,
    Trajectory,
};
pub use study::{run_study, Coupling, RateReport, StudySpec};
