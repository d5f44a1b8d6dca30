//! Convergence-study harness.
//!
//! Runs the same problem on a nested family of meshes, computes the
//! cross-level errors `e_h = u_h - u_{h/2}` by injecting the coarser
//! solution exactly into the finer P1 space, and reports extrapolated
//! convergence orders `rate_s = log2(err_{2h} / err_h)`.

use crate::diagnostics::{energy_gap_bdf2, energy_gap_euler, norms};
use crate::error::{Error, Result};
use crate::fem::{assemble_mass_stiffness, Coefficients, FemOperators};
use crate::initial::InitialData;
use crate::mesh::{build_structured, prolong, refine, Mesh, Rectangle};
use crate::sparse::SolverKind;
use crate::stepper::{run, Bdf2Init, Scheme, SchemeConfig, Trajectory};

/// How the time step is tied to the mesh size across levels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    /// Same `k` on every level (isolates the spatial error).
    FixedK { k: f64 },
    /// `k = c h` on every level (exposes the temporal order).
    Proportional { c: f64 },
}

#[derive(Clone, Debug)]
pub struct StudySpec {
    pub domain: Rectangle,
    pub base_n: usize,
    /// Number of mesh levels; at least 2.
    pub levels: usize,
    pub coupling: Coupling,
    pub scheme: Scheme,
    pub coeff: Coefficients,
    pub initial: InitialData,
    pub t_end: f64,
    pub solver: SolverKind,
    pub tol: f64,
    pub bdf2_init: Bdf2Init,
}

/// Max-over-time error norms for one consecutive mesh pair, attributed
/// to the coarser level as `e_h`.
#[derive(Clone, Copy, Debug)]
pub struct PairErrors {
    pub coarse_n: usize,
    pub h: f64,
    pub k: f64,
    pub l2: f64,
    pub h1: f64,
    pub linf: f64,
}

/// Extrapolated orders between two consecutive error pairs.
#[derive(Clone, Copy, Debug)]
pub struct RateEntry {
    pub l2: f64,
    pub h1: f64,
    pub linf: f64,
}

#[derive(Clone, Debug)]
pub struct RateReport {
    pub pairs: Vec<PairErrors>,
    /// `rates[i] = log2(pairs[i] / pairs[i+1])` per norm.
    pub rates: Vec<RateEntry>,
    /// Per level, the max over steps of the modified-vs-true energy gap.
    pub energy_gaps: Vec<f64>,
    pub level_ns: Vec<usize>,
}

impl RateReport {
    /// Rate on the finest available pair, per norm.
    pub fn headline(&self) -> Option<RateEntry> {
        self.rates.last().copied()
    }
}

fn level_step(spec: &StudySpec, h: f64) -> f64 {
    match spec.coupling {
        Coupling::FixedK { k } => k,
        Coupling::Proportional { c } => c * h,
    }
}

/// Ratio between the time steps of a coarse/fine level pair; must be an
/// integer for the time grids to nest.
fn step_ratio(k_coarse: f64, k_fine: f64) -> Result<usize> {
    let ratio = k_coarse / k_fine;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * ratio {
        return Err(Error::Study(format!(
            "time grids do not nest: k_coarse / k_fine = {ratio} is not an integer"
        )));
    }
    Ok(rounded as usize)
}

/// Comparison times shared by the two levels of pair `pair` (0-based,
/// between levels `pair` and `pair + 1`).
pub fn sample_times(spec: &StudySpec, pair: usize) -> Result<Vec<f64>> {
    if spec.levels < 2 || pair + 1 >= spec.levels {
        return Err(Error::Study(format!(
            "pair {pair} out of range for {} levels",
            spec.levels
        )));
    }
    let mut mesh = build_structured(spec.domain, spec.base_n)?;
    for _ in 0..pair {
        mesh = refine(&mesh)?;
    }
    let k_coarse = level_step(spec, mesh.h);
    let fine = refine(&mesh)?;
    let k_fine = level_step(spec, fine.h);
    step_ratio(k_coarse, k_fine)?;
    let n_coarse = (spec.t_end / k_coarse + 1e-9).floor() as usize;
    if n_coarse == 0 {
        return Err(Error::Study(
            "no common comparison times: coarse level takes zero steps".into(),
        ));
    }
    Ok((1..=n_coarse).map(|m| m as f64 * k_coarse).collect())
}

struct LevelRun {
    mesh: Mesh,
    ops: FemOperators,
    traj: Trajectory,
    k: f64,
}

fn run_level(spec: &StudySpec, mesh: Mesh) -> Result<LevelRun> {
    let k = level_step(spec, mesh.h);
    let ops = assemble_mass_stiffness(mesh.clone());
    let cfg = SchemeConfig {
        coeff: spec.coeff,
        k,
        t_end: spec.t_end,
        scheme: spec.scheme,
        bdf2_init: spec.bdf2_init,
        solver: spec.solver,
        tol: spec.tol,
    };
    let init = spec.initial;
    let traj = run(
        |x, y| init.value(x, y),
        |x, y| init.gradient(x, y),
        &ops,
        &cfg,
    )?;
    Ok(LevelRun { mesh, ops, traj, k })
}

fn max_energy_gap(spec: &StudySpec, level: &LevelRun) -> Result<f64> {
    let mut gap = 0.0f64;
    for (i, s) in level.traj.states.iter().enumerate() {
        let g = match spec.scheme {
            Scheme::Euler => energy_gap_euler(s, &spec.coeff, &level.ops)?,
            Scheme::Bdf2 => {
                if i == 0 {
                    continue;
                }
                energy_gap_bdf2(s, &level.traj.states[i - 1], &spec.coeff, &level.ops)?
            }
        };
        gap = gap.max(g);
    }
    Ok(gap)
}

/// Runs the whole refinement family and assembles the rate report.
pub fn run_study(spec: &StudySpec) -> Result<RateReport> {
    if spec.levels < 2 {
        return Err(Error::Study("a rate needs at least 2 levels".into()));
    }
    let mut pairs = Vec::new();
    let mut energy_gaps = Vec::new();
    let mut level_ns = Vec::new();

    let mesh0 = build_structured(spec.domain, spec.base_n)?;
    let mut prev = run_level(spec, mesh0)?;
    energy_gaps.push(max_energy_gap(spec, &prev)?);
    level_ns.push(prev.mesh.n);

    for _ in 1..spec.levels {
        let fine_mesh = refine(&prev.mesh)?;
        let fine = run_level(spec, fine_mesh)?;
        energy_gaps.push(max_energy_gap(spec, &fine)?);
        level_ns.push(fine.mesh.n);

        let ratio = step_ratio(prev.k, fine.k)?;
        let n_coarse_steps = prev.traj.states.len() - 1;
        let mut max_l2 = 0.0f64;
        let mut max_h1 = 0.0f64;
        let mut max_linf = 0.0f64;
        let mut compared = 0usize;
        for m in 1..=n_coarse_steps {
            let fine_index = ratio * m;
            if fine_index >= fine.traj.states.len() {
                break;
            }
            let coarse_on_fine = prolong(&prev.mesh, &fine.mesh, &prev.traj.states[m].u)?;
            let diff = crate::fem::NodalField::linear_comb(
                1.0,
                &coarse_on_fine,
                -1.0,
                &fine.traj.states[fine_index].u,
            );
            let n = norms(&diff, &fine.ops);
            max_l2 = max_l2.max(n.l2);
            max_h1 = max_h1.max(n.h1);
            max_linf = max_linf.max(n.linf);
            compared += 1;
        }
        if compared == 0 {
            return Err(Error::Study(
                "no common comparison times between levels".into(),
            ));
        }
        pairs.push(PairErrors {
            coarse_n: prev.mesh.n,
            h: prev.mesh.h,
            k: prev.k,
            l2: max_l2,
            h1: max_h1,
            linf: max_linf,
        });
        prev = fine;
    }

    let rates = pairs
        .windows(2)
        .map(|w| RateEntry {
            l2: (w[0].l2 / w[1].l2).log2(),
            h1: (w[0].h1 / w[1].h1).log2(),
            linf: (w[0].linf / w[1].linf).log2(),
        })
        .collect();

    Ok(RateReport {
        pairs,
        rates,
        energy_gaps,
        level_ns,
    })
}

/// Rates from a raw error sequence; exposed for report assembly and
/// testing.
pub fn rates_from_errors(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_quartering_gives_rate_two() {
        let rates = rates_from_errors(&[4.0, 1.0, 0.25]);
        assert_eq!(rates.len(), 2);
        assert!((rates[0] - 2.0).abs() < 1e-12);
        assert!((rates[1] - 2.0).abs() < 1e-12);
    }

    fn small_spec() -> StudySpec {
        StudySpec {
            domain: Rectangle::symmetric_unit(),
            base_n: 2,
            levels: 3,
            coupling: Coupling::FixedK { k: 1e-3 },
            scheme: Scheme::Euler,
            coeff: Coefficients {
                gamma: 1.0,
                alpha: 1.0,
                sigma: 1.0,
                kappa: 1.0,
                mu: 1.0,
            },
            initial: InitialData::Simulation1,
            t_end: 5e-3,
            solver: SolverKind::Lu,
            tol: 1e-10,
            bdf2_init: Bdf2Init::EulerSubsteps,
        }
    }

    #[test]
    fn sample_times_fixed_k() {
        let spec = StudySpec {
            t_end: 1e-3,
            coupling: Coupling::FixedK { k: 1e-4 },
            ..small_spec()
        };
        let times = sample_times(&spec, 0).unwrap();
        assert_eq!(times.len(), 10);
        assert!((times[0] - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn sample_times_proportional_nests() {
        let spec = StudySpec {
            coupling: Coupling::Proportional { c: 0.05 },
            t_end: 0.2,
            ..small_spec()
        };
        let times = sample_times(&spec, 0).unwrap();
        assert!(!times.is_empty());
    }

    #[test]
    fn non_nested_time_grids_rejected() {
        assert!(step_ratio(3e-3, 2e-3).is_err());
        assert!(step_ratio(2e-3, 1e-3).is_ok());
    }

    #[test]
    fn self_consistency_zero_error_against_itself() {
        // A coarse level compared against the prolongation of its own
        // states must give exactly zero error norms.
        let spec = small_spec();
        let mesh = build_structured(spec.domain, spec.base_n).unwrap();
        let level = run_level(&spec, mesh).unwrap();
        let fine_mesh = refine(&level.mesh).unwrap();
        let fine_ops = assemble_mass_stiffness(fine_mesh.clone());
        for s in &level.traj.states {
            let up = prolong(&level.mesh, &fine_mesh, &s.u).unwrap();
            let diff = crate::fem::NodalField::linear_comb(1.0, &up, -1.0, &up);
            let n = norms(&diff, &fine_ops);
            assert_eq!(n.l2, 0.0);
            assert_eq!(n.h1, 0.0);
        }
    }
}
