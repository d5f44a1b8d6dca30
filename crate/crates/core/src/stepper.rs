//! Linear energy-stable SAV time steppers.
//!
//! Two schemes are implemented over the assembled operators: a
//! semi-implicit Euler scheme and a linearly extrapolated BDF2 scheme.
//! Each step solves one sparse linear system in the unknowns `(u, H)`
//! with the scalar auxiliary variable `r` attached as a rank-one border
//! and eliminated exactly through a scalar Schur complement. Keeping the
//! effective field `H` as an explicit unknown avoids forming `M^{-1} K`
//! and preserves sparsity.

use crate::error::{Error, Result};
use crate::fem::{
    cross_matrix, ritz_project, sav_load_vector, Coefficients, FemOperators, NodalField,
};
use crate::sparse::{solve_bordered, BorderedSystem, CsrMatrix, SolverKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Bdf2,
}

/// How the BDF2 scheme obtains its second starting value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bdf2Init {
    /// `ceil(1/k)` semi-implicit Euler substeps of size `k^2`, the last
    /// one shortened to land exactly on `t = k`. Capped at 10^6 substeps.
    EulerSubsteps,
    /// One implicitly linearised Euler step of size `k`, iterated to a
    /// fixed point of the linearisation. Local error O(k^2).
    ImplicitOneStep,
}

#[derive(Clone, Copy, Debug)]
pub struct SchemeConfig {
    pub coeff: Coefficients,
    /// Time step size.
    pub k: f64,
    /// Time horizon; the number of steps is `floor(T / k)`.
    pub t_end: f64,
    pub scheme: Scheme,
    pub bdf2_init: Bdf2Init,
    pub solver: SolverKind,
    /// Relative residual tolerance for linear solves.
    pub tol: f64,
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        self.coeff.validate()?;
        if !(self.k > 0.0 && self.k <= self.t_end) {
            return Err(Error::Parse(format!(
                "time step must satisfy 0 < k <= T, got k = {}, T = {}",
                self.k, self.t_end
            )));
        }
        Ok(())
    }

    pub fn num_steps(&self) -> usize {
        // Guard against T/k landing one ulp below an integer.
        (self.t_end / self.k + 1e-9).floor() as usize
    }
}

/// One point of a discrete trajectory.
#[derive(Clone, Debug)]
pub struct State {
    pub u: NodalField,
    /// Scalar auxiliary variable; approximates `sqrt(F[u])`.
    pub r: f64,
    pub t: f64,
    pub step_index: usize,
}

/// Per-step solver byproducts.
#[derive(Clone, Debug)]
pub struct StepDiagnostics {
    /// The effective-field unknown of the step.
    pub h_field: NodalField,
    pub schur_denominator: f64,
    pub linear_residual: f64,
}

/// Initial state: Ritz projection of the initial data, with
/// `r0 = sqrt(F[u0])`.
pub fn init_euler(
    value: impl Fn(f64, f64) -> [f64; 3],
    gradient: impl Fn(f64, f64) -> [[f64; 2]; 3],
    ops: &FemOperators,
    coeff: &Coefficients,
    tol: f64,
) -> Result<State> {
    let u = ritz_project(value, gradient, ops, tol)?;
    let (_, f0) = sav_load_vector(&u, coeff, ops)?;
    Ok(State {
        u,
        r: f0.sqrt(),
        t: 0.0,
        step_index: 0,
    })
}

/// Assembles and solves one linear SAV step.
///
/// The weak form shared by both schemes, with `w` the linearisation
/// point, `a_t` the leading time coefficient, and `(G, F) = G(w), F(w)`:
///   a_t M3 u + (gamma C(w) - alpha M3) H = M3 rhs_time
///   sigma K3 u + kappa mu M3 u + M3 H + (r / sqrt(F)) G = 0
///   corner r - (corner / (2 sqrt F)) G.u = r_comb - (1 / (2 sqrt F)) G.u_comb
fn sav_linear_step(
    ops: &FemOperators,
    coeff: &Coefficients,
    solver: SolverKind,
    tol: f64,
    lin: &NodalField,
    a_t: f64,
    rhs_time: &NodalField,
    corner: f64,
    r_comb: f64,
    u_comb: &NodalField,
) -> Result<(NodalField, f64, StepDiagnostics)> {
    let n3 = 3 * ops.num_nodes();
    let (g_vec, f_val) = sav_load_vector(lin, coeff, ops)?;
    let sqrt_f = f_val.sqrt();
    let cross = cross_matrix(lin, ops)?;

    let nnz_estimate = 2 * ops.mass3.nnz() + ops.stiffness3.nnz() + cross.nnz() + ops.mass3.nnz();
    let mut triplets = Vec::with_capacity(nnz_estimate);
    for (r, c, v) in ops.mass3.entries() {
        triplets.push((r, c, a_t * v));
        triplets.push((r, n3 + c, -coeff.alpha * v));
        triplets.push((n3 + r, c, coeff.kappa * coeff.mu * v));
        triplets.push((n3 + r, n3 + c, v));
    }
    for (r, c, v) in ops.stiffness3.entries() {
        triplets.push((n3 + r, c, coeff.sigma * v));
    }
    for (r, c, v) in cross.entries() {
        triplets.push((r, n3 + c, coeff.gamma * v));
    }
    let a = CsrMatrix::from_triplets(2 * n3, 2 * n3, &triplets);

    let mut b_col = vec![0.0; 2 * n3];
    let mut b_row = vec![0.0; 2 * n3];
    for i in 0..n3 {
        b_col[n3 + i] = g_vec[i] / sqrt_f;
        b_row[i] = -corner / (2.0 * sqrt_f) * g_vec[i];
    }

    let mut rhs = vec![0.0; 2 * n3 + 1];
    ops.mass3.matvec_into(rhs_time.as_slice(), &mut rhs[..n3]);
    let g_dot_comb: f64 = g_vec
        .iter()
        .zip(u_comb.as_slice())
        .map(|(g, u)| g * u)
        .sum();
    rhs[2 * n3] = r_comb - g_dot_comb / (2.0 * sqrt_f);

    let sys = BorderedSystem {
        a,
        b_col,
        b_row,
        corner,
        rhs,
    };
    let sol = solve_bordered(&sys, tol, solver)?;
    let u_new = NodalField::from_flat(sol.core[..n3].to_vec());
    let h_field = NodalField::from_flat(sol.core[n3..].to_vec());
    Ok((
        u_new,
        sol.scalar,
        StepDiagnostics {
            h_field,
            schur_denominator: sol.schur_denominator,
            linear_residual: sol.residual,
        },
    ))
}

fn euler_step_sized(
    state: &State,
    dt: f64,
    lin: &NodalField,
    ops: &FemOperators,
    cfg: &SchemeConfig,
) -> Result<(State, StepDiagnostics)> {
    let rhs_time = NodalField::linear_comb(1.0 / dt, &state.u, 0.0, &state.u);
    let (u, r, diag) = sav_linear_step(
        ops,
        &cfg.coeff,
        cfg.solver,
        cfg.tol,
        lin,
        1.0 / dt,
        &rhs_time,
        1.0,
        state.r,
        &state.u,
    )?;
    Ok((
        State {
            u,
            r,
            t: state.t + dt,
            step_index: state.step_index + 1,
        },
        diag,
    ))
}

/// One step of the semi-implicit Euler SAV scheme.
pub fn euler_step(
    state: &State,
    ops: &FemOperators,
    cfg: &SchemeConfig,
) -> Result<(State, StepDiagnostics)> {
    euler_step_sized(state, cfg.k, &state.u, ops, cfg)
}

/// One step of the linearly extrapolated BDF2 SAV scheme.
pub fn bdf2_step(
    prev2: &State,
    prev1: &State,
    ops: &FemOperators,
    cfg: &SchemeConfig,
) -> Result<(State, StepDiagnostics)> {
    let k = cfg.k;
    let dt = prev1.t - prev2.t;
    if (dt - k).abs() > 1e-9 * k.max(1.0) {
        return Err(Error::Parse(format!(
            "BDF2 history spacing {dt} does not match the step size {k}"
        )));
    }
    let extrapolated = NodalField::linear_comb(2.0, &prev1.u, -1.0, &prev2.u);
    let rhs_time = NodalField::linear_comb(2.0 / k, &prev1.u, -0.5 / k, &prev2.u);
    let u_comb = NodalField::linear_comb(4.0, &prev1.u, -1.0, &prev2.u);
    let (u, r, diag) = sav_linear_step(
        ops,
        &cfg.coeff,
        cfg.solver,
        cfg.tol,
        &extrapolated,
        1.5 / k,
        &rhs_time,
        3.0,
        4.0 * prev1.r - prev2.r,
        &u_comb,
    )?;
    Ok((
        State {
            u,
            r,
            t: prev1.t + k,
            step_index: prev1.step_index + 1,
        },
        diag,
    ))
}

const SUBSTEP_CAP: usize = 1_000_000;

/// Produces the two starting states of the BDF2 scheme.
pub fn bdf2_init(
    value: impl Fn(f64, f64) -> [f64; 3],
    gradient: impl Fn(f64, f64) -> [[f64; 2]; 3],
    ops: &FemOperators,
    cfg: &SchemeConfig,
) -> Result<(State, State)> {
    let state0 = init_euler(value, gradient, ops, &cfg.coeff, cfg.tol)?;
    let k = cfg.k;
    let state1 = match cfg.bdf2_init {
        Bdf2Init::EulerSubsteps => {
            let mut m = (1.0 / k).ceil() as usize;
            let mut dt = k * k;
            if m > SUBSTEP_CAP {
                eprintln!(
                    "warning: BDF2 initialisation capped at {SUBSTEP_CAP} Euler substeps \
                     (requested {m}); substep size coarsened accordingly"
                );
                m = SUBSTEP_CAP;
                dt = k / m as f64;
            }
            let mut s = state0.clone();
            for j in 0..m {
                let step_dt = if j + 1 == m { k - s.t } else { dt };
                let lin = s.u.clone();
                let (next, _) = euler_step_sized(&s, step_dt, &lin, ops, cfg)?;
                s = next;
            }
            State {
                u: s.u,
                r: s.r,
                t: k,
                step_index: 1,
            }
        }
        Bdf2Init::ImplicitOneStep => {
            let mut lin = state0.u.clone();
            let mut result = None;
            for _ in 0..50 {
                let (next, diag) = euler_step_sized(&state0, k, &lin, ops, cfg)?;
                let diff = next.u.max_abs_diff(&lin);
                let scale = next
                    .u
                    .as_slice()
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs()))
                    .max(1.0);
                lin = next.u.clone();
                let converged = diff <= 1e-12 * scale;
                result = Some((next, diag));
                if converged {
                    break;
                }
            }
            let (s, _) = result.expect("at least one iteration ran");
            s
        }
    };
    Ok((state0, state1))
}

/// Per-step scalar diagnostics kept along a trajectory.
#[derive(Clone, Copy, Debug)]
pub struct StepRecord {
    pub step_index: usize,
    pub t: f64,
    /// `||H_h^n||_{L2}^2` from the step's effective-field unknown.
    pub h_norm_sq: f64,
    pub schur_denominator: f64,
    pub linear_residual: f64,
}

/// A completed trajectory: all states (including the initial one) and the
/// per-step diagnostics of the scheme's regular steps.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub steps: Vec<StepRecord>,
}

/// Runs a full trajectory of `floor(T / k)` steps.
pub fn run(
    value: impl Fn(f64, f64) -> [f64; 3],
    gradient: impl Fn(f64, f64) -> [[f64; 2]; 3],
    ops: &FemOperators,
    cfg: &SchemeConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n_steps = cfg.num_steps();
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut steps = Vec::with_capacity(n_steps);
    let record = |diag: &StepDiagnostics, s: &State, ops: &FemOperators| StepRecord {
        step_index: s.step_index,
        t: s.t,
        h_norm_sq: ops
            .mass3
            .bilinear(diag.h_field.as_slice(), diag.h_field.as_slice()),
        schur_denominator: diag.schur_denominator,
        linear_residual: diag.linear_residual,
    };
    match cfg.scheme {
        Scheme::Euler => {
            let state0 = init_euler(&value, &gradient, ops, &cfg.coeff, cfg.tol)?;
            states.push(state0);
            for n in 1..=n_steps {
                let (next, diag) = euler_step(states.last().unwrap(), ops, cfg).map_err(|e| {
                    Error::StepFailed {
                        step_index: n,
                        source: Box::new(e),
                    }
                })?;
                steps.push(record(&diag, &next, ops));
                states.push(next);
            }
        }
        Scheme::Bdf2 => {
            let (state0, state1) = bdf2_init(&value, &gradient, ops, cfg)?;
            states.push(state0);
            states.push(state1);
            for n in 2..=n_steps {
                let len = states.len();
                let (next, diag) = bdf2_step(&states[len - 2], &states[len - 1], ops, cfg)
                    .map_err(|e| Error::StepFailed {
                        step_index: n,
                        source: Box::new(e),
                    })?;
                steps.push(record(&diag, &next, ops));
                states.push(next);
            }
        }
    }
    Ok(Trajectory { states, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{modified_energy_bdf2, modified_energy_euler};
    use crate::fem::assemble_mass_stiffness;
    use crate::initial::InitialData;
    use crate::mesh::{build_structured, Rectangle};

    fn ops_on(n: usize) -> FemOperators {
        assemble_mass_stiffness(build_structured(Rectangle::symmetric_unit(), n).unwrap())
    }

    fn cfg(scheme: Scheme, k: f64, t_end: f64) -> SchemeConfig {
        SchemeConfig {
            coeff: Coefficients {
                gamma: 50.0,
                alpha: 0.5,
                sigma: 0.5,
                kappa: 1.0,
                mu: 1.0,
            },
            k,
            t_end,
            scheme,
            bdf2_init: Bdf2Init::EulerSubsteps,
            solver: SolverKind::Lu,
            tol: 1e-11,
        }
    }

    fn traj_of(data: InitialData, cfg: &SchemeConfig, ops: &FemOperators) -> Trajectory {
        run(
            |x, y| data.value(x, y),
            |x, y| data.gradient(x, y),
            ops,
            cfg,
        )
        .unwrap()
    }

    #[test]
    fn step_count_and_times() {
        let c = cfg(Scheme::Euler, 1e-2, 0.05);
        assert_eq!(c.num_steps(), 5);
        let ops = ops_on(4);
        let traj = traj_of(InitialData::Simulation1, &c, &ops);
        assert_eq!(traj.states.len(), 6);
        assert_eq!(traj.steps.len(), 5);
        assert!((traj.states[5].t - 0.05).abs() < 1e-12);
    }

    #[test]
    fn invalid_step_rejected() {
        let c = cfg(Scheme::Euler, 0.2, 0.1);
        assert!(c.validate().is_err());
        let c = cfg(Scheme::Euler, 0.0, 0.1);
        assert!(c.validate().is_err());
    }

    #[test]
    fn initial_r_matches_sqrt_f() {
        let ops = ops_on(6);
        let coeff = cfg(Scheme::Euler, 1e-2, 1e-2).coeff;
        let data = InitialData::Simulation1;
        let s = init_euler(
            |x, y| data.value(x, y),
            |x, y| data.gradient(x, y),
            &ops,
            &coeff,
            1e-11,
        )
        .unwrap();
        let (_, f0) = sav_load_vector(&s.u, &coeff, &ops).unwrap();
        assert!((s.r - f0.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn euler_modified_energy_nonincreasing_large_step() {
        // Large k: stability must hold unconditionally.
        let ops = ops_on(8);
        let c = cfg(Scheme::Euler, 0.1, 1.0);
        let traj = traj_of(InitialData::Simulation1, &c, &ops);
        let mut prev = f64::INFINITY;
        for s in &traj.states {
            let e = modified_energy_euler(s, &c.coeff, &ops);
            assert!(e <= prev + 1e-10 * prev.abs().min(1e10), "{e} > {prev}");
            prev = e;
        }
    }

    #[test]
    fn bdf2_modified_energy_nonincreasing() {
        let ops = ops_on(8);
        let mut c = cfg(Scheme::Bdf2, 5e-2, 0.5);
        c.coeff = Coefficients {
            gamma: 100.0,
            alpha: 0.1,
            sigma: 0.1,
            kappa: 2.0,
            mu: 1.0,
        };
        let traj = traj_of(InitialData::Simulation2, &c, &ops);
        let mut prev = f64::INFINITY;
        for i in 1..traj.states.len() {
            let e = modified_energy_bdf2(&traj.states[i], &traj.states[i - 1], &c.coeff, &ops);
            assert!(e <= prev + 1e-10 * prev.abs().min(1e10), "step {i}: {e} > {prev}");
            prev = e;
        }
    }

    #[test]
    fn euler_energy_identity_sigma_mu_one() {
        // With sigma = mu = 1 the per-step identity
        //   dE~ + alpha k ||H||^2 + (dissipation of increments) = 0
        // holds to solver accuracy; in particular
        //   E~^n - E~^{n-1} <= -alpha k ||H^n||^2 + eps.
        let ops = ops_on(8);
        let mut c = cfg(Scheme::Euler, 1e-3, 1e-2);
        c.coeff.sigma = 1.0;
        let traj = traj_of(InitialData::Simulation1, &c, &ops);
        for (i, rec) in traj.steps.iter().enumerate() {
            let e_prev = modified_energy_euler(&traj.states[i], &c.coeff, &ops);
            let e_curr = modified_energy_euler(&traj.states[i + 1], &c.coeff, &ops);
            let du = NodalField::linear_comb(1.0, &traj.states[i + 1].u, -1.0, &traj.states[i].u);
            let dr = traj.states[i + 1].r - traj.states[i].r;
            let incr = 0.5 * c.coeff.sigma * ops.stiffness3.bilinear(du.as_slice(), du.as_slice())
                + 0.5 * c.coeff.kappa * c.coeff.mu * ops.mass3.bilinear(du.as_slice(), du.as_slice())
                + dr * dr;
            let residual = e_curr - e_prev + c.coeff.alpha * c.k * rec.h_norm_sq + incr;
            let scale = (c.coeff.alpha * c.k * rec.h_norm_sq).max(1e-300);
            assert!(
                residual.abs() <= 1e-8 * scale.max(e_prev.abs() * 1e-10),
                "step {}: residual {residual:.3e} vs scale {scale:.3e}",
                i + 1
            );
        }
    }

    #[test]
    fn bdf2_init_strategies_agree_to_second_order() {
        let ops = ops_on(6);
        let data = InitialData::Simulation1;
        let mut diffs = Vec::new();
        for k in [2e-3, 1e-3] {
            let mut c = cfg(Scheme::Bdf2, k, k);
            c.coeff.gamma = 1.0;
            c.bdf2_init = Bdf2Init::EulerSubsteps;
            let (_, a) = bdf2_init(
                |x, y| data.value(x, y),
                |x, y| data.gradient(x, y),
                &ops,
                &c,
            )
            .unwrap();
            c.bdf2_init = Bdf2Init::ImplicitOneStep;
            let (_, b) = bdf2_init(
                |x, y| data.value(x, y),
                |x, y| data.gradient(x, y),
                &ops,
                &c,
            )
            .unwrap();
            diffs.push(a.u.max_abs_diff(&b.u));
        }
        // Both are O(k^2)-accurate starts, so their gap shrinks ~4x per halving.
        assert!(diffs[1] < diffs[0] / 2.5, "{diffs:?}");
    }

    #[test]
    fn bdf2_rejects_bad_history_spacing() {
        let ops = ops_on(2);
        let c = cfg(Scheme::Bdf2, 1e-2, 1e-1);
        let data = InitialData::Simulation1;
        let s0 = init_euler(
            |x, y| data.value(x, y),
            |x, y| data.gradient(x, y),
            &ops,
            &c.coeff,
            1e-11,
        )
        .unwrap();
        let mut s1 = s0.clone();
        s1.t = 0.5; // wrong spacing
        s1.step_index = 1;
        assert!(bdf2_step(&s0, &s1, &ops, &c).is_err());
    }

    #[test]
    fn temporal_orders_against_refined_reference() {
        // Fixed mesh, gentle coefficients: halving k must show first
        // order for Euler and approach second order for BDF2.
        let ops = ops_on(8);
        let coeff = Coefficients {
            gamma: 1.0,
            alpha: 0.5,
            sigma: 0.5,
            kappa: 1.0,
            mu: 1.0,
        };
        let t_end = 0.2;
        let data = InitialData::Simulation1;
        let solve = |scheme: Scheme, steps: usize| {
            let c = SchemeConfig {
                coeff,
                k: t_end / steps as f64,
                t_end,
                scheme,
                bdf2_init: Bdf2Init::ImplicitOneStep,
                solver: SolverKind::Lu,
                tol: 1e-12,
            };
            traj_of(data, &c, &ops)
        };
        for (scheme, expected_last) in [(Scheme::Euler, 0.8..1.2), (Scheme::Bdf2, 1.55..2.2)] {
            let reference = solve(scheme, 512);
            let ref_u = &reference.states.last().unwrap().u;
            let errs: Vec<f64> = [16usize, 32, 64]
                .iter()
                .map(|&s| {
                    let traj = solve(scheme, s);
                    let du =
                        NodalField::linear_comb(1.0, &traj.states.last().unwrap().u, -1.0, ref_u);
                    ops.mass3.bilinear(du.as_slice(), du.as_slice()).sqrt()
                })
                .collect();
            let rates: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
            assert!(
                expected_last.contains(rates.last().unwrap()),
                "{scheme:?}: rates {rates:?} outside {expected_last:?}"
            );
        }
    }

    #[test]
    fn gmres_matches_lu_trajectory() {
        let ops = ops_on(4);
        let mut c = cfg(Scheme::Euler, 1e-2, 5e-2);
        let lu = traj_of(InitialData::Simulation1, &c, &ops);
        c.solver = SolverKind::Gmres;
        c.tol = 1e-12;
        let gm = traj_of(InitialData::Simulation1, &c, &ops);
        let diff = lu
            .states
            .last()
            .unwrap()
            .u
            .max_abs_diff(&gm.states.last().unwrap().u);
        assert!(diff < 1e-8, "solver mismatch {diff:.3e}");
    }
}
