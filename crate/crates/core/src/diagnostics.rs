//! Energies, norms, and SAV-consistency diagnostics along trajectories.

use crate::error::Result;
use crate::fem::{sav_load_vector, Coefficients, FemOperators, NodalField};
use crate::stepper::{Scheme, State, Trajectory};

/// Diagnostics for one trajectory point.
#[derive(Clone, Copy, Debug)]
pub struct EnergyRecord {
    pub step_index: usize,
    pub t: f64,
    /// True micromagnetic energy.
    pub energy: f64,
    /// Modified energy dissipated by the Euler scheme.
    pub energy_tilde: f64,
    /// Modified energy dissipated by the BDF2 scheme (needs a
    /// predecessor state, so absent at the initial point).
    pub energy_hat: Option<f64>,
    pub h_norm_sq: f64,
    pub r: f64,
    /// `|r - sqrt(F[u])|`.
    pub r_drift: f64,
}

impl EnergyRecord {
    /// The modified energy relevant to the scheme that produced the
    /// trajectory: the BDF2 one when defined, the Euler one otherwise.
    pub fn modified(&self) -> f64 {
        self.energy_hat.unwrap_or(self.energy_tilde)
    }
}

fn quadratic_part(u: &NodalField, coeff: &Coefficients, ops: &FemOperators) -> f64 {
    let grad_sq = ops.stiffness3.bilinear(u.as_slice(), u.as_slice());
    let l2_sq = ops.mass3.bilinear(u.as_slice(), u.as_slice());
    0.5 * coeff.sigma * grad_sq + 0.5 * coeff.kappa * coeff.mu * l2_sq
}

/// True energy `sigma/2 ||grad u||^2 + kappa mu / 2 ||u||^2 + F[u]`.
pub fn true_energy(u: &NodalField, coeff: &Coefficients, ops: &FemOperators) -> Result<f64> {
    let (_, f_val) = sav_load_vector(u, coeff, ops)?;
    Ok(quadratic_part(u, coeff, ops) + f_val)
}

/// Modified energy of the Euler scheme: quadratic part plus `r^2`.
pub fn modified_energy_euler(state: &State, coeff: &Coefficients, ops: &FemOperators) -> f64 {
    quadratic_part(&state.u, coeff, ops) + state.r * state.r
}

/// Modified energy of the BDF2 scheme, evaluated from two consecutive
/// states.
pub fn modified_energy_bdf2(
    curr: &State,
    prev: &State,
    coeff: &Coefficients,
    ops: &FemOperators,
) -> f64 {
    let extrap = NodalField::linear_comb(2.0, &curr.u, -1.0, &prev.u);
    let r_extrap = 2.0 * curr.r - prev.r;
    modified_energy_euler(curr, coeff, ops) + quadratic_part(&extrap, coeff, ops)
        + r_extrap * r_extrap
}

/// L2, H1, and nodal max norms of a 3-vector field.
#[derive(Clone, Copy, Debug)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
    pub linf: f64,
}

pub fn norms(u: &NodalField, ops: &FemOperators) -> Norms {
    let l2_sq = ops.mass3.bilinear(u.as_slice(), u.as_slice());
    let grad_sq = ops.stiffness3.bilinear(u.as_slice(), u.as_slice());
    let mut linf = 0.0f64;
    for i in 0..u.num_nodes() {
        let v = u.get(i);
        linf = linf.max((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
    }
    Norms {
        l2: l2_sq.max(0.0).sqrt(),
        h1: (l2_sq + grad_sq).max(0.0).sqrt(),
        linf,
    }
}

/// `|modified energy - true energy|` for an Euler state; the quadratic
/// terms cancel, leaving `|r^2 - F[u]|`.
pub fn energy_gap_euler(state: &State, coeff: &Coefficients, ops: &FemOperators) -> Result<f64> {
    let e = true_energy(&state.u, coeff, ops)?;
    Ok((modified_energy_euler(state, coeff, ops) - e).abs())
}

/// `|modified energy - true energy|` for a BDF2 state pair.
pub fn energy_gap_bdf2(
    curr: &State,
    prev: &State,
    coeff: &Coefficients,
    ops: &FemOperators,
) -> Result<f64> {
    let e = true_energy(&curr.u, coeff, ops)?;
    Ok((modified_energy_bdf2(curr, prev, coeff, ops) - e).abs())
}

/// Builds per-state energy records for a trajectory.
pub fn energy_records(
    traj: &Trajectory,
    scheme: Scheme,
    coeff: &Coefficients,
    ops: &FemOperators,
) -> Result<Vec<EnergyRecord>> {
    let mut h_by_index = std::collections::HashMap::new();
    for s in &traj.steps {
        h_by_index.insert(s.step_index, s.h_norm_sq);
    }
    let mut out = Vec::with_capacity(traj.states.len());
    for (i, state) in traj.states.iter().enumerate() {
        let (_, f_val) = sav_load_vector(&state.u, coeff, ops)?;
        let energy = quadratic_part(&state.u, coeff, ops) + f_val;
        let energy_tilde = modified_energy_euler(state, coeff, ops);
        let energy_hat = match scheme {
            Scheme::Bdf2 if i >= 1 => Some(modified_energy_bdf2(
                state,
                &traj.states[i - 1],
                coeff,
                ops,
            )),
            _ => None,
        };
        out.push(EnergyRecord {
            step_index: state.step_index,
            t: state.t,
            energy,
            energy_tilde,
            energy_hat,
            h_norm_sq: h_by_index.get(&state.step_index).copied().unwrap_or(0.0),
            r: state.r,
            r_drift: (state.r - f_val.sqrt()).abs(),
        });
    }
    Ok(out)
}
