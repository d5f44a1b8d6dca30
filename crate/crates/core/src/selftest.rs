//! Built-in invariant checks and the constant-field oracle.
//!
//! For spatially constant data every Galerkin operator degenerates to a
//! pointwise 3-vector identity, so each SAV step collapses to a dense
//! 7-unknown linear system in `(u, H, r)`. That system is coded here
//! independently of the sparse stepper (plain Gaussian elimination, no
//! shared assembly) and serves as an exact oracle for both schemes.
//!
//! `run_selftests` bundles the oracle comparison with the operator
//! property suite; the CLI's `check` subcommand prints its report.

use crate::error::{Error, Result};
use crate::fem::{
    assemble_mass_stiffness, cross_matrix, l2_project, ritz_project, Coefficients, NodalField,
};
use crate::mesh::{build_structured, eval_p1, Rectangle};
use crate::sparse::{solve_bordered, BorderedSystem, CsrMatrix, SolverKind};
use crate::stepper::{run, Bdf2Init, Scheme, SchemeConfig};

/// Dense linear solve with partial pivoting; `a` is row-major `n x n`.
fn gauss_solve(n: usize, a: &mut [f64], b: &mut [f64]) -> Result<Vec<f64>> {
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() < 1e-300 {
            return Err(Error::SingularMatrix("dense oracle system".into()));
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r * n + c] * x[c];
        }
        x[r] = s / a[r * n + r];
    }
    Ok(x)
}

fn norm_sq(v: [f64; 3]) -> f64 {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

/// Oracle state: the constant vector value and the auxiliary scalar.
#[derive(Clone, Copy, Debug)]
pub struct OracleState {
    pub u: [f64; 3],
    pub r: f64,
}

/// The dense 7-unknown constant-field oracle.
pub struct ConstantOracle {
    pub coeff: Coefficients,
    /// Domain area `|D|`.
    pub area: f64,
}

impl ConstantOracle {
    /// `F[u] = (kappa / 4)(|u|^4 + 1) |D|` for constant `u`.
    pub fn f_value(&self, u: [f64; 3]) -> f64 {
        let s = norm_sq(u);
        self.coeff.kappa / 4.0 * (s * s + 1.0) * self.area
    }

    /// Exact initial state for constant data.
    pub fn init(&self, u0: [f64; 3]) -> OracleState {
        OracleState {
            u: u0,
            r: self.f_value(u0).sqrt(),
        }
    }

    /// One linear SAV step around the linearisation point `w`.
    ///
    /// Solves, for unknowns `(u, H, r)`:
    ///   a_t u + gamma w x H - alpha H = rhs_time
    ///   kappa mu u + H + (r / sqrt F) g(w) = 0
    ///   corner r - (corner |D| / (2 sqrt F)) g(w) . u
    ///       = r_comb - (|D| / (2 sqrt F)) g(w) . u_comb
    /// with `g(w) = kappa |w|^2 w` and `F = F[w]`.
    #[allow(clippy::too_many_arguments)]
    fn linear_step(
        &self,
        w: [f64; 3],
        a_t: f64,
        rhs_time: [f64; 3],
        corner: f64,
        r_comb: f64,
        u_comb: [f64; 3],
    ) -> Result<OracleState> {
        let c = &self.coeff;
        let g: [f64; 3] = {
            let s = c.kappa * norm_sq(w);
            [s * w[0], s * w[1], s * w[2]]
        };
        let sqrt_f = self.f_value(w).sqrt();
        let mut a = vec![0.0; 49];
        let mut b = vec![0.0; 7];
        // Unknown order: u0 u1 u2 H0 H1 H2 r.
        for i in 0..3 {
            a[i * 7 + i] = a_t;
            a[i * 7 + 3 + i] -= c.alpha;
            b[i] = rhs_time[i];
        }
        // gamma [w]_x acting on H.
        let wx = [
            [0.0, -w[2], w[1]],
            [w[2], 0.0, -w[0]],
            [-w[1], w[0], 0.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                a[i * 7 + 3 + j] += c.gamma * wx[i][j];
            }
        }
        for i in 0..3 {
            a[(3 + i) * 7 + i] = c.kappa * c.mu;
            a[(3 + i) * 7 + 3 + i] = 1.0;
            a[(3 + i) * 7 + 6] = g[i] / sqrt_f;
        }
        let scale = self.area / (2.0 * sqrt_f);
        for i in 0..3 {
            a[6 * 7 + i] = -corner * scale * g[i];
        }
        a[6 * 7 + 6] = corner;
        b[6] = r_comb - scale * (g[0] * u_comb[0] + g[1] * u_comb[1] + g[2] * u_comb[2]);

        let x = gauss_solve(7, &mut a, &mut b)?;
        Ok(OracleState {
            u: [x[0], x[1], x[2]],
            r: x[6],
        })
    }

    /// One semi-implicit Euler step of size `dt`.
    pub fn euler_step(&self, prev: OracleState, dt: f64) -> Result<OracleState> {
        let rhs = [prev.u[0] / dt, prev.u[1] / dt, prev.u[2] / dt];
        self.linear_step(prev.u, 1.0 / dt, rhs, 1.0, prev.r, prev.u)
    }

    /// One extrapolated BDF2 step of size `k`.
    pub fn bdf2_step(&self, prev2: OracleState, prev1: OracleState, k: f64) -> Result<OracleState> {
        let w = [
            2.0 * prev1.u[0] - prev2.u[0],
            2.0 * prev1.u[1] - prev2.u[1],
            2.0 * prev1.u[2] - prev2.u[2],
        ];
        let rhs = [
            (4.0 * prev1.u[0] - prev2.u[0]) / (2.0 * k),
            (4.0 * prev1.u[1] - prev2.u[1]) / (2.0 * k),
            (4.0 * prev1.u[2] - prev2.u[2]) / (2.0 * k),
        ];
        let u_comb = [
            4.0 * prev1.u[0] - prev2.u[0],
            4.0 * prev1.u[1] - prev2.u[1],
            4.0 * prev1.u[2] - prev2.u[2],
        ];
        self.linear_step(w, 1.5 / k, rhs, 3.0, 4.0 * prev1.r - prev2.r, u_comb)
    }

    /// Full oracle trajectory, mirroring the stepper's scheme logic
    /// (including both BDF2 start-up strategies).
    pub fn run(
        &self,
        u0: [f64; 3],
        k: f64,
        steps: usize,
        scheme: Scheme,
        bdf2_init: Bdf2Init,
    ) -> Result<Vec<OracleState>> {
        let mut states = vec![self.init(u0)];
        match scheme {
            Scheme::Euler => {
                for _ in 0..steps {
                    let next = self.euler_step(*states.last().unwrap(), k)?;
                    states.push(next);
                }
            }
            Scheme::Bdf2 => {
                let s1 = match bdf2_init {
                    Bdf2Init::EulerSubsteps => {
                        let m = (1.0 / k).ceil() as usize;
                        let dt = k * k;
                        let mut s = states[0];
                        let mut t = 0.0;
                        for j in 0..m {
                            let step_dt = if j + 1 == m { k - t } else { dt };
                            s = self.euler_step(s, step_dt)?;
                            t += step_dt;
                        }
                        s
                    }
                    Bdf2Init::ImplicitOneStep => {
                        let s0 = states[0];
                        let mut w = s0.u;
                        let mut s = s0;
                        for _ in 0..50 {
                            let rhs = [s0.u[0] / k, s0.u[1] / k, s0.u[2] / k];
                            s = self.linear_step(w, 1.0 / k, rhs, 1.0, s0.r, s0.u)?;
                            let diff = (0..3).map(|i| (s.u[i] - w[i]).abs()).fold(0.0, f64::max);
                            let scale =
                                s.u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
                            w = s.u;
                            if diff <= 1e-12 * scale {
                                break;
                            }
                        }
                        s
                    }
                };
                states.push(s1);
                for _ in 1..steps {
                    let len = states.len();
                    let next = self.bdf2_step(states[len - 2], states[len - 1], k)?;
                    states.push(next);
                }
            }
        }
        Ok(states)
    }
}

/// Result of one self-check.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn report(name: &'static str, passed: bool, detail: String) -> CheckReport {
    CheckReport {
        name,
        passed,
        detail,
    }
}

/// Eigenvalues of a small dense symmetric matrix by cyclic Jacobi
/// rotations (row-major `n x n`).
pub fn symmetric_eigenvalues(n: usize, a: &[f64]) -> Vec<f64> {
    let mut m = a.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i * n + i]).collect()
}

fn dense_of(m: &CsrMatrix) -> Vec<f64> {
    let mut d = vec![0.0; m.nrows() * m.ncols()];
    for (r, c, v) in m.entries() {
        d[r * m.ncols() + c] += v;
    }
    d
}

fn unit_coeff() -> Coefficients {
    Coefficients {
        gamma: 1.0,
        alpha: 1.0,
        sigma: 1.0,
        kappa: 1.0,
        mu: 1.0,
    }
}

fn check_quadrature() -> CheckReport {
    // Exactness of the triangle rule on all barycentric monomials of
    // total degree <= 4 against a!b!c!/(a+b+c+2)! * 2.
    let quad = crate::quadrature::degree4();
    let fact = |n: usize| (1..=n).product::<usize>() as f64;
    let mut max_err = 0.0f64;
    for a in 0..=4usize {
        for b in 0..=(4 - a) {
            for c in 0..=(4 - a - b) {
                let exact = 2.0 * fact(a) * fact(b) * fact(c) / fact(a + b + c + 2);
                let approx: f64 = quad
                    .points
                    .iter()
                    .zip(&quad.weights)
                    .map(|(lam, w)| w * lam[0].powi(a as i32) * lam[1].powi(b as i32) * lam[2].powi(c as i32))
                    .sum();
                max_err = max_err.max((approx - exact).abs());
            }
        }
    }
    report(
        "quadrature exact to degree 4",
        max_err < 1e-14,
        format!("max monomial error {max_err:.3e}"),
    )
}

fn check_mass_spd() -> CheckReport {
    let ops = assemble_mass_stiffness(build_structured(Rectangle::symmetric_unit(), 3).unwrap());
    let n = ops.num_nodes();
    let d = dense_of(&ops.mass);
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            asym = asym.max((d[i * n + j] - d[j * n + i]).abs());
        }
    }
    let eigs = symmetric_eigenvalues(n, &d);
    let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    report(
        "mass matrix SPD",
        asym < 1e-14 && min_eig > 0.0,
        format!("asymmetry {asym:.3e}, min eigenvalue {min_eig:.3e}"),
    )
}

fn check_stiffness_constants() -> CheckReport {
    let ops = assemble_mass_stiffness(build_structured(Rectangle::symmetric_unit(), 4).unwrap());
    let ones = vec![1.0; ops.num_nodes()];
    let mut out = vec![0.0; ops.num_nodes()];
    ops.stiffness.matvec_into(&ones, &mut out);
    let max = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    report(
        "stiffness annihilates constants",
        max < 1e-12,
        format!("max |K 1| = {max:.3e}"),
    )
}

fn check_cross_skew() -> CheckReport {
    let ops = assemble_mass_stiffness(build_structured(Rectangle::symmetric_unit(), 3).unwrap());
    let w = NodalField::from_fn(ops.num_nodes(), |i| {
        let p = ops.mesh.nodes[i];
        [p[0] - 0.3 * p[1], p[1] * p[0], 1.0 - p[0]]
    });
    let c = match cross_matrix(&w, &ops) {
        Ok(c) => c,
        Err(e) => return report("cross matrix skew", false, e.to_string()),
    };
    let n = c.nrows();
    let d = dense_of(&c);
    let mut max = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            max = max.max((d[i * n + j] + d[j * n + i]).abs());
        }
    }
    report(
        "cross matrix skew",
        max < 1e-12,
        format!("max |C + C^T| entry {max:.3e}"),
    )
}

fn check_l2_projection_idempotent() -> CheckReport {
    let ops = assemble_mass_stiffness(build_structured(Rectangle::symmetric_unit(), 4).unwrap());
    let v = NodalField::from_fn(ops.num_nodes(), |i| {
        let p = ops.mesh.nodes[i];
        [(p[0] * 2.1).sin(), p[1] - 0.4 * p[0], p[0] * p[1]]
    });
    let mesh = ops.mesh.clone();
    let vv = v.clone();
    let proj = match l2_project(|x, y| eval_p1(&mesh, &vv, x, y), &ops, 1e-13) {
        Ok(p) => p,
        Err(e) => return report("L2 projection idempotent", false, e.to_string()),
    };
    let diff = proj.max_abs_diff(&v);
    report(
        "L2 projection idempotent",
        diff < 1e-9,
        format!("max nodal deviation {diff:.3e}"),
    )
}

fn check_ritz_on_linears() -> CheckReport {
    let ops = assemble_mass_stiffness(build_structured(Rectangle::symmetric_unit(), 4).unwrap());
    let value = |x: f64, y: f64| [0.5 + 2.0 * x - y, x + y, -3.0 * y];
    let gradient = |_: f64, _: f64| [[2.0, -1.0], [1.0, 1.0], [0.0, -3.0]];
    let proj = match ritz_project(value, gradient, &ops, 1e-13) {
        Ok(p) => p,
        Err(e) => return report("Ritz projection exact on linears", false, e.to_string()),
    };
    let exact = NodalField::from_fn(ops.num_nodes(), |i| {
        let p = ops.mesh.nodes[i];
        value(p[0], p[1])
    });
    let diff = proj.max_abs_diff(&exact);
    report(
        "Ritz projection exact on linears",
        diff < 1e-9,
        format!("max nodal deviation {diff:.3e}"),
    )
}

fn check_bordered_vs_dense() -> CheckReport {
    // An n = 1 mesh gives a small nonsymmetric core (mass + cross terms);
    // compare the Schur-complement bordered solve against a monolithic
    // dense solve of the (n+1) x (n+1) system.
    let ops = assemble_mass_stiffness(build_structured(Rectangle::symmetric_unit(), 1).unwrap());
    let w = NodalField::from_fn(ops.num_nodes(), |i| {
        let p = ops.mesh.nodes[i];
        [0.7, p[0], -p[1]]
    });
    let c = match cross_matrix(&w, &ops) {
        Ok(c) => c,
        Err(e) => return report("bordered = monolithic dense", false, e.to_string()),
    };
    let n = ops.mass3.nrows();
    let mut triplets: Vec<(usize, usize, f64)> = ops.mass3.entries().collect();
    for (r, col, v) in c.entries() {
        triplets.push((r, col, 0.5 * v));
    }
    let a = CsrMatrix::from_triplets(n, n, &triplets);
    let b_col: Vec<f64> = (0..n).map(|i| 0.1 + 0.03 * i as f64).collect();
    let b_row: Vec<f64> = (0..n).map(|i| (-0.2f64).powi((i % 3) as i32 + 1)).collect();
    let corner = 2.5;
    let rhs: Vec<f64> = (0..=n).map(|i| (i as f64 * 0.7).sin()).collect();

    let sys = BorderedSystem {
        a: a.clone(),
        b_col: b_col.clone(),
        b_row: b_row.clone(),
        corner,
        rhs: rhs.clone(),
    };
    let sol = match solve_bordered(&sys, 1e-13, SolverKind::Lu) {
        Ok(s) => s,
        Err(e) => return report("bordered = monolithic dense", false, e.to_string()),
    };

    let m = n + 1;
    let mut dense = vec![0.0; m * m];
    for (r, col, v) in a.entries() {
        dense[r * m + col] += v;
    }
    for i in 0..n {
        dense[i * m + n] = b_col[i];
        dense[n * m + i] = b_row[i];
    }
    dense[n * m + n] = corner;
    let mut b = rhs.clone();
    let x = match gauss_solve(m, &mut dense, &mut b) {
        Ok(x) => x,
        Err(e) => return report("bordered = monolithic dense", false, e.to_string()),
    };
    let mut diff = (sol.scalar - x[n]).abs();
    for i in 0..n {
        diff = diff.max((sol.core[i] - x[i]).abs());
    }
    report(
        "bordered = monolithic dense",
        diff < 1e-10,
        format!("max component deviation {diff:.3e}"),
    )
}

/// Compares a full sparse trajectory on constant data against the dense
/// oracle. Returns (max nodal spread from constancy, max deviation from
/// the oracle in `u` and `r`).
pub fn oracle_comparison(
    scheme: Scheme,
    u0: [f64; 3],
    n: usize,
    k: f64,
    steps: usize,
    bdf2_init: Bdf2Init,
) -> Result<(f64, f64)> {
    let coeff = unit_coeff();
    let domain = Rectangle::symmetric_unit();
    let ops = assemble_mass_stiffness(build_structured(domain, n)?);
    let cfg = SchemeConfig {
        coeff,
        k,
        t_end: steps as f64 * k,
        scheme,
        bdf2_init,
        solver: SolverKind::Lu,
        tol: 1e-12,
    };
    let traj = run(|_, _| u0, |_, _| [[0.0; 2]; 3], &ops, &cfg)?;
    let oracle = ConstantOracle {
        coeff,
        area: domain.area(),
    };
    let reference = oracle.run(u0, k, steps, scheme, bdf2_init)?;

    let mut max_spread = 0.0f64;
    let mut max_dev = 0.0f64;
    for (state, orc) in traj.states.iter().zip(&reference) {
        let first = state.u.get(0);
        for i in 0..state.u.num_nodes() {
            let v = state.u.get(i);
            for comp in 0..3 {
                max_spread = max_spread.max((v[comp] - first[comp]).abs());
                max_dev = max_dev.max((v[comp] - orc.u[comp]).abs());
            }
        }
        max_dev = max_dev.max((state.r - orc.r).abs());
    }
    Ok((max_spread, max_dev))
}

fn check_constant_oracle(scheme: Scheme) -> CheckReport {
    let name = match scheme {
        Scheme::Euler => "constant-field oracle (Euler)",
        Scheme::Bdf2 => "constant-field oracle (BDF2)",
    };
    match oracle_comparison(scheme, [0.7, 0.0, 0.0], 4, 1e-3, 50, Bdf2Init::EulerSubsteps) {
        Ok((spread, dev)) => report(
            name,
            spread < 1e-10 && dev < 1e-9,
            format!("constancy spread {spread:.3e}, oracle deviation {dev:.3e}"),
        ),
        Err(e) => report(name, false, e.to_string()),
    }
}

/// Runs the whole invariant suite; the `check` subcommand prints this.
pub fn run_selftests() -> Vec<CheckReport> {
    vec![
        check_quadrature(),
        check_mass_spd(),
        check_stiffness_constants(),
        check_cross_skew(),
        check_l2_projection_idempotent(),
        check_ritz_on_linears(),
        check_bordered_vs_dense(),
        check_constant_oracle(Scheme::Euler),
        check_constant_oracle(Scheme::Bdf2),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_solves_identity_and_permuted() {
        let mut a = vec![0.0, 1.0, 1.0, 0.0];
        let mut b = vec![3.0, 4.0];
        let x = gauss_solve(2, &mut a, &mut b).unwrap();
        assert!((x[0] - 4.0).abs() < 1e-14);
        assert!((x[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_eigenvalues_of_known_matrix() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let mut e = symmetric_eigenvalues(2, &[2.0, 1.0, 1.0, 2.0]);
        e.sort_by(f64::total_cmp);
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!((e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_euler_preserves_fixed_point_structure() {
        // With gamma = 0 the oracle decays u toward 0 monotonically in
        // magnitude (gradient flow of a convex-ish energy at this datum).
        let oracle = ConstantOracle {
            coeff: Coefficients {
                gamma: 0.0,
                alpha: 1.0,
                sigma: 1.0,
                kappa: 1.0,
                mu: 1.0,
            },
            area: 4.0,
        };
        let mut s = oracle.init([0.7, 0.0, 0.0]);
        for _ in 0..20 {
            let next = oracle.euler_step(s, 1e-2).unwrap();
            assert!(norm_sq(next.u) <= norm_sq(s.u) + 1e-14);
            s = next;
        }
    }

    #[test]
    fn oracle_r_tracks_sqrt_f() {
        let oracle = ConstantOracle {
            coeff: unit_coeff(),
            area: 4.0,
        };
        let states = oracle
            .run([0.3, -0.2, 0.5], 1e-3, 30, Scheme::Euler, Bdf2Init::EulerSubsteps)
            .unwrap();
        for s in &states {
            let drift = (s.r - oracle.f_value(s.u).sqrt()).abs();
            assert!(drift < 1e-4, "drift {drift}");
        }
    }

    #[test]
    fn full_selftest_suite_passes() {
        for r in run_selftests() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
