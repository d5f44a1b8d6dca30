//! P1 finite element operators on structured triangulations.
//!
//! Assembles the scalar mass and stiffness matrices (and their 3-vector
//! block expansions), the cross-coupling matrix for the gyromagnetic
//! term, the SAV load vector, and the L2 / Ritz projections. All
//! nonlinear integrands are evaluated from the P1 interpolant at the
//! quadrature points of one fixed degree-4 rule, which keeps the discrete
//! energy identities exact to round-off.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::{degree4, TriangleQuadrature};
use crate::sparse::{solve_spd, BorderedSystem, CsrMatrix, SolverKind};

/// Nodal coefficients of a 3-vector P1 field, stored interleaved
/// `(x0, y0, z0, x1, y1, z1, ...)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalField {
    data: Vec<f64>,
}

impl NodalField {
    pub fn zeros(num_nodes: usize) -> Self {
        Self {
            data: vec![0.0; 3 * num_nodes],
        }
    }

    pub fn from_fn(num_nodes: usize, mut f: impl FnMut(usize) -> [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(3 * num_nodes);
        for i in 0..num_nodes {
            data.extend_from_slice(&f(i));
        }
        Self { data }
    }

    pub fn from_flat(data: Vec<f64>) -> Self {
        assert_eq!(data.len() % 3, 0);
        Self { data }
    }

    pub fn num_nodes(&self) -> usize {
        self.data.len() / 3
    }

    pub fn get(&self, node: usize) -> [f64; 3] {
        [
            self.data[3 * node],
            self.data[3 * node + 1],
            self.data[3 * node + 2],
        ]
    }

    pub fn set(&mut self, node: usize, v: [f64; 3]) {
        self.data[3 * node..3 * node + 3].copy_from_slice(&v);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `a * x + b * y` componentwise.
    pub fn linear_comb(a: f64, x: &NodalField, b: f64, y: &NodalField) -> NodalField {
        assert_eq!(x.data.len(), y.data.len());
        NodalField {
            data: x
                .data
                .iter()
                .zip(&y.data)
                .map(|(xi, yi)| a * xi + b * yi)
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &NodalField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Physical coefficients of the model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients {
    pub gamma: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub kappa: f64,
    pub mu: f64,
}

impl Coefficients {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("sigma", self.sigma),
            ("kappa", self.kappa),
            ("mu", self.mu),
        ] {
            if !(v > 0.0) {
                return Err(Error::Parse(format!(
                    "coefficient {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-triangle geometry cached at assembly time.
#[derive(Clone, Debug)]
struct TriangleGeometry {
    area: f64,
    /// Gradients of the three barycentric basis functions (constant on K).
    grads: [[f64; 2]; 3],
}

/// Assembled operators for one mesh level.
#[derive(Clone, Debug)]
pub struct FemOperators {
    pub mesh: Mesh,
    /// Scalar mass matrix (N x N), SPD.
    pub mass: CsrMatrix,
    /// Scalar stiffness matrix (N x N), symmetric PSD with `K 1 = 0`.
    pub stiffness: CsrMatrix,
    /// Blockwise expansions acting on interleaved 3-vector fields.
    pub mass3: CsrMatrix,
    pub stiffness3: CsrMatrix,
    pub quad: TriangleQuadrature,
    geometry: Vec<TriangleGeometry>,
}

fn triangle_geometry(mesh: &Mesh, t: usize) -> TriangleGeometry {
    let [a, b, c] = mesh.triangles[t];
    let p = [mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]];
    let area = mesh.triangle_area(t);
    let inv = 1.0 / (2.0 * area);
    let grads = [
        [(p[1][1] - p[2][1]) * inv, (p[2][0] - p[1][0]) * inv],
        [(p[2][1] - p[0][1]) * inv, (p[0][0] - p[2][0]) * inv],
        [(p[0][1] - p[1][1]) * inv, (p[1][0] - p[0][0]) * inv],
    ];
    TriangleGeometry { area, grads }
}

/// Assembles mass and stiffness matrices for the given mesh.
///
/// The element mass matrix on a triangle of area `A` is
/// `(A/12) [[2,1,1],[1,2,1],[1,1,2]]`; the element stiffness uses the
/// constant gradients of the barycentric basis.
pub fn assemble_mass_stiffness(mesh: Mesh) -> FemOperators {
    let n = mesh.num_nodes();
    let nt = mesh.num_triangles();
    let mut mass_triplets = Vec::with_capacity(9 * nt);
    let mut stiff_triplets = Vec::with_capacity(9 * nt);
    let mut geometry = Vec::with_capacity(nt);
    for t in 0..nt {
        let geo = triangle_geometry(&mesh, t);
        let verts = mesh.triangles[t];
        for a in 0..3 {
            for b in 0..3 {
                let m = geo.area / 12.0 * if a == b { 2.0 } else { 1.0 };
                let k = geo.area
                    * (geo.grads[a][0] * geo.grads[b][0] + geo.grads[a][1] * geo.grads[b][1]);
                mass_triplets.push((verts[a], verts[b], m));
                stiff_triplets.push((verts[a], verts[b], k));
            }
        }
        geometry.push(geo);
    }
    let mass = CsrMatrix::from_triplets(n, n, &mass_triplets);
    let stiffness = CsrMatrix::from_triplets(n, n, &stiff_triplets);
    let mass3 = mass.expand_block3();
    let stiffness3 = stiffness.expand_block3();
    FemOperators {
        mesh,
        mass,
        stiffness,
        mass3,
        stiffness3,
        quad: degree4(),
        geometry,
    }
}

impl FemOperators {
    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }

    /// Physical coordinates of quadrature point `q` on triangle `t`.
    fn quad_point(&self, t: usize, q: usize) -> [f64; 2] {
        let lam = self.quad.points[q];
        let [a, b, c] = self.mesh.triangles[t];
        let (pa, pb, pc) = (self.mesh.nodes[a], self.mesh.nodes[b], self.mesh.nodes[c]);
        [
            lam[0] * pa[0] + lam[1] * pb[0] + lam[2] * pc[0],
            lam[0] * pa[1] + lam[1] * pb[1] + lam[2] * pc[1],
        ]
    }

    /// P1 interpolant of `w` at quadrature point `q` of triangle `t`.
    fn interp_at(&self, w: &NodalField, t: usize, q: usize) -> [f64; 3] {
        let lam = self.quad.points[q];
        let verts = self.mesh.triangles[t];
        let mut v = [0.0; 3];
        for a in 0..3 {
            let wa = w.get(verts[a]);
            for k in 0..3 {
                v[k] += lam[a] * wa[k];
            }
        }
        v
    }

    /// `integral of phi_i` for every node (row sums of the mass matrix).
    pub fn basis_integrals(&self) -> Vec<f64> {
        let n = self.num_nodes();
        let mut m = vec![0.0; n];
        for t in 0..self.mesh.num_triangles() {
            let area = self.geometry[t].area;
            for &v in &self.mesh.triangles[t] {
                m[v] += area / 3.0;
            }
        }
        m
    }
}

fn check_field(ops: &FemOperators, w: &NodalField, context: &'static str) -> Result<()> {
    if w.num_nodes() != ops.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: ops.num_nodes(),
            got: w.num_nodes(),
            context,
        });
    }
    Ok(())
}

/// Assembles the skew-symmetric cross-coupling matrix `C(w)` with
/// `C[i a, j b] = integral (w x (phi_j e_b)) . (phi_i e_a)`.
///
/// The integrand has degree 3 with P1 `w`, so the degree-4 rule is exact
/// and skew-symmetry holds to round-off.
pub fn cross_matrix(w: &NodalField, ops: &FemOperators) -> Result<CsrMatrix> {
    check_field(ops, w, "cross_matrix field")?;
    let n = ops.num_nodes();
    let mut triplets = Vec::with_capacity(ops.mesh.num_triangles() * 9 * 6);
    for t in 0..ops.mesh.num_triangles() {
        let verts = ops.mesh.triangles[t];
        let area = ops.geometry[t].area;
        // Element contribution e[a][b] = integral phi_a phi_b w_c summed
        // with the Levi-Civita structure below.
        let mut wphi = [[[0.0f64; 3]; 3]; 3]; // [a][b][component]
        for q in 0..ops.quad.points.len() {
            let lam = ops.quad.points[q];
            let wq = ops.interp_at(w, t, q);
            let scale = area * ops.quad.weights[q];
            for a in 0..3 {
                for b in 0..3 {
                    let f = scale * lam[a] * lam[b];
                    for k in 0..3 {
                        wphi[a][b][k] += f * wq[k];
                    }
                }
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                let m = wphi[a][b];
                // (w x e_beta) . e_alpha for the three off-diagonal pairs.
                // alpha=0,beta=1: (w x e_y)_x = -w_z ; alpha=1,beta=0: w_z
                // alpha=0,beta=2: (w x e_z)_x =  w_y ; alpha=2,beta=0: -w_y
                // alpha=1,beta=2: (w x e_z)_y = -w_x ; alpha=2,beta=1: w_x
                let (i, j) = (verts[a], verts[b]);
                triplets.push((3 * i, 3 * j + 1, -m[2]));
                triplets.push((3 * i + 1, 3 * j, m[2]));
                triplets.push((3 * i, 3 * j + 2, m[1]));
                triplets.push((3 * i + 2, 3 * j, -m[1]));
                triplets.push((3 * i + 1, 3 * j + 2, -m[0]));
                triplets.push((3 * i + 2, 3 * j + 1, m[0]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(3 * n, 3 * n, &triplets))
}

/// Computes the SAV load vector `G[i a] = integral g(w) . (phi_i e_a)`
/// with `g(w) = kappa |w|^2 w`, and the functional
/// `F[w] = integral (kappa/4)(|w|^4 + 1)`.
pub fn sav_load_vector(
    w: &NodalField,
    coeff: &Coefficients,
    ops: &FemOperators,
) -> Result<(Vec<f64>, f64)> {
    check_field(ops, w, "sav_load_vector field")?;
    let n = ops.num_nodes();
    let mut g_vec = vec![0.0; 3 * n];
    let mut f_val = 0.0;
    for t in 0..ops.mesh.num_triangles() {
        let verts = ops.mesh.triangles[t];
        let area = ops.geometry[t].area;
        for q in 0..ops.quad.points.len() {
            let lam = ops.quad.points[q];
            let wq = ops.interp_at(w, t, q);
            let w2 = wq[0] * wq[0] + wq[1] * wq[1] + wq[2] * wq[2];
            let scale = area * ops.quad.weights[q];
            f_val += scale * coeff.kappa / 4.0 * (w2 * w2 + 1.0);
            for a in 0..3 {
                let f = scale * lam[a] * coeff.kappa * w2;
                for k in 0..3 {
                    g_vec[3 * verts[a] + k] += f * wq[k];
                }
            }
        }
    }
    Ok((g_vec, f_val))
}

/// L2 projection of an arbitrary function onto the P1 space.
pub fn l2_project(
    f: impl Fn(f64, f64) -> [f64; 3],
    ops: &FemOperators,
    tol: f64,
) -> Result<NodalField> {
    let n = ops.num_nodes();
    let mut rhs = vec![vec![0.0; n]; 3];
    for t in 0..ops.mesh.num_triangles() {
        let verts = ops.mesh.triangles[t];
        let area = ops.geometry[t].area;
        for q in 0..ops.quad.points.len() {
            let lam = ops.quad.points[q];
            let x = ops.quad_point(t, q);
            let fv = f(x[0], x[1]);
            let scale = area * ops.quad.weights[q];
            for a in 0..3 {
                for k in 0..3 {
                    rhs[k][verts[a]] += scale * lam[a] * fv[k];
                }
            }
        }
    }
    let mut out = NodalField::zeros(n);
    for k in 0..3 {
        let x = solve_spd(&ops.mass, &rhs[k], tol)?;
        for i in 0..n {
            out.as_mut_slice()[3 * i + k] = x[i];
        }
    }
    Ok(out)
}

/// Ritz projection: matches gradients weakly against the P1 space; the
/// pure-Neumann nullspace is fixed by a mean-value constraint enforced
/// through a bordered row/column.
pub fn ritz_project(
    value: impl Fn(f64, f64) -> [f64; 3],
    gradient: impl Fn(f64, f64) -> [[f64; 2]; 3],
    ops: &FemOperators,
    tol: f64,
) -> Result<NodalField> {
    let n = ops.num_nodes();
    let mut rhs = vec![vec![0.0; n]; 3];
    let mut means = [0.0; 3];
    for t in 0..ops.mesh.num_triangles() {
        let verts = ops.mesh.triangles[t];
        let geo = &ops.geometry[t];
        for q in 0..ops.quad.points.len() {
            let x = ops.quad_point(t, q);
            let gv = gradient(x[0], x[1]);
            let fv = value(x[0], x[1]);
            let scale = geo.area * ops.quad.weights[q];
            for k in 0..3 {
                means[k] += scale * fv[k];
                for a in 0..3 {
                    rhs[k][verts[a]] +=
                        scale * (gv[k][0] * geo.grads[a][0] + gv[k][1] * geo.grads[a][1]);
                }
            }
        }
    }
    let basis_int = ops.basis_integrals();
    let mut out = NodalField::zeros(n);
    for k in 0..3 {
        let mut full_rhs = rhs[k].clone();
        full_rhs.push(means[k]);
        let sys = BorderedSystem {
            a: ops.stiffness.clone(),
            b_col: basis_int.clone(),
            b_row: basis_int.clone(),
            corner: 0.0,
            rhs: full_rhs,
        };
        // The stiffness core is singular (constants), so the Schur route
        // does not apply; solve the symmetric bordered matrix directly.
        let sol = solve_bordered_monolithic(&sys, tol)?;
        for i in 0..n {
            out.as_mut_slice()[3 * i + k] = sol[i];
        }
    }
    Ok(out)
}

/// Direct sparse solve of the full (n+1) bordered matrix; used when the
/// core block is singular and Schur elimination is unavailable.
fn solve_bordered_monolithic(sys: &BorderedSystem, tol: f64) -> Result<Vec<f64>> {
    let n = sys.a.nrows();
    let mut triplets: Vec<(usize, usize, f64)> = sys.a.entries().collect();
    for i in 0..n {
        if sys.b_col[i] != 0.0 {
            triplets.push((i, n, sys.b_col[i]));
        }
        if sys.b_row[i] != 0.0 {
            triplets.push((n, i, sys.b_row[i]));
        }
    }
    if sys.corner != 0.0 {
        triplets.push((n, n, sys.corner));
    }
    let full = CsrMatrix::from_triplets(n + 1, n + 1, &triplets);
    let mut x = crate::sparse::solve_general(&full, &sys.rhs, tol, SolverKind::Lu)?;
    x.truncate(n);
    Ok(x)
}

/// Applies the discrete Laplacian: solves `M3 w = -K3 v`.
///
/// The steppers never invert the mass matrix; this operator exists for
/// diagnostics and property tests.
pub fn discrete_laplacian_apply(v: &NodalField, ops: &FemOperators, tol: f64) -> Result<NodalField> {
    check_field(ops, v, "discrete_laplacian field")?;
    let n = ops.num_nodes();
    let mut out = NodalField::zeros(n);
    for k in 0..3 {
        let vk: Vec<f64> = (0..n).map(|i| v.as_slice()[3 * i + k]).collect();
        let mut rhs = ops.stiffness.matvec(&vk);
        for r in rhs.iter_mut() {
            *r = -*r;
        }
        let x = solve_spd(&ops.mass, &rhs, tol)?;
        for i in 0..n {
            out.as_mut_slice()[3 * i + k] = x[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured, Rectangle};

    fn ops_on(n: usize) -> FemOperators {
        assemble_mass_stiffness(build_structured(Rectangle::symmetric_unit(), n).unwrap())
    }

    #[test]
    fn mass_row_and_total_sums() {
        let ops = ops_on(4);
        let ones = vec![1.0; ops.num_nodes()];
        let row_sums = ops.mass.matvec(&ones);
        let basis = ops.basis_integrals();
        for (r, b) in row_sums.iter().zip(&basis) {
            assert!((r - b).abs() < 1e-13, "row sum {r} vs integral {b}");
        }
        let total: f64 = row_sums.iter().sum();
        assert!((total - 4.0).abs() < 1e-12);
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let ops = ops_on(5);
        let ones = vec![1.0; ops.num_nodes()];
        let kc = ops.stiffness.matvec(&ones);
        for v in kc {
            assert!(v.abs() <= 1e-12);
        }
    }

    #[test]
    fn element_mass_matches_quadrature() {
        // (A/12)[[2,1,1],[1,2,1],[1,1,2]] must equal the degree-4
        // quadrature of phi_a phi_b on any triangle.
        let q = degree4();
        let area = 0.37;
        for a in 0..3 {
            for b in 0..3 {
                let mut integral = 0.0;
                for (p, w) in q.points.iter().zip(&q.weights) {
                    integral += w * p[a] * p[b];
                }
                integral *= area;
                let exact = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                assert!((integral - exact).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn cross_matrix_zero_field() {
        let ops = ops_on(2);
        let w = NodalField::zeros(ops.num_nodes());
        let c = cross_matrix(&w, &ops).unwrap();
        for (_, _, v) in c.entries() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn cross_matrix_skew_symmetric() {
        let ops = ops_on(3);
        let n = ops.num_nodes();
        let w = NodalField::from_fn(n, |i| {
            let p = ops.mesh.nodes[i];
            [p[0] * p[1], (2.0 * p[0]).sin(), p[1] - 0.3]
        });
        let c = cross_matrix(&w, &ops).unwrap();
        let mut dense = vec![vec![0.0; 3 * n]; 3 * n];
        for (r, col, v) in c.entries() {
            dense[r][col] = v;
        }
        for i in 0..3 * n {
            for j in 0..3 * n {
                assert!(
                    (dense[i][j] + dense[j][i]).abs() <= 1e-12,
                    "C + C^T nonzero at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn cross_matrix_constant_ez_is_rotation_times_mass() {
        // With w = (0,0,1), (w x v) rotates (v_x, v_y) by 90 degrees, so
        // the xy blocks are the scalar mass matrix times [[0,-1],[1,0]].
        let ops = ops_on(2);
        let n = ops.num_nodes();
        let w = NodalField::from_fn(n, |_| [0.0, 0.0, 1.0]);
        let c = cross_matrix(&w, &ops).unwrap();
        let mut dense = vec![vec![0.0; 3 * n]; 3 * n];
        for (r, col, v) in c.entries() {
            dense[r][col] = v;
        }
        let mut mass_dense = vec![vec![0.0; n]; n];
        for (r, col, v) in ops.mass.entries() {
            mass_dense[r][col] = v;
        }
        for i in 0..n {
            for j in 0..n {
                let m = mass_dense[i][j];
                assert!((dense[3 * i][3 * j + 1] + m).abs() < 1e-13);
                assert!((dense[3 * i + 1][3 * j] - m).abs() < 1e-13);
                assert!(dense[3 * i][3 * j].abs() < 1e-14);
                assert!(dense[3 * i + 2][3 * j + 2].abs() < 1e-14);
            }
        }
    }

    fn coeff() -> Coefficients {
        Coefficients {
            gamma: 1.0,
            alpha: 1.0,
            sigma: 1.0,
            kappa: 1.0,
            mu: 1.0,
        }
    }

    #[test]
    fn sav_load_zero_field() {
        let ops = ops_on(3);
        let w = NodalField::zeros(ops.num_nodes());
        let (g, f) = sav_load_vector(&w, &coeff(), &ops).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
        assert!((f - 1.0).abs() < 1e-13, "F = kappa |D| / 4 = 1, got {f}");
    }

    #[test]
    fn sav_load_constant_ex() {
        let ops = ops_on(3);
        let w = NodalField::from_fn(ops.num_nodes(), |_| [1.0, 0.0, 0.0]);
        let (g, f) = sav_load_vector(&w, &coeff(), &ops).unwrap();
        assert!((f - 2.0).abs() < 1e-13);
        let basis = ops.basis_integrals();
        for i in 0..ops.num_nodes() {
            assert!((g[3 * i] - basis[i]).abs() < 1e-13);
            assert!(g[3 * i + 1].abs() < 1e-15);
            assert!(g[3 * i + 2].abs() < 1e-15);
        }
    }

    #[test]
    fn sav_functional_lower_bound() {
        let ops = ops_on(4);
        let c = coeff();
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut rand = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0
        };
        for _ in 0..10 {
            let w = NodalField::from_fn(ops.num_nodes(), |_| [rand(), rand(), rand()]);
            let (_, f) = sav_load_vector(&w, &c, &ops).unwrap();
            assert!(f >= c.kappa * 4.0 / 4.0 - 1e-12);
        }
    }

    #[test]
    fn l2_project_reproduces_constants_and_linears() {
        let ops = ops_on(3);
        let p = l2_project(|_, _| [2.5, -1.0, 0.25], &ops, 1e-12).unwrap();
        for i in 0..ops.num_nodes() {
            let v = p.get(i);
            assert!((v[0] - 2.5).abs() < 1e-10);
            assert!((v[1] + 1.0).abs() < 1e-10);
            assert!((v[2] - 0.25).abs() < 1e-10);
        }
        let p = l2_project(|x, y| [x, y, x + y], &ops, 1e-12).unwrap();
        for i in 0..ops.num_nodes() {
            let [x, y] = ops.mesh.nodes[i];
            let v = p.get(i);
            assert!((v[0] - x).abs() < 1e-10);
            assert!((v[1] - y).abs() < 1e-10);
            assert!((v[2] - x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn ritz_project_constants_and_linears() {
        let ops = ops_on(3);
        let p = ritz_project(
            |_, _| [1.5, -2.0, 0.5],
            |_, _| [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
            &ops,
            1e-12,
        )
        .unwrap();
        for i in 0..ops.num_nodes() {
            let v = p.get(i);
            assert!((v[0] - 1.5).abs() < 1e-10);
            assert!((v[1] + 2.0).abs() < 1e-10);
            assert!((v[2] - 0.5).abs() < 1e-10);
        }
        let p = ritz_project(
            |x, y| [x, y, 0.0],
            |_, _| [[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]],
            &ops,
            1e-12,
        )
        .unwrap();
        for i in 0..ops.num_nodes() {
            let [x, y] = ops.mesh.nodes[i];
            let v = p.get(i);
            assert!((v[0] - x).abs() < 1e-10);
            assert!((v[1] - y).abs() < 1e-10);
            assert!(v[2].abs() < 1e-10);
        }
    }

    #[test]
    fn ritz_orthogonality_residual() {
        use std::f64::consts::PI;
        let ops = ops_on(8);
        let n = ops.num_nodes();
        let p = ritz_project(
            |x, y| [(2.0 * PI * y).cos(), 0.0, (2.0 * PI * x).sin()],
            |x, y| {
                [
                    [0.0, -2.0 * PI * (2.0 * PI * y).sin()],
                    [0.0, 0.0],
                    [2.0 * PI * (2.0 * PI * x).cos(), 0.0],
                ]
            },
            &ops,
            1e-13,
        )
        .unwrap();
        // integral grad(R_h v - v) . grad(phi_i) must vanish: K x - b = 0.
        let mut rhs = vec![vec![0.0; n]; 3];
        for t in 0..ops.mesh.num_triangles() {
            let verts = ops.mesh.triangles[t];
            let geo = &ops.geometry[t];
            for q in 0..ops.quad.points.len() {
                let x = ops.quad_point(t, q);
                let scale = geo.area * ops.quad.weights[q];
                let gv = [
                    [0.0, -2.0 * PI * (2.0 * PI * x[1]).sin()],
                    [0.0, 0.0],
                    [2.0 * PI * (2.0 * PI * x[0]).cos(), 0.0],
                ];
                for k in 0..3 {
                    for a in 0..3 {
                        rhs[k][verts[a]] +=
                            scale * (gv[k][0] * geo.grads[a][0] + gv[k][1] * geo.grads[a][1]);
                    }
                }
            }
        }
        for k in 0..3 {
            let xk: Vec<f64> = (0..n).map(|i| p.as_slice()[3 * i + k]).collect();
            let kx = ops.stiffness.matvec(&xk);
            for i in 0..n {
                assert!(
                    (kx[i] - rhs[k][i]).abs() < 1e-10,
                    "orthogonality residual {} at node {i}, component {k}",
                    kx[i] - rhs[k][i]
                );
            }
        }
    }

    #[test]
    fn discrete_laplacian_of_constant_is_zero() {
        let ops = ops_on(3);
        let v = NodalField::from_fn(ops.num_nodes(), |_| [1.0, -2.0, 3.0]);
        let lap = discrete_laplacian_apply(&v, &ops, 1e-13).unwrap();
        for x in lap.as_slice() {
            assert!(x.abs() < 1e-10);
        }
    }

    #[test]
    fn discrete_laplacian_duality_and_symmetry() {
        let ops = ops_on(3);
        let n = ops.num_nodes();
        let v = NodalField::from_fn(n, |i| {
            let p = ops.mesh.nodes[i];
            [p[0] * p[0], p[1], p[0] * p[1]]
        });
        let w = NodalField::from_fn(n, |i| {
            let p = ops.mesh.nodes[i];
            [(p[0] + p[1]).sin(), p[0], 1.0 - p[1] * p[1]]
        });
        let lv = discrete_laplacian_apply(&v, &ops, 1e-14).unwrap();
        let lw = discrete_laplacian_apply(&w, &ops, 1e-14).unwrap();
        // <Delta_h v, v>_M = -v^T K3 v
        let lhs = ops.mass3.bilinear(lv.as_slice(), v.as_slice());
        let rhs = -ops.stiffness3.bilinear(v.as_slice(), v.as_slice());
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
        // <Delta_h v, w>_M = <v, Delta_h w>_M
        let a = ops.mass3.bilinear(lv.as_slice(), w.as_slice());
        let b = ops.mass3.bilinear(v.as_slice(), lw.as_slice());
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }
}
