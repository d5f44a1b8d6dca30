//! Compressed sparse row matrices and the linear solvers used by the
//! time steppers.
//!
//! Three solve paths are provided: conjugate gradients for SPD systems
//! (mass-matrix solves), a sparse LU factorisation for the nonsymmetric
//! per-step systems, and restarted GMRES with diagonal preconditioning as
//! an alternative for large problems. The per-step SAV coupling is a
//! rank-one border around the sparse core, eliminated exactly by a scalar
//! Schur complement.

use crate::error::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};

/// Which solver to use for the nonsymmetric per-step core systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    /// Sparse LU, exact to round-off. Default at desk scale.
    Lu,
    /// Restarted GMRES with Jacobi preconditioning.
    Gmres,
}

/// Sparse matrix in CSR format.
///
/// Column indices are strictly increasing within each row and duplicates
/// are summed at construction.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = triplets.to_vec();
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &entries {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
                last = Some((r, c));
            }
        }
        let mut row_ptr = vec![0usize; nrows + 1];
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// All stored entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    /// Quadratic form `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nrows);
        let mut acc = 0.0;
        for r in 0..self.nrows {
            let mut row_acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row_acc += self.values[k] * y[self.col_idx[k]];
            }
            acc += x[r] * row_acc;
        }
        acc
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows.min(self.ncols)];
        for (r, c, v) in self.entries() {
            if r == c {
                d[r] = v;
            }
        }
        d
    }

    /// Expands a scalar N x N matrix to the 3N x 3N block form acting
    /// componentwise on interleaved (x, y, z) nodal values.
    pub fn expand_block3(&self) -> CsrMatrix {
        let mut triplets = Vec::with_capacity(3 * self.nnz());
        for (r, c, v) in self.entries() {
            for comp in 0..3 {
                triplets.push((3 * r + comp, 3 * c + comp, v));
            }
        }
        CsrMatrix::from_triplets(3 * self.nrows, 3 * self.ncols, &triplets)
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> = self
            .entries()
            .map(|(r, c, v)| Triplet::new(r, c, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::SingularMatrix(format!("faer conversion failed: {e:?}")))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Conjugate gradients for symmetric positive definite systems.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = b.len();
    if a.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: n,
            context: "solve_spd rhs",
        });
    }
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let max_iter = 20 * n + 100;
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        if rr.sqrt() <= tol * b_norm {
            return Ok(x);
        }
        a.matvec_into(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        if it == max_iter - 1 {
            return Err(Error::SolverNotConverged {
                solver: "cg",
                iterations: max_iter,
                residual: rr.sqrt() / b_norm,
                tol,
            });
        }
    }
    Ok(x)
}

/// A factorisation (or iterative context) for repeated solves with the
/// same core matrix within one time step.
pub enum CoreSolver<'a> {
    Lu { lu: faer::sparse::linalg::solvers::Lu<usize, f64> },
    Gmres { a: &'a CsrMatrix, tol: f64 },
}

impl<'a> CoreSolver<'a> {
    pub fn new(a: &'a CsrMatrix, tol: f64, kind: SolverKind) -> Result<Self> {
        match kind {
            SolverKind::Lu => {
                let fa = a.to_faer()?;
                let lu = fa
                    .sp_lu()
                    .map_err(|e| Error::SingularMatrix(format!("sparse LU: {e:?}")))?;
                Ok(CoreSolver::Lu { lu })
            }
            SolverKind::Gmres => Ok(CoreSolver::Gmres { a, tol }),
        }
    }

    pub fn solve(&self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            CoreSolver::Lu { lu } => {
                let rhs = faer::Mat::from_fn(b.len(), 1, |i, _| b[i]);
                let x = lu.solve(&rhs);
                Ok((0..b.len()).map(|i| x[(i, 0)]).collect())
            }
            CoreSolver::Gmres { a: _, tol } => gmres(a, b, *tol),
        }
    }
}

/// General sparse solve; LU is exact to round-off, GMRES iterates to the
/// requested relative residual.
pub fn solve_general(a: &CsrMatrix, b: &[f64], tol: f64, kind: SolverKind) -> Result<Vec<f64>> {
    let solver = CoreSolver::new(a, tol, kind)?;
    solver.solve(a, b)
}

/// Restarted GMRES with Jacobi (diagonal) right preconditioning.
fn gmres(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut diag = a.diagonal();
    for d in diag.iter_mut() {
        if d.abs() < 1e-300 {
            *d = 1.0;
        }
    }
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&diag).map(|(x, d)| x / d).collect() };

    let restart = 100.min(n);
    let max_restarts = 200;
    let mut x = vec![0.0; n];

    for _ in 0..max_restarts {
        let ax = a.matvec(&x);
        let r0: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
        let beta = norm(&r0);
        if beta <= tol * b_norm {
            return Ok(x);
        }
        let mut basis: Vec<Vec<f64>> = vec![r0.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut m_used = 0;

        for j in 0..restart {
            let w0 = precond(&basis[j]);
            let mut w = a.matvec(&w0);
            for i in 0..=j {
                h[i][j] = dot(&w, &basis[i]);
                for k in 0..n {
                    w[k] -= h[i][j] * basis[i][k];
                }
            }
            h[j + 1][j] = norm(&w);
            if h[j + 1][j] > 1e-300 {
                basis.push(w.iter().map(|v| v / h[j + 1][j]).collect());
            } else {
                basis.push(vec![0.0; n]);
            }
            // Apply stored Givens rotations, then a new one.
            for i in 0..j {
                let tmp = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = tmp;
            }
            let denom = h[j][j].hypot(h[j + 1][j]);
            cs[j] = h[j][j] / denom;
            sn[j] = h[j + 1][j] / denom;
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            m_used = j + 1;
            if g[j + 1].abs() <= tol * b_norm {
                break;
            }
        }

        // Back-substitute and update x.
        let mut y = vec![0.0; m_used];
        for i in (0..m_used).rev() {
            let mut acc = g[i];
            for k in i + 1..m_used {
                acc -= h[i][k] * y[k];
            }
            y[i] = acc / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for k in 0..n {
                update[k] += yj * basis[j][k];
            }
        }
        let update = precond(&update);
        for k in 0..n {
            x[k] += update[k];
        }
        let final_res = {
            let ax = a.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
            norm(&r)
        };
        if final_res <= tol * b_norm {
            return Ok(x);
        }
    }
    let ax = a.matvec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
    Err(Error::SolverNotConverged {
        solver: "gmres",
        iterations: max_restarts,
        residual: norm(&r) / b_norm,
        tol,
    })
}

/// Sparse core matrix augmented by one scalar row/column.
///
/// `rhs` has length `a.nrows() + 1`; the last entry is the scalar
/// equation's right-hand side.
#[derive(Clone, Debug)]
pub struct BorderedSystem {
    pub a: CsrMatrix,
    pub b_col: Vec<f64>,
    pub b_row: Vec<f64>,
    pub corner: f64,
    pub rhs: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct BorderedSolution {
    pub core: Vec<f64>,
    pub scalar: f64,
    /// `corner - b_row . A^{-1} b_col`; reported so that approach to
    /// singularity (time step too large) is observable.
    pub schur_denominator: f64,
    /// Relative residual of the full bordered system.
    pub residual: f64,
}

/// Eliminates the scalar unknown by block substitution:
/// solve `A y1 = rhs_core`, `A y2 = b_col`, then
/// `scalar = (rhs_scalar - b_row . y1) / (corner - b_row . y2)` and
/// `core = y1 - scalar * y2`. One factorisation serves both solves.
pub fn solve_bordered(sys: &BorderedSystem, tol: f64, kind: SolverKind) -> Result<BorderedSolution> {
    let n = sys.a.nrows();
    if sys.rhs.len() != n + 1 || sys.b_col.len() != n || sys.b_row.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            got: sys.rhs.len(),
            context: "bordered system",
        });
    }
    let rhs_core = &sys.rhs[..n];
    let rhs_scalar = sys.rhs[n];
    let solver = CoreSolver::new(&sys.a, tol, kind)?;
    let y1 = solver.solve(&sys.a, rhs_core)?;
    let y2 = solver.solve(&sys.a, &sys.b_col)?;
    let denom = sys.corner - dot(&sys.b_row, &y2);
    let scale = sys.corner.abs().max(1.0);
    if denom.abs() <= 1e-14 * scale {
        return Err(Error::NearSingularSchur { denominator: denom });
    }
    let scalar = (rhs_scalar - dot(&sys.b_row, &y1)) / denom;
    let core: Vec<f64> = y1
        .iter()
        .zip(&y2)
        .map(|(a, b)| a - scalar * b)
        .collect();

    // Residual of the full (n+1) system.
    let mut res = sys.a.matvec(&core);
    let mut res_sq = 0.0;
    for i in 0..n {
        let r = res[i] + scalar * sys.b_col[i] - rhs_core[i];
        res[i] = r;
        res_sq += r * r;
    }
    let r_last = dot(&sys.b_row, &core) + sys.corner * scalar - rhs_scalar;
    res_sq += r_last * r_last;
    let rhs_norm = norm(&sys.rhs).max(1e-300);
    Ok(BorderedSolution {
        core,
        scalar,
        schur_denominator: denom,
        residual: res_sq.sqrt() / rhs_norm,
    })
}

/// Writes a matrix in MatrixMarket coordinate format.
pub fn write_matrix_market<W: std::io::Write>(a: &CsrMatrix, out: &mut W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (r, c, v) in a.entries() {
        writeln!(out, "{} {} {:.16e}", r + 1, c + 1, v)?;
    }
    Ok(())
}

/// Reads a matrix in MatrixMarket coordinate format (real, general).
pub fn read_matrix_market<R: std::io::BufRead>(input: R) -> Result<CsrMatrix> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty MatrixMarket file".into()))??;
    if !header.starts_with("%%MatrixMarket matrix coordinate real") {
        return Err(Error::Parse(format!("unsupported header: {header}")));
    }
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut it = line.split_whitespace();
        if dims.is_none() {
            let nr = parse_tok(it.next(), "rows")?;
            let nc = parse_tok(it.next(), "cols")?;
            let nnz = parse_tok(it.next(), "nnz")?;
            dims = Some((nr, nc, nnz));
        } else {
            let r: usize = parse_tok(it.next(), "row index")?;
            let c: usize = parse_tok(it.next(), "col index")?;
            let v: f64 = it
                .next()
                .ok_or_else(|| Error::Parse("missing value".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad value: {e}")))?;
            triplets.push((r - 1, c - 1, v));
        }
    }
    let (nr, nc, _) = dims.ok_or_else(|| Error::Parse("missing size line".into()))?;
    Ok(CsrMatrix::from_triplets(nr, nc, &triplets))
}

fn parse_tok(tok: Option<&str>, what: &str) -> Result<usize> {
    tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad {what}: {e}")))
}
