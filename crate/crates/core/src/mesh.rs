//! Structured triangulations of axis-aligned rectangles.
//!
//! An `n x n` grid of squares is split into triangles along the
//! south-west to north-east diagonal of every cell, giving a
//! deterministic quasi-uniform family. Uniform refinement doubles `n`,
//! and the resulting P1 spaces are exactly nested: every coarse node
//! reappears with bitwise-identical coordinates on the fine mesh, so a
//! coarse P1 function can be injected into the fine space without loss.

use crate::error::{Error, Result};
use crate::fem::NodalField;

/// Axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rectangle {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rectangle {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    /// The unit-ish square `[-1, 1]^2` used in both reference experiments.
    pub fn symmetric_unit() -> Self {
        Self::new(-1.0, 1.0, -1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// Conforming triangulation of a rectangle.
///
/// Nodes are ordered lexicographically by `(y, x)`; triangle vertices are
/// counterclockwise.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Maximal edge length (the cell diagonal).
    pub h: f64,
    /// Refinement depth relative to the mesh this one was refined from.
    pub level: u32,
    pub domain: Rectangle,
    /// Cells per side.
    pub n: usize,
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Signed area of triangle `t` (positive for counterclockwise ordering).
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let p = self.nodes[a];
        let q = self.nodes[b];
        let r = self.nodes[c];
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
    }
}

/// Builds the structured mesh with `n` cells per side.
///
/// Node counts are `(n+1)^2` vertices and `2 n^2` triangles.
pub fn build_structured(domain: Rectangle, n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidMesh("cells-per-side must be >= 1".into()));
    }
    if !(domain.width() > 0.0) || !(domain.height() > 0.0) {
        return Err(Error::InvalidMesh(format!(
            "degenerate rectangle {domain:?}"
        )));
    }
    build_unchecked(domain, n, 0)
}

fn build_unchecked(domain: Rectangle, n: usize, level: u32) -> Result<Mesh> {
    let np = n + 1;
    let mut nodes = Vec::with_capacity(np * np);
    for j in 0..np {
        // `i/n` rather than `i*(w/n)` so that coordinates are bitwise
        // stable under refinement: (2i)/(2n) rounds identically to i/n.
        let ty = j as f64 / n as f64;
        let y = domain.y_min + domain.height() * ty;
        for i in 0..np {
            let tx = i as f64 / n as f64;
            let x = domain.x_min + domain.width() * tx;
            nodes.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let sw = j * np + i;
            let se = sw + 1;
            let nw = sw + np;
            let ne = nw + 1;
            // Split along the SW-NE diagonal.
            triangles.push([sw, se, ne]);
            triangles.push([sw, ne, nw]);
        }
    }
    let dx = domain.width() / n as f64;
    let dy = domain.height() / n as f64;
    Ok(Mesh {
        nodes,
        triangles,
        h: dx.hypot(dy),
        level,
        domain,
        n,
    })
}

/// Uniform refinement: doubles the cells per side.
pub fn refine(mesh: &Mesh) -> Result<Mesh> {
    build_unchecked(mesh.domain, 2 * mesh.n, mesh.level + 1)
}

/// Injects a coarse P1 function into the space of `refine(coarse)`.
///
/// Exact for nested P1 spaces: shared nodes copy, edge midpoints average
/// the edge endpoints, and cell-interior nodes interpolate along the
/// shared diagonal.
pub fn prolong(coarse: &Mesh, fine: &Mesh, values: &NodalField) -> Result<NodalField> {
    if fine.n != 2 * coarse.n || fine.domain != coarse.domain {
        return Err(Error::NotNested(format!(
            "fine n = {} is not 2 * coarse n = {}",
            fine.n, coarse.n
        )));
    }
    if values.num_nodes() != coarse.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: coarse.num_nodes(),
            got: values.num_nodes(),
            context: "prolong input field",
        });
    }
    let nc = coarse.n;
    let npc = nc + 1;
    let npf = fine.n + 1;
    let avg = |a: [f64; 3], b: [f64; 3]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])];
    let coarse_at = |i: usize, j: usize| values.get(j * npc + i);
    let mut out = NodalField::zeros(fine.num_nodes());
    for jf in 0..npf {
        for if_ in 0..npf {
            let (i, a) = (if_ / 2, if_ % 2);
            let (j, b) = (jf / 2, jf % 2);
            let v = match (a, b) {
                (0, 0) => coarse_at(i, j),
                (1, 0) => avg(coarse_at(i, j), coarse_at(i + 1, j)),
                (0, 1) => avg(coarse_at(i, j), coarse_at(i, j + 1)),
                // Cell centre lies on the SW-NE diagonal.
                _ => avg(coarse_at(i, j), coarse_at(i + 1, j + 1)),
            };
            out.set(jf * npf + if_, v);
        }
    }
    Ok(out)
}

/// Evaluates the P1 interpolant of `values` at an arbitrary point of the
/// structured mesh (points outside the domain are clamped to it).
pub fn eval_p1(mesh: &Mesh, values: &NodalField, x: f64, y: f64) -> [f64; 3] {
    let n = mesh.n;
    let np = n + 1;
    let fx = ((x - mesh.domain.x_min) / mesh.domain.width() * n as f64).clamp(0.0, n as f64);
    let fy = ((y - mesh.domain.y_min) / mesh.domain.height() * n as f64).clamp(0.0, n as f64);
    let i = (fx as usize).min(n - 1);
    let j = (fy as usize).min(n - 1);
    let xi = fx - i as f64;
    let eta = fy - j as f64;
    let sw = values.get(j * np + i);
    let se = values.get(j * np + i + 1);
    let nw = values.get((j + 1) * np + i);
    let ne = values.get((j + 1) * np + i + 1);
    let mut out = [0.0; 3];
    if eta <= xi {
        // Triangle (sw, se, ne): barycentric (1 - xi, xi - eta, eta).
        for k in 0..3 {
            out[k] = (1.0 - xi) * sw[k] + (xi - eta) * se[k] + eta * ne[k];
        }
    } else {
        // Triangle (sw, ne, nw): barycentric (1 - eta, xi, eta - xi).
        for k in 0..3 {
            out[k] = (1.0 - eta) * sw[k] + xi * ne[k] + (eta - xi) * nw[k];
        }
    }
    out
}
