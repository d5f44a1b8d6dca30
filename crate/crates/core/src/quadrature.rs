//! Symmetric quadrature on triangles in barycentric coordinates.

/// Quadrature rule on the reference triangle.
///
/// Points are barycentric; weights sum to one, so the integral over a
/// physical triangle `K` is `|K| * sum_q w_q f(x_q)`.
#[derive(Clone, Debug)]
pub struct TriangleQuadrature {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Six-point rule exact for total polynomial degree 4.
///
/// This one rule is used for every integral in the crate (mass, cross
/// coupling, SAV load vector, energies), which keeps the discrete energy
/// identities exact to round-off: the worst integrand, `|u|^4` with P1
/// `u`, has degree 4.
pub fn degree4() -> TriangleQuadrature {
    const A1: f64 = 0.108103018168070;
    const B1: f64 = 0.445948490915965;
    const W1: f64 = 0.223381589678011;
    const A2: f64 = 0.816847572980459;
    const B2: f64 = 0.091576213509771;
    const W2: f64 = 0.109951743655322;
    TriangleQuadrature {
        points: vec![
            [A1, B1, B1],
            [B1, A1, B1],
            [B1, B1, A1],
            [A2, B2, B2],
            [B2, A2, B2],
            [B2, B2, A2],
        ],
        weights: vec![W1, W1, W1, W2, W2, W2],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Exact integral of `l1^a l2^b l3^c` over the reference triangle of
    /// area 1/2: a! b! c! 2 |T| / (a+b+c+2)!.
    fn exact_monomial(a: u32, b: u32, c: u32) -> f64 {
        factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2)
    }

    #[test]
    fn weights_sum_to_one() {
        let q = degree4();
        let s: f64 = q.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_to_degree_four() {
        let q = degree4();
        let area = 0.5;
        for a in 0..=4u32 {
            for b in 0..=4 - a {
                for c in 0..=4 - a - b {
                    let mut approx = 0.0;
                    for (p, w) in q.points.iter().zip(&q.weights) {
                        approx += w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32);
                    }
                    approx *= area;
                    let exact = exact_monomial(a, b, c);
                    assert!(
                        (approx - exact).abs() < 1e-14,
                        "monomial ({a},{b},{c}): {approx} vs {exact}"
                    );
                }
            }
        }
    }
}
