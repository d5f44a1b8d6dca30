//! Tour of the sparse layer: CSR assembly, CG on an SPD system, the
//! bordered (rank-one augmented) solve used for the SAV scalar, and
//! MatrixMarket round-tripping.
//!
//! ```sh
//! cargo run --example bordered_solver
//! ```

use llb_sav::sparse::{
    read_matrix_market, solve_bordered, solve_general, solve_spd, write_matrix_market,
    BorderedSystem, CsrMatrix, SolverKind,
};

/// Tridiagonal SPD test matrix (discrete 1D Laplacian plus identity).
fn laplacian_plus_id(n: usize) -> CsrMatrix {
    let mut triplets = Vec::new();
    for i in 0..n {
        triplets.push((i, i, 3.0));
        if i + 1 < n {
            triplets.push((i, i + 1, -1.0));
            triplets.push((i + 1, i, -1.0));
        }
    }
    CsrMatrix::from_triplets(n, n, &triplets)
}

fn main() -> llb_sav::Result<()> {
    let n = 50;
    let a = laplacian_plus_id(n);
    let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();

    // Conjugate gradients on the SPD system.
    let x_cg = solve_spd(&a, &b, 1e-12)?;
    let res: f64 = a
        .matvec(&x_cg)
        .iter()
        .zip(&b)
        .map(|(ax, bi)| (ax - bi) * (ax - bi))
        .sum::<f64>()
        .sqrt();
    println!("CG: residual {res:.3e} on {n}x{n} SPD system ({} nnz)", a.nnz());

    // GMRES and sparse LU agree on the same system.
    let x_lu = solve_general(&a, &b, 1e-12, SolverKind::Lu)?;
    let x_gm = solve_general(&a, &b, 1e-12, SolverKind::Gmres)?;
    let diff = x_lu
        .iter()
        .zip(&x_gm)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0f64, f64::max);
    println!("LU vs GMRES: max component difference {diff:.3e}");

    // Bordered system [[A, b_col], [b_row^T, corner]]: one Schur
    // complement scalar solve with the factorisation of A reused.
    let b_col: Vec<f64> = (0..n).map(|i| 0.1 * (i as f64 * 0.7).cos()).collect();
    let b_row = b_col.clone();
    let mut rhs = b.clone();
    rhs.push(1.5);
    let sys = BorderedSystem {
        a: a.clone(),
        b_col,
        b_row,
        corner: 2.0,
        rhs,
    };
    let sol = solve_bordered(&sys, 1e-12, SolverKind::Lu)?;
    println!(
        "bordered: scalar {:.6}, Schur denominator {:.6}, residual {:.3e}",
        sol.scalar, sol.schur_denominator, sol.residual
    );

    // MatrixMarket round trip.
    let mut text = Vec::new();
    write_matrix_market(&a, &mut text)?;
    let back = read_matrix_market(std::io::BufReader::new(&text[..]))?;
    let same = a.nnz() == back.nnz()
        && a.entries()
            .zip(back.entries())
            .all(|(p, q)| p.0 == q.0 && p.1 == q.1 && (p.2 - q.2).abs() < 1e-14);
    println!(
        "MatrixMarket round trip: {} ({} bytes)",
        if same { "exact" } else { "MISMATCH" },
        text.len()
    );
    Ok(())
}
