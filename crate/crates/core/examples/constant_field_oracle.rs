//! Cross-validates the finite-element stepper against an independent
//! dense oracle.
//!
//! For spatially constant initial data on a square with Neumann
//! boundary conditions, the exact solution stays constant in space, so
//! the PDE collapses to a 7-unknown ODE system in `(u, H, r)`. The
//! oracle solves that system with dense Gaussian elimination — no
//! meshes, no sparse algebra — and the FEM trajectory must agree with
//! it to solver tolerance at every node and every step.
//!
//! ```sh
//! cargo run --example constant_field_oracle
//! ```

use llb_sav::fem::Coefficients;
use llb_sav::selftest::{oracle_comparison, ConstantOracle};
use llb_sav::stepper::{Bdf2Init, Scheme};

fn main() -> llb_sav::Result<()> {
    let u0 = [0.7, 0.0, 0.0];
    let k = 1e-3;
    let steps = 50;

    // The oracle on its own: a handful of dense 7x7 solves.
    let oracle = ConstantOracle {
        coeff: Coefficients {
            gamma: 1.0,
            alpha: 1.0,
            sigma: 1.0,
            kappa: 1.0,
            mu: 1.0,
        },
        area: 4.0,
    };
    let states = oracle.run(u0, k, steps, Scheme::Euler, Bdf2Init::EulerSubsteps)?;
    let last = states.last().unwrap();
    println!(
        "oracle (Euler, {} steps): u = [{:.6}, {:.6}, {:.6}], r = {:.6}",
        steps, last.u[0], last.u[1], last.u[2], last.r
    );

    // The same trajectories through the full sparse FEM machinery.
    for (scheme, init) in [
        (Scheme::Euler, Bdf2Init::EulerSubsteps),
        (Scheme::Bdf2, Bdf2Init::ImplicitOneStep),
    ] {
        let (spread, deviation) = oracle_comparison(scheme, u0, 4, k, steps, init)?;
        println!(
            "{scheme:?}: max nodal spread {spread:.3e}, max deviation from oracle {deviation:.3e}"
        );
    }
    Ok(())
}
