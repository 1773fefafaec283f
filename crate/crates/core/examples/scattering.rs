//! Transmission through a square barrier: transfer matrix against the closed form,
//! and the opaque-barrier limit.
//!
//! cargo run --example scattering

use tunnel_toa::model::Potential;
use tunnel_toa::quad::linspace;
use tunnel_toa::scattering::{gamma, long_barrier_limit, solve_modes, square_barrier_analytic};

fn main() -> tunnel_toa::Result<()> {
    let (v0, d, m) = (2.0, 1.0, 1.0);
    let barrier = Potential::square(v0, d)?;
    println!("{:>8} {:>14} {:>14} {:>12} {:>10}", "k", "|T|^2", "|R|^2", "|dT|/|T|", "residual");
    for k in linspace(0.5, 2.5, 11) {
        let sol = solve_modes(&barrier, k, m)?;
        let (t, _) = square_barrier_analytic(v0, d, k, m);
        println!(
            "{k:8.3} {:14.6e} {:14.6e} {:12.2e} {:10.1e}",
            sol.t_plus.norm_sqr(),
            sol.r_plus.norm_sqr(),
            (sol.t_plus - t).norm() / t.norm(),
            sol.max_residual()
        );
    }

    // Opaque limit: the error shrinks like exp(-2 gamma d).
    let k = 1.0;
    println!("\n{:>6} {:>8} {:>12} {:>12}", "d", "gamma d", "|dT|/|T|", "e^-2gd");
    for d in [3.0, 4.0, 6.0, 8.0] {
        let sol = solve_modes(&Potential::square(v0, d)?, k, m)?;
        let (t_long, _) = long_barrier_limit(v0, d, k, m)?;
        let gd = gamma(v0, k, m) * d;
        println!(
            "{d:6.1} {gd:8.3} {:12.3e} {:12.3e}",
            (sol.t_plus - t_long).norm() / sol.t_plus.norm(),
            (-2.0 * gd).exp()
        );
    }
    Ok(())
}
