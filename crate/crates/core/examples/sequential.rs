//! Sequential measurement: tunnelling-time marginal at growing phase-space
//! resolution, compared with its sharp limit.
//!
//! cargo run --example sequential

use tunnel_toa::model::{GaussianState, PhysParams, Potential};
use tunnel_toa::oracle::l1_rel;
use tunnel_toa::quad::linspace;
use tunnel_toa::sequential::{ideal_distributions, regime_check, sequential_densities, MomentumDiagonal, RegimePolicy};

fn main() -> tunnel_toa::Result<()> {
    let barrier = Potential::square(2.0, 1.0)?;
    let params = PhysParams::new(1.0, 10.0, &barrier)?;
    let rho = MomentumDiagonal::gaussian(GaussianState::from_sigma(-100.0, 0.8, 0.15)?);
    let t = linspace(-4.0, 8.0, 2401);
    let ideal = ideal_distributions(&rho, &barrier, params.mass, &t, None)?;

    println!("{:>6} {:>10} {:>12} {:>10}", "sigma", "integral", "L1 vs sharp", "sharp?");
    for sigma in [0.5, 1.0, 2.0, 5.0, 10.0] {
        // The marginal conditions fail at these widths; report them instead of stopping.
        let dens = sequential_densities(&rho, sigma, &barrier, params, &t, RegimePolicy::Report)?;
        println!(
            "{sigma:6.1} {:10.5} {:12.4} {:>10}",
            dens.tunnelling.integral,
            l1_rel(&t, &dens.tunnelling.p, &ideal.p_tun),
            dens.regime_tun
        );
    }

    let check = regime_check(&Potential::delta(1.0)?, &rho, 1.0, params.mass)?;
    for note in &check.notes {
        println!("{note}");
    }
    Ok(())
}
