//! Phase times: the delta barrier, the Hartman plateau of an opaque square
//! barrier, and the resolution verdict.
//!
//! cargo run --example phase_times

use tunnel_toa::model::{a_coefficient, forbidden_region, Potential};
use tunnel_toa::povm::{phase_time, uncertainty_bound};
use tunnel_toa::scattering::{gamma, solve_modes};

fn main() -> tunnel_toa::Result<()> {
    let (m, k0) = (1.0, 1.0);

    let delta = Potential::delta(1.0)?;
    let ts = phase_time(|k| solve_modes(&delta, k, m), k0, m, 0.0)?;
    println!("delta barrier, kappa = 1: t_tun = {:.6} (expected 0.5)", ts.t_tun);

    let v0 = 2.0;
    let g = gamma(v0, k0, m);
    println!("\nsquare barrier V0 = {v0}: 2M/(gamma k0) = {:.6}", 2.0 * m / (g * k0));
    for gd in [5.0, 10.0, 20.0] {
        let barrier = Potential::square(v0, gd / g)?;
        let d_k = forbidden_region(&barrier, k0, m).d_k;
        let ts = phase_time(|k| solve_modes(&barrier, k, m), k0, m, d_k)?;
        let a = a_coefficient(&barrier, k0, m)?;
        let bound = uncertainty_bound(&ts, a, 0.05, m, k0);
        println!(
            "  gamma d = {gd:4.1}: t_tun = {:.6}, t_d = {:8.3}, uncertainty {:7.2}, distinguishable: {}",
            ts.t_tun, ts.t_d, bound.total, bound.distinguishable
        );
    }
    Ok(())
}
