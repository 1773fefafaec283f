//! Crank-Nicolson oracle: the smeared density built from the wall amplitude and
//! the probability current, both against the spectral density.
//!
//! cargo run --release --example oracle

use tunnel_toa::arrival::{p_exact, peak_time, SpectralState};
use tunnel_toa::model::{GaussianState, InitialState, PhysParams, Potential};
use tunnel_toa::oracle::{flux_arrival_density, l1_rel, linf_rel, propagate_restricted, OracleGrid};
use tunnel_toa::quad::linspace;

fn main() -> tunnel_toa::Result<()> {
    let barrier = Potential::square(0.6, 0.2)?;
    let params = PhysParams::new(1.0, 10.0, &barrier)?;
    let state = InitialState::gaussian(GaussianState::from_sigma(-150.0, 1.0, 0.02)?);
    let t = linspace(60.0, 300.0, 200);

    let exact = p_exact(&SpectralState::new(state.clone(), &barrier, params, 256)?, &t)?;
    let grid = OracleGrid::restricted(&state, params, 0.05, 0.05);
    let run = propagate_restricted(&state, &barrier, params, grid, 420.0)?;
    println!("norm drift {:.2e}", run.norm_drift);

    // tau = 50 puts eps tau at 25 for k0 = 1.
    let (_, kmax) = state.k_range(6.0);
    let oracle = run.record.ppp_density(&t, 50.0, kmax * kmax / 2.0);
    println!("smeared oracle vs spectral: {:.3}% of the peak", 100.0 * linf_rel(&oracle.p, &exact.p));

    // Without the wall there are no wall-barrier echoes, so only the free
    // packet is compared in shape; behind the barrier the peaks are compared.
    let free = Potential::Free;
    let flux = flux_arrival_density(&state, &free, params, grid, 420.0, params.detector)?;
    let free_exact = p_exact(&SpectralState::new(state.clone(), &free, params, 256)?, &t)?;
    println!("free current vs spectral: {:.3}% in L1", 100.0 * l1_rel(&t, &flux.resample(&t), &free_exact.p));
    let flux = flux_arrival_density(&state, &barrier, params, grid, 420.0, params.detector)?.resample(&t);
    println!("barrier: current peaks at {:.2}, spectral density at {:.2}", peak_time(&t, &flux), exact.t_peak);
    Ok(())
}
