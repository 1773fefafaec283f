//! Grid propagation with a Dirichlet wall at the detector, the wall
//! derivative record `phi(t) = d_x psi(L, t)` and the densities built from it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::arrival::{ArrivalDensity, Method};
use crate::error::{Error, Result};
use crate::model::{GaussianState, InitialState, PhysParams, Piece, Potential};
use crate::quad;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Uniform grid and step sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub dt: f64,
}

impl OracleGrid {
    /// Grid ending at the detector, wide enough to hold every term of the state.
    pub fn restricted(state: &InitialState, params: PhysParams, dx: f64, dt: f64) -> Self {
        let x_min = state.terms().iter().map(|(_, g)| g.x0 - 12.0 * g.delta).fold(f64::INFINITY, f64::min);
        let n = ((params.detector - x_min) / dx).ceil();
        Self { x_min: params.detector - n * dx, x_max: params.detector, dx, dt }
    }

    pub fn halved(&self) -> Self {
        Self { dx: 0.5 * self.dx, dt: 0.5 * self.dt, ..*self }
    }

    pub fn nodes(&self) -> Vec<f64> {
        let n = ((self.x_max - self.x_min) / self.dx).round() as usize + 1;
        (0..n).map(|j| self.x_max - (n - 1 - j) as f64 * self.dx).collect()
    }
}

/// Cell-averaged potential on the nodes; point interactions become a
/// single node of height `kappa / (M dx)`.
pub fn grid_potential(potential: &Potential, mass: f64, x: &[f64], dx: f64) -> Vec<f64> {
    let mut v = vec![0.0; x.len()];
    for piece in potential.profile() {
        match piece {
            Piece::Slab { x_left, x_right, v: h } => {
                for (j, xj) in x.iter().enumerate() {
                    let lo = (xj - 0.5 * dx).max(x_left);
                    let hi = (xj + 0.5 * dx).min(x_right);
                    if hi > lo {
                        v[j] += h * (hi - lo) / dx;
                    }
                }
            }
            Piece::Delta { x: x_d, kappa } => {
                let j = x.partition_point(|xj| *xj < x_d - 0.5 * dx).min(x.len() - 1);
                v[j] += kappa / (mass * dx);
            }
        }
    }
    v
}

/// Crank-Nicolson stepper with zero boundary values at both grid ends.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub x: Vec<f64>,
    pub dx: f64,
    pub dt: f64,
    pub mass: f64,
    diag_rhs: Vec<Complex64>,
    off: Complex64,
    cprime: Vec<Complex64>,
    denom: Vec<Complex64>,
}

impl Propagator {
    /// `v` may carry a negative imaginary part (absorbing layer).
    pub fn new(x: Vec<f64>, v: &[Complex64], mass: f64, dt: f64) -> Self {
        let dx = x[1] - x[0];
        let kin = 1.0 / (mass * dx * dx);
        let off = -0.5 * kin;
        let half = I * 0.5 * dt;
        let diag_lhs: Vec<Complex64> = v.iter().map(|v| 1.0 + half * (kin + v)).collect();
        let diag_rhs: Vec<Complex64> = v.iter().map(|v| 1.0 - half * (kin + v)).collect();
        let off_lhs = half * off;
        let n = x.len();
        let mut cprime = vec![Complex64::new(0.0, 0.0); n];
        let mut denom = vec![Complex64::new(1.0, 0.0); n];
        for j in 1..n - 1 {
            let d = if j == 1 { diag_lhs[j] } else { diag_lhs[j] - off_lhs * cprime[j - 1] };
            denom[j] = d;
            cprime[j] = off_lhs / d;
        }
        Self { x, dx, dt, mass, diag_rhs, off: off_lhs, cprime, denom }
    }

    pub fn step(&self, psi: &mut [Complex64]) {
        let n = psi.len();
        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        for j in 1..n - 1 {
            rhs[j] = self.diag_rhs[j] * psi[j] - self.off * (psi[j - 1] + psi[j + 1]);
        }
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for j in 1..n - 1 {
            let prev = if j == 1 { Complex64::new(0.0, 0.0) } else { self.off * y[j - 1] };
            y[j] = (rhs[j] - prev) / self.denom[j];
        }
        psi[n - 1] = Complex64::new(0.0, 0.0);
        psi[0] = Complex64::new(0.0, 0.0);
        let mut next = Complex64::new(0.0, 0.0);
        for j in (1..n - 1).rev() {
            let val = y[j] - self.cprime[j] * next;
            psi[j] = val;
            next = val;
        }
    }

    pub fn norm(&self, psi: &[Complex64]) -> f64 {
        psi.iter().map(|p| p.norm_sqr()).sum::<f64>() * self.dx
    }
}

/// Relative dispersion error of the scheme at wavenumber `k`.
pub fn dispersion_error(k: f64, mass: f64, dx: f64, dt: f64) -> f64 {
    let k2_eff = 2.0 * (1.0 - (k * dx).cos()) / (dx * dx);
    let omega = k * k / (2.0 * mass);
    let omega_eff = 2.0 * (0.5 * k2_eff / (2.0 * mass) * dt).atan() / dt;
    (omega_eff / omega - 1.0).abs()
}

/// Wave function on the grid at one time.
#[derive(Debug, Clone, Serialize)]
pub struct GridWave {
    pub x_grid: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub t: f64,
    pub dx: f64,
    pub dt: f64,
}

/// `phi(t) = d_x psi(L, t)` sampled every time step.
#[derive(Debug, Clone, Serialize)]
pub struct WallRecord {
    pub t: Vec<f64>,
    pub phi: Vec<Complex64>,
    pub mass: f64,
}

/// Output of a propagation with the Dirichlet wall.
#[derive(Debug, Clone, Serialize)]
pub struct RestrictedRun {
    pub grid: OracleGrid,
    pub record: WallRecord,
    pub last: GridWave,
    pub norm_drift: f64,
    /// Set when the dispersion error at the top of the spectrum exceeds 1%.
    pub cfl_advisory: Option<String>,
}

fn cfl_advisory(state: &InitialState, mass: f64, grid: &OracleGrid) -> Option<String> {
    let (_, kmax) = state.k_range(6.0);
    let e = dispersion_error(kmax, mass, grid.dx, grid.dt);
    (e > 0.01).then(|| format!("dispersion error {e:.3e} at k = {kmax:.3} exceeds 1%"))
}

fn initial_wave(state: &InitialState, x: &[f64]) -> Vec<Complex64> {
    let mut psi: Vec<Complex64> = x.iter().map(|&xj| state.position_amplitude(xj)).collect();
    let n = psi.len();
    psi[0] = Complex64::new(0.0, 0.0);
    psi[n - 1] = Complex64::new(0.0, 0.0);
    psi
}

/// One-sided fourth-order derivative at the last node, using `psi(L) = 0`.
fn wall_derivative(psi: &[Complex64], dx: f64) -> Complex64 {
    let n = psi.len();
    (25.0 * psi[n - 1] - 48.0 * psi[n - 2] + 36.0 * psi[n - 3] - 16.0 * psi[n - 4] + 3.0 * psi[n - 5]) / (12.0 * dx)
}

/// Evolves `state` on `grid` up to `t_max`, recording the wall derivative.
pub fn propagate_restricted(
    state: &InitialState,
    potential: &Potential,
    params: PhysParams,
    grid: OracleGrid,
    t_max: f64,
) -> Result<RestrictedRun> {
    if (grid.x_max - params.detector).abs() > 1e-9 * params.detector.abs().max(1.0) {
        return Err(Error::InvalidParameter("restricted grid must end at the detector".into()));
    }
    let x = grid.nodes();
    let near_wall: f64 = x
        .iter()
        .filter(|xj| **xj > params.detector - 10.0 * grid.dx)
        .map(|xj| state.position_amplitude(*xj).norm_sqr() * grid.dx)
        .sum();
    if near_wall > 1e-10 {
        return Err(Error::InvalidParameter(format!("initial state has weight {near_wall:e} at the wall")));
    }
    let v: Vec<Complex64> =
        grid_potential(potential, params.mass, &x, grid.dx).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let prop = Propagator::new(x.clone(), &v, params.mass, grid.dt);
    let mut psi = initial_wave(state, &x);
    let n0 = prop.norm(&psi);
    let steps = (t_max / grid.dt).ceil() as usize;
    let mut t = Vec::with_capacity(steps + 1);
    let mut phi = Vec::with_capacity(steps + 1);
    t.push(0.0);
    phi.push(wall_derivative(&psi, grid.dx));
    for s in 1..=steps {
        prop.step(&mut psi);
        t.push(s as f64 * grid.dt);
        phi.push(wall_derivative(&psi, grid.dx));
    }
    let norm_drift = (prop.norm(&psi) - n0).abs() / n0;
    Ok(RestrictedRun {
        grid,
        record: WallRecord { t, phi, mass: params.mass },
        last: GridWave { x_grid: x, psi, t: steps as f64 * grid.dt, dx: grid.dx, dt: grid.dt },
        norm_drift,
        cfl_advisory: cfl_advisory(state, params.mass, &grid),
    })
}

impl WallRecord {
    /// Four-point Lagrange interpolation; zero before the first sample.
    pub fn phi_at(&self, s: f64) -> Complex64 {
        let n = self.t.len();
        if s < 0.0 || n < 4 {
            return Complex64::new(0.0, 0.0);
        }
        let h = self.t[1] - self.t[0];
        let u = s / h;
        if u > (n - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let i = (u.floor() as usize).clamp(1, n - 3);
        let r = u - i as f64;
        let w = [
            -r * (r - 1.0) * (r - 2.0) / 6.0,
            (r + 1.0) * (r - 1.0) * (r - 2.0) / 2.0,
            -(r + 1.0) * r * (r - 2.0) / 2.0,
            (r + 1.0) * r * (r - 1.0) / 6.0,
        ];
        w[0] * self.phi[i - 1] + w[1] * self.phi[i] + w[2] * self.phi[i + 1] + w[3] * self.phi[i + 2]
    }

    pub fn t_end(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    /// `rho(t, t') = (1/4M^2) conj(phi(t')) phi(t) G0(t - t')` for `t != t'`.
    pub fn rho(&self, t: f64, tp: f64) -> Complex64 {
        let m = self.mass;
        let v = t - tp;
        let g = (m / (2.0 * PI * v.abs())).sqrt() * Complex64::from_polar(1.0, PI / 4.0 * v.signum());
        self.phi_at(t) * self.phi_at(tp).conj() * g / (4.0 * m * m)
    }

    /// Cell-integrated `rho` on a uniform grid with the singular kernel integrated exactly.
    pub fn rho_small_scale(&self, t_grid: &[f64]) -> Result<CellMatrix> {
        let n = t_grid.len();
        if !(2..=200).contains(&n) {
            return Err(Error::InvalidParameter(format!("small-scale grid needs 2..=200 points, got {n}")));
        }
        let h = t_grid[1] - t_grid[0];
        if t_grid.windows(2).any(|w| ((w[1] - w[0]) / h - 1.0).abs() > 1e-9) {
            return Err(Error::InvalidParameter("small-scale grid must be uniform".into()));
        }
        let m = self.mass;
        let pref = (m / (2.0 * PI)).sqrt() * h.powf(1.5) / (4.0 * m * m);
        let phi: Vec<Complex64> = t_grid.iter().map(|t| self.phi_at(*t)).collect();
        let c = |m: usize| {
            let m = m as f64;
            (4.0 / 3.0) * ((m + 1.0).powf(1.5) - 2.0 * m.powf(1.5) + (m - 1.0).powf(1.5))
        };
        let mut w = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let kern = if i == j {
                    Complex64::new((4.0 / 3.0) * 2f64.sqrt(), 0.0)
                } else {
                    let sign = if i > j { 1.0 } else { -1.0 };
                    c(i.abs_diff(j)) * Complex64::from_polar(1.0, sign * PI / 4.0)
                };
                w[i * n + j] = pref * phi[i] * phi[j].conj() * kern;
            }
        }
        Ok(CellMatrix { t_grid: t_grid.to_vec(), h, w })
    }

    /// Arrival density from the diagonal of `rho`, smeared with a Gaussian of width `tau`:
    /// `p(t) = (1/2) int dv exp(-v^2/8 tau^2) rho(t + v/2, t - v/2)`.
    pub fn ppp_density(&self, t_grid: &[f64], tau: f64, e_max: f64) -> ArrivalDensity {
        let m = self.mass;
        let pref = (m / (2.0 * PI)).sqrt() / (8.0 * m * m);
        let v_cap = 12.0 * 2f64.sqrt() * tau;
        let rot = Complex64::from_polar(1.0, PI / 4.0);
        let p: Vec<f64> = t_grid
            .iter()
            .map(|&t| {
                let v_max = v_cap.min(2.0 * t).min(2.0 * (self.t_end() - t));
                if v_max <= 0.0 {
                    return 0.0;
                }
                let s_max = v_max.sqrt();
                let panels = 8 + (e_max * v_max / PI).ceil() as usize;
                let (s, w) = quad::composite_gauss_legendre(0.0, s_max, panels, 8);
                let sum: f64 = s
                    .iter()
                    .zip(&w)
                    .map(|(s, w)| {
                        let v = s * s;
                        let h = (-v * v / (8.0 * tau * tau)).exp()
                            * self.phi_at(t + 0.5 * v)
                            * self.phi_at(t - 0.5 * v).conj();
                        w * 4.0 * (rot * h).re
                    })
                    .sum();
                pref * sum
            })
            .collect();
        ArrivalDensity::from_samples(t_grid.to_vec(), p, Method::Oracle)
    }
}

/// `W_ij = int_cell_i int_cell_j rho(s, s') ds ds'`.
#[derive(Debug, Clone, Serialize)]
pub struct CellMatrix {
    pub t_grid: Vec<f64>,
    pub h: f64,
    pub w: Vec<Complex64>,
}

impl CellMatrix {
    pub fn n(&self) -> usize {
        self.t_grid.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.w[i * self.n() + j]
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.n();
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                r = r.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        r
    }

    /// `int_a^b int_a^b rho` over the cells `lo..hi`.
    pub fn block_sum(&self, lo: usize, hi: usize) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for i in lo..hi {
            for j in lo..hi {
                s += self.get(i, j);
            }
        }
        s
    }
}

/// Probability current at a probe point, sampled every step.
#[derive(Debug, Clone, Serialize)]
pub struct FluxRecord {
    pub t_grid: Vec<f64>,
    pub j: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// Mass right of the barrier still on the grid at the end.
    pub transmitted_on_grid: f64,
}

/// Absorbing-layer parameters of the companion grid.
const CAP_WIDTH: f64 = 60.0;
const CAP_STRENGTH: f64 = 0.4;

/// Current `J = Im(conj(psi) d_x psi) / M` at `probe` on a grid without the wall.
pub fn flux_arrival_density(
    state: &InitialState,
    potential: &Potential,
    params: PhysParams,
    grid: OracleGrid,
    t_max: f64,
    probe: f64,
) -> Result<FluxRecord> {
    let x_min = grid.x_min - CAP_WIDTH;
    let x_max = probe.max(grid.x_max) + 20.0 + CAP_WIDTH;
    let n = ((x_max - x_min) / grid.dx).round() as usize + 1;
    let x: Vec<f64> = (0..n).map(|j| x_min + j as f64 * grid.dx).collect();
    let real = grid_potential(potential, params.mass, &x, grid.dx);
    let v: Vec<Complex64> = x
        .iter()
        .zip(&real)
        .map(|(xj, vr)| {
            let left = ((x_min + CAP_WIDTH - xj) / CAP_WIDTH).max(0.0);
            let right = ((xj - (x_max - CAP_WIDTH)) / CAP_WIDTH).max(0.0);
            Complex64::new(*vr, -CAP_STRENGTH * (left * left + right * right))
        })
        .collect();
    let prop = Propagator::new(x.clone(), &v, params.mass, grid.dt);
    let mut psi = initial_wave(state, &x);
    let jp = ((probe - x_min) / grid.dx).round() as usize;
    let current = |psi: &[Complex64]| {
        let d = (psi[jp + 1] - psi[jp - 1]) / (2.0 * grid.dx);
        (psi[jp].conj() * d).im / params.mass
    };
    let steps = (t_max / grid.dt).ceil() as usize;
    let mut t = vec![0.0];
    let mut j = vec![current(&psi)];
    for s in 1..=steps {
        prop.step(&mut psi);
        t.push(s as f64 * grid.dt);
        j.push(current(&psi));
    }
    let (_, b) = potential.support();
    let transmitted_on_grid = x.iter().zip(&psi).filter(|(xj, _)| **xj > b).map(|(_, p)| p.norm_sqr() * grid.dx).sum();
    let cumulative = quad::cumulative_trapezoid(&t, &j);
    Ok(FluxRecord { t_grid: t, j, cumulative, transmitted_on_grid })
}

impl FluxRecord {
    /// Current resampled on another grid.
    pub fn resample(&self, t_grid: &[f64]) -> Vec<f64> {
        t_grid.iter().map(|t| quad::interp_linear(&self.t_grid, &self.j, *t)).collect()
    }
}

/// Kijowski density of a free Gaussian,
/// `|int dk sqrt(k) psi(k) exp(ikL - ik^2 t/2M)|^2 / (2 pi M)`, by Simpson's rule.
pub fn kijowski_reference(state: &GaussianState, mass: f64, l: f64, t_grid: &[f64]) -> ArrivalDensity {
    let (k0, s, x0) = (state.k0, state.sigma, state.x0);
    let lo = (k0 - 10.0 * s).max(0.0);
    let hi = k0 + 10.0 * s;
    let n = 4000;
    let h = (hi - lo) / n as f64;
    let amp = (2.0 * PI * s * s).powf(-0.25);
    let p: Vec<f64> = t_grid
        .iter()
        .map(|&t| {
            let mut z = Complex64::new(0.0, 0.0);
            for i in 0..=n {
                let k = lo + i as f64 * h;
                let wgt = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let q = k - k0;
                let phase = k * (l - x0) - k * k * t / (2.0 * mass);
                z += wgt * k.sqrt() * amp * (-q * q / (4.0 * s * s)).exp() * Complex64::from_polar(1.0, phase);
            }
            (z * h / 3.0).norm_sqr() / (2.0 * PI * mass)
        })
        .collect();
    ArrivalDensity::from_samples(t_grid.to_vec(), p, Method::Oracle)
}

/// One named comparison with its tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value.is_finite() && value < tolerance }
    }
}

/// Result of a cross-validation suite.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub case: String,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl ComparisonReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// `max |a - b| / max |b|`.
pub fn linf_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// `int |a - b| dt / int |b| dt`.
pub fn l1_rel(t: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    let abs_b: Vec<f64> = b.iter().map(|v| v.abs()).collect();
    quad::trapezoid(t, &diff) / quad::trapezoid(t, &abs_b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_averaged_potential_keeps_the_area() {
        let x = quad::linspace(-2.0, 2.0, 401);
        let dx = x[1] - x[0];
        let square = grid_potential(&Potential::square(1.5, 0.33).unwrap(), 1.0, &x, dx);
        assert!((square.iter().sum::<f64>() * dx - 1.5 * 0.33).abs() < 1e-12);
        let delta = grid_potential(&Potential::delta(0.7).unwrap(), 2.0, &x, dx);
        assert_eq!(delta.iter().filter(|v| **v != 0.0).count(), 1);
        assert!((delta.iter().sum::<f64>() * dx - 0.35).abs() < 1e-12);
    }

    #[test]
    fn dispersion_error_is_second_order() {
        let coarse = dispersion_error(1.0, 1.0, 0.1, 0.1);
        let fine = dispersion_error(1.0, 1.0, 0.05, 0.05);
        assert!(coarse < 0.01);
        assert!((coarse / fine - 4.0).abs() < 0.1, "{}", coarse / fine);
    }

    #[test]
    fn crank_nicolson_follows_free_evolution() {
        let g = GaussianState::from_sigma(-20.0, 1.0, 0.2).unwrap();
        let state = InitialState::gaussian(g);
        let x = quad::linspace(-60.0, 40.0, 4001);
        let dt = 0.02;
        let prop = Propagator::new(x.clone(), &vec![Complex64::new(0.0, 0.0); x.len()], 1.0, dt);
        let mut psi = initial_wave(&state, &x);
        for _ in 0..500 {
            prop.step(&mut psi);
        }
        let t = 500.0 * dt;
        // Momentum-space route: psi(x, t) = int dk psi(k) exp(ikx - ik^2 t/2) / sqrt(2 pi).
        let (k, w) = quad::composite_gauss_legendre(0.0, 2.0, 40, 16);
        let mut worst: f64 = 0.0;
        for (j, xj) in x.iter().enumerate().step_by(20) {
            let exact: Complex64 = k
                .iter()
                .zip(&w)
                .map(|(kq, wq)| {
                    *wq * state.momentum_amplitude(*kq) * Complex64::from_polar(1.0, kq * xj - 0.5 * kq * kq * t)
                })
                .sum::<Complex64>()
                / (2.0 * PI).sqrt();
            worst = worst.max((psi[j] - exact).norm());
        }
        assert!(worst < 2e-3, "{worst}");
        assert!((prop.norm(&psi) - 1.0).abs() < 1e-6, "{}", prop.norm(&psi));
    }

    #[test]
    fn small_scale_matrix_is_hermitian_and_positive() {
        let free = Potential::Free;
        let params = PhysParams::new(1.0, 5.0, &free).unwrap();
        let state = InitialState::gaussian(GaussianState::from_sigma(-45.0, 1.0, 0.1).unwrap());
        let grid = OracleGrid::restricted(&state, params, 0.05, 0.05);
        let run = propagate_restricted(&state, &free, params, grid, 80.0).unwrap();
        let cells = run.record.rho_small_scale(&quad::linspace(30.0, 70.0, 81)).unwrap();
        let scale = (0..cells.n()).map(|i| cells.get(i, i).norm()).fold(0.0, f64::max);
        assert!(cells.hermiticity_residual() <= 1e-12 * scale);
        for lo in 0..cells.n() {
            for hi in (lo + 1..=cells.n()).step_by(5) {
                assert!(cells.block_sum(lo, hi).re >= -1e-10 * scale);
            }
        }
        assert!(run.norm_drift < 1e-10);
    }
}
