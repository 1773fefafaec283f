//! Arrival-time densities at the detector: spectral quadrature, monochromatic
//! amplitude, Gaussian closed forms and peak extraction.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{forbidden_region, GaussianState, InitialState, PhysParams, Potential};
use crate::povm::{b_coefficient, b_first_passage, dirichlet_mode, expansion_params, DirichletMode, TimeScales};
use crate::quad::{self, default_step};
use crate::scattering::{cis, solve_modes};

/// Which formula produced a density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    ExactQuadrature,
    SmearedQuadrature { tau: f64 },
    Monochromatic,
    GaussianP1,
    GaussianP2,
    GaussianP3,
    Oracle,
}

/// What to do when a regime condition fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RegimePolicy {
    /// Fail with `RegimeViolation`.
    #[default]
    Enforce,
    /// Evaluate anyway and record the flag.
    Report,
}

/// A regime condition evaluated for one density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeFlag {
    pub condition: String,
    pub value: f64,
    pub threshold: f64,
    pub satisfied: bool,
}

impl RegimeFlag {
    /// Flag for `value < threshold`.
    pub fn below(condition: &str, value: f64, threshold: f64) -> Self {
        Self { condition: condition.into(), value, threshold, satisfied: value < threshold }
    }

    /// Flag for `value >= threshold`.
    pub fn at_least(condition: &str, value: f64, threshold: f64) -> Self {
        Self { condition: condition.into(), value, threshold, satisfied: value >= threshold }
    }

    fn into_error(self, k: Option<f64>) -> Error {
        Error::RegimeViolation { condition: self.condition, value: self.value, threshold: self.threshold, k }
    }
}

/// Sampled arrival density with its non-detection weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrivalDensity {
    pub t_grid: Vec<f64>,
    pub p: Vec<f64>,
    pub p_nodetect: f64,
    pub method: Method,
    pub t_peak: f64,
    pub regime: Vec<RegimeFlag>,
    pub diagnostics: Vec<String>,
    /// Most negative value seen before clamping.
    pub min_raw: f64,
}

impl ArrivalDensity {
    pub fn from_samples(t_grid: Vec<f64>, raw: Vec<f64>, method: Method) -> Self {
        let mut diagnostics = Vec::new();
        let min_raw = raw.iter().copied().fold(f64::INFINITY, f64::min);
        if min_raw < -1e-12 {
            diagnostics.push(format!("density dips to {min_raw:e} before clamping"));
        }
        let p: Vec<f64> = raw.into_iter().map(|v| if (-1e-12..0.0).contains(&v) { 0.0 } else { v }).collect();
        let integral = quad::trapezoid(&t_grid, &p);
        let mut p_nodetect = 1.0 - integral;
        if !(-1e-3..=1.0 + 1e-3).contains(&p_nodetect) {
            diagnostics.push(format!("non-detection weight {p_nodetect:.6} clipped to [0, 1]"));
        }
        p_nodetect = p_nodetect.clamp(0.0, 1.0);
        let t_peak = peak_time(&t_grid, &p);
        Self { t_grid, p, p_nodetect, method, t_peak, regime: Vec::new(), diagnostics, min_raw }
    }

    pub fn integral(&self) -> f64 {
        quad::trapezoid(&self.t_grid, &self.p)
    }

    pub fn peak_value(&self) -> f64 {
        self.p.iter().copied().fold(0.0, f64::max)
    }
}

/// Initial state expanded in Dirichlet modes on a Gauss-Legendre k-grid.
#[derive(Debug, Clone)]
pub struct SpectralState {
    pub params: PhysParams,
    pub k: Vec<f64>,
    pub weights: Vec<f64>,
    pub modes: Vec<DirichletMode>,
    pub c: Vec<Complex64>,
    pub transmission: Vec<Complex64>,
    pub source: InitialState,
    /// Size of the counter-propagating term left out of `c_k`.
    pub dropped_term_bound: f64,
}

/// Default number of Gauss-Legendre nodes on `[k0 - 6 sigma, k0 + 6 sigma]`.
pub const DEFAULT_K_NODES: usize = 256;

impl SpectralState {
    pub fn new(source: InitialState, potential: &Potential, params: PhysParams, nodes: usize) -> Result<Self> {
        source.check_against(potential)?;
        let (lo, hi) = source.k_range(6.0);
        let (k, weights) = match source.as_gaussian() {
            Some(_) => quad::gauss_legendre(nodes, lo, hi),
            None => quad::composite_gauss_legendre(lo, hi, nodes.div_ceil(32).max(2), 32),
        };
        let mut modes = Vec::with_capacity(k.len());
        let mut c = Vec::with_capacity(k.len());
        let mut transmission = Vec::with_capacity(k.len());
        for &ki in &k {
            let sol = solve_modes(potential, ki, params.mass)?;
            let mode = dirichlet_mode(&sol, params.detector)?;
            c.push(overlap(&sol, &mode, source.momentum_amplitude(ki)));
            transmission.push(sol.t_plus);
            modes.push(mode);
        }
        let dropped_term_bound =
            source.terms().iter().map(|(_, g)| (-g.k0 * g.k0 / (4.0 * g.sigma * g.sigma)).exp()).fold(0.0, f64::max);
        Ok(Self { params, k, weights, modes, c, transmission, source, dropped_term_bound })
    }

    pub fn gaussian(state: GaussianState, potential: &Potential, params: PhysParams) -> Result<Self> {
        Self::new(InitialState::gaussian(state), potential, params, DEFAULT_K_NODES)
    }

    /// `sum_k w_k |c_k|^2`, which is one for a complete expansion.
    pub fn completeness(&self) -> f64 {
        self.weights.iter().zip(&self.c).map(|(w, c)| w * c.norm_sqr()).sum()
    }

    /// `w_k D_k c_k` per node.
    fn amplitudes(&self) -> Vec<Complex64> {
        self.weights.iter().zip(&self.modes).zip(&self.c).map(|((w, m), c)| w * m.d_k * c).collect()
    }

    fn nyquist(&self, t_grid: &[f64]) -> Result<()> {
        let dt = t_grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let kmin = self.k[0];
        let kmax = self.k[self.k.len() - 1];
        let phase = (kmax * kmax - kmin * kmin) * dt / (2.0 * self.params.mass);
        if phase > PI / 4.0 {
            return Err(Error::GridTooCoarse { phase });
        }
        if t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("time grid must be increasing".into()));
        }
        Ok(())
    }

    /// Momentum mean and spread of `|c_k|^2`.
    pub fn momentum_moments(&self) -> (f64, f64) {
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for ((k, w), c) in self.k.iter().zip(&self.weights).zip(&self.c) {
            let p = w * c.norm_sqr();
            m0 += p;
            m1 += p * k;
            m2 += p * k * k;
        }
        let mean = m1 / m0;
        (mean, (m2 / m0 - mean * mean).max(0.0).sqrt())
    }
}

/// `c_k = <k_D|psi0>`, with `<k|psi0>` supplied by the caller.
pub fn overlap(sol: &crate::scattering::ScatteringSolution, mode: &DirichletMode, psi_k: Complex64) -> Complex64 {
    mode.c_k * sol.a_minus.conj() * sol.a_plus.conj() * mode.bracket.conj() * (2.0 * PI).sqrt() * psi_k
}

pub fn overlap_c_k(
    state: &GaussianState,
    sol: &crate::scattering::ScatteringSolution,
    mode: &DirichletMode,
) -> Complex64 {
    overlap(sol, mode, state.momentum_amplitude(sol.k))
}

fn phases(spec: &SpectralState, t: f64) -> impl Iterator<Item = Complex64> + '_ {
    let m2 = 2.0 * spec.params.mass;
    spec.k.iter().map(move |k| cis(-k * k * t / m2))
}

/// Spectral double sum with the `epsilon tau -> infinity` kernel
/// `k k' / sqrt(k^2 + k'^2)`.
pub fn p_exact(spec: &SpectralState, t_grid: &[f64]) -> Result<ArrivalDensity> {
    spec.nyquist(t_grid)?;
    let kernel = |a: f64, b: f64| a * b / (a * a + b * b).sqrt();
    let pref = 1.0 / (2.0 * 2f64.sqrt() * spec.params.mass);
    let raw = double_sum(spec, t_grid, pref, kernel);
    Ok(ArrivalDensity::from_samples(t_grid.to_vec(), raw, Method::ExactQuadrature))
}

fn double_sum<K: Fn(f64, f64) -> f64 + Sync>(spec: &SpectralState, t_grid: &[f64], pref: f64, kernel: K) -> Vec<f64> {
    let n = spec.k.len();
    let mut kmat = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            kmat[i * n + j] = kernel(spec.k[i], spec.k[j]);
        }
    }
    let a = spec.amplitudes();
    t_grid
        .par_iter()
        .map(|&t| {
            let u: Vec<Complex64> = a.iter().zip(phases(spec, t)).map(|(a, e)| a * e).collect();
            let mut acc = 0.0;
            for i in 0..n {
                let row = &kmat[i * n..(i + 1) * n];
                let mut s = 0.5 * row[i] * u[i].norm_sqr();
                for j in i + 1..n {
                    s += row[j] * (u[i] * u[j].conj()).re;
                }
                acc += s;
            }
            2.0 * pref * acc
        })
        .collect()
}

/// Kernel `R(eps)` of the tau-smeared density, tabulated on Chebyshev nodes.
#[derive(Debug, Clone)]
pub struct RKernel {
    pub tau: f64,
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

/// `R(eps) = 4 sqrt(tau) int_0^inf exp(-s^4/2) [cos(2 eps tau s^2) + sin(2 eps tau s^2)] ds`.
pub fn r_kernel(eps: f64, tau: f64) -> f64 {
    let smax = 3.2;
    let cycles = 2.0 * eps.abs() * tau * smax * smax / (2.0 * PI);
    let panels = 32 + (4.0 * cycles).ceil() as usize;
    let (s, w) = quad::composite_gauss_legendre(0.0, smax, panels, 12);
    let sum: f64 = s
        .iter()
        .zip(&w)
        .map(|(s, w)| {
            let ph = 2.0 * eps * tau * s * s;
            w * (-0.5 * s.powi(4)).exp() * (ph.cos() + ph.sin())
        })
        .sum();
    4.0 * tau.sqrt() * sum
}

impl RKernel {
    pub fn new(tau: f64, lo: f64, hi: f64) -> Self {
        let n = 64;
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo, lo + 1e-12) };
        let vals: Vec<f64> = (0..n)
            .map(|j| {
                let x = (PI * (j as f64 + 0.5) / n as f64).cos();
                r_kernel(0.5 * (lo + hi) + 0.5 * (hi - lo) * x, tau)
            })
            .collect();
        let coeffs = (0..n)
            .map(|m| {
                let s: f64 = (0..n).map(|j| vals[j] * (PI * m as f64 * (j as f64 + 0.5) / n as f64).cos()).sum();
                2.0 * s / n as f64
            })
            .collect();
        Self { tau, lo, hi, coeffs }
    }

    pub fn eval(&self, eps: f64) -> f64 {
        let x = (2.0 * eps - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + 0.5 * self.coeffs[0]
    }
}

/// Density at finite smearing width `tau`; needs `t >= 5 tau` on the grid.
pub fn p_full_smeared(spec: &SpectralState, t_grid: &[f64], tau: f64) -> Result<ArrivalDensity> {
    smeared_with_policy(spec, t_grid, tau, RegimePolicy::Enforce)
}

pub fn smeared_with_policy(
    spec: &SpectralState,
    t_grid: &[f64],
    tau: f64,
    policy: RegimePolicy,
) -> Result<ArrivalDensity> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    spec.nyquist(t_grid)?;
    let start = RegimeFlag::at_least("t_min / tau", t_grid[0] / tau, 5.0);
    if !start.satisfied && policy == RegimePolicy::Enforce {
        return Err(start.into_error(None));
    }
    let m = spec.params.mass;
    let kmin = spec.k[0];
    let kmax = spec.k[spec.k.len() - 1];
    let r = RKernel::new(tau, kmin * kmin / (2.0 * m), kmax * kmax / (2.0 * m));
    let pref = 1.0 / (8.0 * m * (2.0 * PI * m).sqrt());
    let raw = double_sum(spec, t_grid, pref, |a, b| a * b * r.eval((a * a + b * b) / (4.0 * m)));
    let mut d = ArrivalDensity::from_samples(t_grid.to_vec(), raw, Method::SmearedQuadrature { tau });
    d.regime.push(start);
    d.regime.push(RegimeFlag::at_least("eps_min * tau", kmin * kmin / (2.0 * m) * tau, 5.0));
    Ok(d)
}

/// `|z(t)|^2` with `z = sum_k D_k c_k sqrt(k/4M) exp(-i k^2 t / 2M)`.
pub fn p_monochromatic(spec: &SpectralState, t_grid: &[f64]) -> Result<ArrivalDensity> {
    monochromatic_with_policy(spec, t_grid, RegimePolicy::Enforce)
}

pub fn monochromatic_with_policy(spec: &SpectralState, t_grid: &[f64], policy: RegimePolicy) -> Result<ArrivalDensity> {
    spec.nyquist(t_grid)?;
    let (mean, spread) = spec.momentum_moments();
    let flag = RegimeFlag::below("dk / k", spread / mean, 0.1);
    if !flag.satisfied && policy == RegimePolicy::Enforce {
        return Err(flag.into_error(Some(mean)));
    }
    let z = amplitude_z(spec, t_grid);
    let mut d =
        ArrivalDensity::from_samples(t_grid.to_vec(), z.iter().map(|z| z.norm_sqr()).collect(), Method::Monochromatic);
    d.regime.push(flag);
    Ok(d)
}

/// Amplitude `z(t)` on the grid.
pub fn amplitude_z(spec: &SpectralState, t_grid: &[f64]) -> Vec<Complex64> {
    let m4 = 4.0 * spec.params.mass;
    let a: Vec<Complex64> = spec.amplitudes().iter().zip(&spec.k).map(|(a, k)| a * (k / m4).sqrt()).collect();
    t_grid.par_iter().map(|&t| a.iter().zip(phases(spec, t)).map(|(a, e)| a * e).sum()).collect()
}

/// `2 pi int dk (M/k) |w D c sqrt(k/4M)|^2`, the frequency-side Parseval value.
pub fn amplitude_energy(spec: &SpectralState) -> f64 {
    let m = spec.params.mass;
    spec.k
        .iter()
        .zip(&spec.weights)
        .zip(spec.modes.iter().zip(&spec.c))
        .map(|((k, w), (md, c))| 2.0 * PI * (m / k) * w * (md.d_k * c).norm_sqr() * k / (4.0 * m))
        .sum()
}

/// Approximation layer of the Gaussian closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClosedFormLevel {
    P1,
    P2,
    P3,
}

/// Which weight `B_k` the closed forms expand around `k0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// `B_k` at the detector position; reproduces `p_exact` at that `L`.
    #[default]
    Detector,
    /// Detector-averaged weight `-2i T / sqrt(2 pi)`, free of wall echoes.
    FirstPassage,
}

/// Inputs of the closed forms: weight and expansion parameters at `k0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormInput {
    pub mass: f64,
    pub detector: f64,
    pub weight: WeightKind,
    pub b_abs2: f64,
    pub xi: f64,
    pub lambda: f64,
}

impl ClosedFormInput {
    pub fn from_potential(
        potential: &Potential,
        state: &GaussianState,
        params: PhysParams,
        weight: WeightKind,
    ) -> Result<Self> {
        let m = params.mass;
        let l = params.detector;
        let b = |k: f64| {
            let sol = solve_modes(potential, k, m)?;
            match weight {
                WeightKind::Detector => b_coefficient(&sol, l),
                WeightKind::FirstPassage => Ok(b_first_passage(&sol)),
            }
        };
        let (xi, lambda) = expansion_params(b, state.k0, default_step(state.k0))?;
        Ok(Self { mass: m, detector: l, weight, b_abs2: b(state.k0)?.norm_sqr(), xi, lambda })
    }
}

pub fn p_gaussian_closed_form(
    state: &GaussianState,
    input: &ClosedFormInput,
    level: ClosedFormLevel,
    t_grid: &[f64],
) -> Result<ArrivalDensity> {
    closed_form_with_policy(state, input, level, t_grid, RegimePolicy::Enforce)
}

pub fn closed_form_with_policy(
    state: &GaussianState,
    input: &ClosedFormInput,
    level: ClosedFormLevel,
    t_grid: &[f64],
    policy: RegimePolicy,
) -> Result<ArrivalDensity> {
    let m = input.mass;
    let (k0, s) = (state.k0, state.sigma);
    let ell = input.detector - state.x0 + input.lambda;
    let t_m = m * ell / k0;
    let mut flags = Vec::new();
    let xi_term = if level == ClosedFormLevel::P1 {
        input.xi * s * s / k0
    } else {
        let f = RegimeFlag::below("xi sigma^2 / k0", (input.xi * s * s / k0).abs(), 0.1);
        if !f.satisfied && policy == RegimePolicy::Enforce {
            return Err(f.into_error(Some(k0)));
        }
        flags.push(f);
        0.0
    };
    let spread = level != ClosedFormLevel::P3;
    if !spread {
        let f = RegimeFlag::below("t_m^2 sigma^4 / M^2", (t_m * s * s / m).powi(2), 0.1);
        if !f.satisfied && policy == RegimePolicy::Enforce {
            return Err(f.into_error(Some(k0)));
        }
        flags.push(f);
    }
    let amp = input.b_abs2 * (2.0 * s * s * input.xi * input.xi).exp() * k0 / (4.0 * m);
    let p = t_grid
        .iter()
        .map(|&t| {
            let g = if spread { 1.0 + 4.0 * (t * s * s / m).powi(2) } else { 1.0 };
            let arg = (1.0 + 2.0 * xi_term) * t - t_m;
            amp * (8.0 * PI * s * s / g).sqrt() * (-(2.0 * k0 * k0 * s * s / (m * m)) / g * arg * arg).exp()
        })
        .collect();
    let method = match level {
        ClosedFormLevel::P1 => Method::GaussianP1,
        ClosedFormLevel::P2 => Method::GaussianP2,
        ClosedFormLevel::P3 => Method::GaussianP3,
    };
    let mut d = ArrivalDensity::from_samples(t_grid.to_vec(), p, method);
    d.regime = flags;
    Ok(d)
}

/// Vertex of the parabola through the grid maximum and its neighbours.
pub fn peak_time(t: &[f64], p: &[f64]) -> f64 {
    if t.is_empty() {
        return f64::NAN;
    }
    let i = (0..p.len()).fold(0, |b, i| if p[i] > p[b] { i } else { b });
    if i == 0 || i + 1 == p.len() {
        return t[i];
    }
    let (x0, x1, x2) = (t[i - 1], t[i], t[i + 1]);
    let (y0, y1, y2) = (p[i - 1], p[i], p[i + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if curv >= 0.0 {
        return x1;
    }
    0.5 * (x0 + x1) - d01 / (2.0 * curv)
}

/// Largest secondary maximum relative to the global peak.
pub fn secondary_peak_ratio(p: &[f64]) -> f64 {
    let n = p.len();
    if n < 3 {
        return 0.0;
    }
    let g = (0..n).fold(0, |b, i| if p[i] > p[b] { i } else { b });
    let peak = p[g];
    let mut worst: f64 = 0.0;
    for i in 1..n - 1 {
        if i == g || !(p[i] > p[i - 1] && p[i] >= p[i + 1]) {
            continue;
        }
        let (a, b) = if i < g { (i, g) } else { (g, i) };
        let valley = p[a..=b].iter().copied().fold(f64::INFINITY, f64::min);
        if valley < 0.8 * p[i] {
            worst = worst.max(p[i] / peak);
        }
    }
    worst
}

/// Delay and tunnelling times read off the peak of a density.
pub fn extract_times(
    density: &ArrivalDensity,
    state: &GaussianState,
    potential: &Potential,
    params: PhysParams,
) -> Result<TimeScales> {
    let ratio = secondary_peak_ratio(&density.p);
    if ratio >= 0.2 {
        return Err(Error::MultiPeak { ratio });
    }
    let m = params.mass;
    let k0 = state.k0;
    let t_peak = peak_time(&density.t_grid, &density.p);
    let t_free = m * (params.detector - state.x0) / k0;
    let d_k = forbidden_region(potential, k0, m).d_k;
    let t_d = t_peak - t_free;
    Ok(TimeScales {
        k0,
        mass: m,
        xi: f64::NAN,
        lambda: k0 * t_d / m,
        d_k,
        t_d,
        t_tun: t_d + m * d_k / k0,
        uncertainty: Some(m / (k0 * state.sigma)),
    })
}

/// `int |T_k|^2 |<k|psi0>|^2 dk` by momentum-space quadrature.
pub fn transmitted_fraction(state: &InitialState, potential: &Potential, mass: f64) -> Result<f64> {
    let (lo, hi) = state.k_range(10.0);
    let (k, w) = quad::composite_gauss_legendre(lo, hi, 40, 16);
    let mut acc = 0.0;
    for (ki, wi) in k.iter().zip(&w) {
        acc += wi * solve_modes(potential, *ki, mass)?.t_plus.norm_sqr() * state.momentum_amplitude(*ki).norm_sqr();
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_kernel_approaches_asymptote() {
        let tau = 50.0;
        let eps = 0.5;
        let r = r_kernel(eps, tau);
        assert!((r * eps.sqrt() / (2.0 * PI.sqrt()) - 1.0).abs() < 0.02);
    }

    #[test]
    fn chebyshev_table_matches_direct_quadrature() {
        let k = RKernel::new(10.0, 0.3, 0.7);
        for &e in &[0.3, 0.41, 0.55, 0.7] {
            assert!((k.eval(e) - r_kernel(e, 10.0)).abs() < 1e-10 * r_kernel(e, 10.0).abs());
        }
    }

    #[test]
    fn peak_vertex_is_exact_for_parabola() {
        let t: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let p: Vec<f64> = t.iter().map(|x| 10.0 - (x - 4.3) * (x - 4.3)).collect();
        assert!((peak_time(&t, &p) - 4.3).abs() < 1e-12);
    }

    #[test]
    fn secondary_peaks() {
        let t = quad::linspace(0.0, 10.0, 1001);
        let one: Vec<f64> = t.iter().map(|x| (-(x - 5.0) * (x - 5.0)).exp()).collect();
        assert_eq!(secondary_peak_ratio(&one), 0.0);
        let two: Vec<f64> =
            t.iter().map(|x| (-(x - 3.0) * (x - 3.0)).exp() + 0.5 * (-(x - 7.0) * (x - 7.0)).exp()).collect();
        assert!((secondary_peak_ratio(&two) - 0.5).abs() < 1e-3);
    }
}
