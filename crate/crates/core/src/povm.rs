//! Dirichlet eigenmodes, POVM weights `B_k` and the phase-time expansion.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{self, default_step};
use crate::scattering::{cis, ScatteringSolution};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Energy eigenmode of the Hamiltonian with a Dirichlet wall at `x = L`.
///
/// Right of the barrier the mode is `D_k sin k(L - x)`; on the left it is
/// `alpha e^{ikx} + beta e^{-ikx}` with `|alpha| = |beta| = (2 pi)^{-1/2}`,
/// which fixes `C_k` for delta normalisation on `(-inf, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirichletMode {
    pub k: f64,
    pub l: f64,
    pub c_k: f64,
    pub d_k: Complex64,
    /// `1 + (R- - T+ S) e^{2ikL}`, the left-region `e^{ikx}` factor.
    pub bracket: Complex64,
    /// Normalisation obtained by treating `v_k` as a full-line combination
    /// of `u+` and `u-`; kept for comparison only.
    pub c_full_line: f64,
}

pub fn dirichlet_mode(sol: &ScatteringSolution, l: f64) -> Result<DirichletMode> {
    if !(l > sol.support.1) {
        return Err(Error::InvalidParameter(format!(
            "detector L = {l} must lie right of the support edge {}",
            sol.support.1
        )));
    }
    let k = sol.k;
    let e2 = cis(2.0 * k * l);
    let bracket = 1.0 + (sol.r_minus - sol.t_plus * sol.s) * e2;
    let denom = (2.0 * PI).sqrt() * sol.a_minus.norm() * sol.a_plus.norm() * bracket.norm();
    if denom == 0.0 {
        return Err(Error::ResonantDenominator { k, value: bracket.norm() });
    }
    let c_k = 1.0 / denom;
    let d_k = -2.0 * I * c_k * sol.a_minus * sol.a_plus * sol.t_plus * cis(k * l);
    let c_full_line = 1.0
        / (sol.a_minus.norm_sqr() * (1.0 + sol.r_minus * e2).norm_sqr()
            + sol.a_plus.norm_sqr() * sol.t_plus.norm_sqr())
        .sqrt();
    Ok(DirichletMode { k, l, c_k, d_k, bracket, c_full_line })
}

impl DirichletMode {
    /// `v_k(x)` rebuilt from the asymptotic forms of `u+` and `u-`.
    pub fn v(&self, sol: &ScatteringSolution, x: f64) -> Option<Complex64> {
        let e2 = cis(2.0 * self.k * self.l);
        let up = sol.u_plus(x)?;
        let um = sol.u_minus(x)?;
        Some(self.c_k * (sol.a_minus * (1.0 + sol.r_minus * e2) * up - sol.a_plus * sol.t_plus * e2 * um))
    }
}

/// POVM weights at one wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PovmWeight {
    pub k: f64,
    /// Unsmeared, `L`-dependent weight.
    pub b_k: Complex64,
    /// `L`-smeared weight with the normalisation factors kept explicitly.
    pub b_tilde: Complex64,
    /// `-i T+ / sqrt(2 pi)`.
    pub b_rough: Complex64,
    /// Average of `b_k` over detector positions: the first-passage amplitude.
    pub b_first_passage: Complex64,
}

pub fn povm_weight(sol: &ScatteringSolution, l: f64) -> Result<PovmWeight> {
    Ok(PovmWeight {
        k: sol.k,
        b_k: b_coefficient(sol, l)?,
        b_tilde: b_smeared(sol),
        b_rough: b_rough(sol),
        b_first_passage: b_first_passage(sol),
    })
}

/// `B_k = -2i sqrt(2 pi) |C|^2 |A-|^2 |A+|^2 [1 + f e^{-2ikL}] T+`, `f = conj(R- - T+ S)`.
pub fn b_coefficient(sol: &ScatteringSolution, l: f64) -> Result<Complex64> {
    let m = dirichlet_mode(sol, l)?;
    let f = (sol.r_minus - sol.t_plus * sol.s).conj();
    Ok(-2.0
        * I
        * (2.0 * PI).sqrt()
        * m.c_k
        * m.c_k
        * sol.a_minus.norm_sqr()
        * sol.a_plus.norm_sqr()
        * (1.0 + f * cis(-2.0 * sol.k * l))
        * sol.t_plus)
}

pub fn b_smeared(sol: &ScatteringSolution) -> Complex64 {
    let am = sol.a_minus.norm_sqr();
    let ap = sol.a_plus.norm_sqr();
    let den = am * (1.0 + sol.r_minus.norm_sqr()) + ap * sol.t_plus.norm_sqr();
    -2.0 * I * (2.0 * PI).sqrt() * am * ap / den * sol.t_plus
}

pub fn b_rough(sol: &ScatteringSolution) -> Complex64 {
    -I * sol.t_plus / (2.0 * PI).sqrt()
}

pub fn b_first_passage(sol: &ScatteringSolution) -> Complex64 {
    -2.0 * I * sol.t_plus / (2.0 * PI).sqrt()
}

/// Gaussian average of `b_k` over detector positions, weight
/// `exp(-(L - l0)^2 / l^2) / sqrt(pi l^2)`.
pub fn b_l_average(sol: &ScatteringSolution, l0: f64, width: f64) -> Result<Complex64> {
    let (x, w) = quad::composite_gauss_legendre(l0 - 8.0 * width, l0 + 8.0 * width, 64, 16);
    let norm = 1.0 / (PI.sqrt() * width);
    let mut acc = Complex64::new(0.0, 0.0);
    for (li, wi) in x.iter().zip(&w) {
        let g = (-(li - l0) * (li - l0) / (width * width)).exp();
        acc += wi * norm * g * b_coefficient(sol, *li)?;
    }
    Ok(acc)
}

/// `(xi, lambda)`: `xi = 1/(2 k0) + d log|B|/dk`, `lambda = d arg B/dk`.
pub fn expansion_params<F>(b_fn: F, k0: f64, h: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let (dlog, darg) = quad::log_derivatives(b_fn, k0, h)?;
    Ok((0.5 / k0 + dlog, darg))
}

/// Phase-time quantities at the mean momentum `k0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeScales {
    pub k0: f64,
    pub mass: f64,
    pub xi: f64,
    pub lambda: f64,
    pub d_k: f64,
    pub t_d: f64,
    pub t_tun: f64,
    /// Total uncertainty once a measurement width is chosen.
    pub uncertainty: Option<f64>,
}

impl TimeScales {
    pub fn from_lambda(k0: f64, mass: f64, xi: f64, lambda: f64, d_k: f64) -> Self {
        Self {
            k0,
            mass,
            xi,
            lambda,
            d_k,
            t_d: mass * lambda / k0,
            t_tun: mass * (lambda + d_k) / k0,
            uncertainty: None,
        }
    }
}

/// Phase time from `lambda = Im d/dk log T+` at `k0`.
pub fn phase_time<F>(sol_fn: F, k0: f64, mass: f64, d_k: f64) -> Result<TimeScales>
where
    F: Fn(f64) -> Result<ScatteringSolution>,
{
    let t0 = sol_fn(k0)?.t_plus.norm();
    if !(t0 >= 1e-300) {
        return Err(Error::ZeroTransmission { k: k0, abs_t: t0 });
    }
    let (dlog, lambda) = quad::log_derivatives(|k| Ok(sol_fn(k)?.t_plus), k0, default_step(k0))?;
    Ok(TimeScales::from_lambda(k0, mass, 0.5 / k0 + dlog, lambda, d_k))
}

/// Unsmeared `lambda` at detector position `L`, oscillatory term included.
pub fn lambda_full<F>(sol_fn: F, k0: f64, l: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<ScatteringSolution>,
{
    let h = default_step(k0);
    let f_of = |k: f64| -> Result<Complex64> {
        let s = sol_fn(k)?;
        Ok((s.r_minus - s.t_plus * s.s).conj())
    };
    let sol = sol_fn(k0)?;
    let f = (sol.r_minus - sol.t_plus * sol.s).conj();
    let e = cis(-2.0 * k0 * l);
    let den = 1.0 + f * e;
    if den.norm() < 1e-8 {
        return Err(Error::ResonantDenominator { k: k0, value: den.norm() });
    }
    let fp = Complex64::new(
        quad::try_derivative(|k| Ok(f_of(k)?.re), k0, h)?,
        quad::try_derivative(|k| Ok(f_of(k)?.im), k0, h)?,
    );
    let (_, lambda_t) = quad::log_derivatives(|k| Ok(sol_fn(k)?.t_plus), k0, h)?;
    Ok(lambda_t + ((fp - 2.0 * I * l * f) * e / den).im)
}

/// Uncertainty `M/(k0 sigma) + |a| sigma` and the distinguishability verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UncertaintyBound {
    pub total: f64,
    /// `2 sqrt(M |a| / k0)`, reached at `sigma_star`.
    pub minimum: f64,
    pub sigma_star: f64,
    pub delay_distinguishable: bool,
    pub distinguishable: bool,
}

/// Factor standing in for "much greater than".
pub const MUCH_GREATER: f64 = 5.0;

pub fn uncertainty_bound(ts: &TimeScales, a_k0: f64, sigma: f64, mass: f64, k0: f64) -> UncertaintyBound {
    let total = mass / (k0 * sigma) + a_k0.abs() * sigma;
    let scale = (mass * a_k0.abs() / k0).sqrt();
    let delay_distinguishable = sigma * ts.lambda.abs() > MUCH_GREATER;
    UncertaintyBound {
        total,
        minimum: 2.0 * scale,
        sigma_star: if a_k0 == 0.0 { f64::INFINITY } else { (mass / (k0 * a_k0.abs())).sqrt() },
        delay_distinguishable,
        distinguishable: ts.t_tun > MUCH_GREATER * scale && delay_distinguishable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Potential;
    use crate::scattering::solve_modes;

    #[test]
    fn free_mode_amplitude_and_wall() {
        let s = solve_modes(&Potential::Free, 1.3, 1.0).unwrap();
        let m = dirichlet_mode(&s, 40.0).unwrap();
        assert!((m.d_k.norm() - (2.0 / PI).sqrt()).abs() < 1e-12);
        assert!(m.v(&s, 40.0).unwrap().norm() < 1e-12);
    }

    #[test]
    fn smeared_weight_of_free_particle() {
        let s = solve_modes(&Potential::Free, 1.0, 1.0).unwrap();
        let b = b_smeared(&s);
        assert!((b - (-I / (2.0 * PI).sqrt())).norm() < 1e-14);
        assert!((b - b_rough(&s)).norm() < 1e-14);
    }

    #[test]
    fn delta_phase_time() {
        let p = Potential::delta(1.0).unwrap();
        let ts = phase_time(|k| solve_modes(&p, k, 1.0), 1.0, 1.0, 0.0).unwrap();
        assert!((ts.t_tun - 0.5).abs() < 1e-9);
    }

    #[test]
    fn uncertainty_minimum() {
        let ts = TimeScales::from_lambda(1.0, 1.0, 0.5, 0.1, 1.0);
        let u = uncertainty_bound(&ts, -2.0, 0.3, 1.0, 1.0);
        let best = uncertainty_bound(&ts, -2.0, u.sigma_star, 1.0, 1.0);
        assert!((best.total - u.minimum).abs() < 1e-12);
        assert!(u.total > u.minimum);
    }
}
