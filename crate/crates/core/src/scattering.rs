//! Scattering states by transfer matrices, plus closed forms for square and delta barriers.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Piece, Potential};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const EVANESCENT_CAP: f64 = 700.0;

/// Coefficients of the two orthogonal scattering states at one wavenumber.
///
/// `u+` is `A+ (e^{ikx} + R+ e^{-ikx})` left of the support and `A+ T+ e^{ikx}`
/// right of it; `u-` is `A- (T- e^{-ikx} + S e^{ikx})` on the left and
/// `A- (e^{-ikx} + R- e^{ikx})` on the right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatteringSolution {
    pub k: f64,
    pub t_plus: Complex64,
    pub r_plus: Complex64,
    pub t_minus: Complex64,
    pub r_minus: Complex64,
    pub s: Complex64,
    pub a_plus: Complex64,
    pub a_minus: Complex64,
    /// Left and right edge of the potential support.
    pub support: (f64, f64),
}

impl ScatteringSolution {
    /// Residuals of the four Wronskian relations, in the order
    /// `T+ = T- - S conj(R+)`, `S = conj(T+) R- + T- conj(R+)`,
    /// `|T+|^2 + |R+|^2 = 1`, `|T-|^2 + |R-|^2 = 1 + |S|^2`.
    pub fn wronskian_residuals(&self) -> [f64; 4] {
        [
            (self.t_plus - (self.t_minus - self.s * self.r_plus.conj())).norm(),
            (self.s - (self.t_plus.conj() * self.r_minus + self.t_minus * self.r_plus.conj())).norm(),
            (self.t_plus.norm_sqr() + self.r_plus.norm_sqr() - 1.0).abs(),
            (self.t_minus.norm_sqr() + self.r_minus.norm_sqr() - 1.0 - self.s.norm_sqr()).abs(),
        ]
    }

    pub fn max_residual(&self) -> f64 {
        self.wronskian_residuals().into_iter().fold(0.0, f64::max)
    }

    /// `u+(x)` from its asymptotic form; `None` inside the support.
    pub fn u_plus(&self, x: f64) -> Option<Complex64> {
        let k = self.k;
        let (a, b) = self.support;
        if x <= a {
            Some(self.a_plus * (cis(k * x) + self.r_plus * cis(-k * x)))
        } else if x >= b {
            Some(self.a_plus * self.t_plus * cis(k * x))
        } else {
            None
        }
    }

    /// `u-(x)` from its asymptotic form; `None` inside the support.
    pub fn u_minus(&self, x: f64) -> Option<Complex64> {
        let k = self.k;
        let (a, b) = self.support;
        if x <= a {
            Some(self.a_minus * (self.t_minus * cis(-k * x) + self.s * cis(k * x)))
        } else if x >= b {
            Some(self.a_minus * (cis(-k * x) + self.r_minus * cis(k * x)))
        } else {
            None
        }
    }
}

pub(crate) fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// Real 2x2 transfer matrix on `(psi, psi')`, stored as `exp(log_scale) * m`.
#[derive(Debug, Clone, Copy)]
struct Transfer {
    m: [[f64; 2]; 2],
    log_scale: f64,
}

impl Transfer {
    fn identity() -> Self {
        Self { m: [[1.0, 0.0], [0.0, 1.0]], log_scale: 0.0 }
    }

    /// Apply `next` after `self`.
    fn then(self, next: [[f64; 2]; 2], extra_log: f64) -> Self {
        let a = next;
        let b = self.m;
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        let big = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut log_scale = self.log_scale + extra_log;
        if big > 1e100 || (big < 1e-100 && big > 0.0) {
            for v in m.iter_mut().flatten() {
                *v /= big;
            }
            log_scale += big.ln();
        }
        Self { m, log_scale }
    }
}

fn slab_matrix(g2: f64, w: f64) -> ([[f64; 2]; 2], f64) {
    if g2 < 0.0 {
        let q = (-g2).sqrt();
        let (s, c) = (q * w).sin_cos();
        let sinc = if q * w < 1e-8 { w } else { s / q };
        ([[c, sinc], [-q * s, c]], 0.0)
    } else if g2 > 0.0 {
        let g = g2.sqrt();
        let e = (-2.0 * g * w).exp();
        let c = 0.5 * (1.0 + e);
        let sh = -0.5 * (-2.0 * g * w).exp_m1();
        let sinhc = if g * w < 1e-8 { w * (-g * w).exp() } else { sh / g };
        ([[c, sinhc], [g * sh, c]], g * w)
    } else {
        ([[1.0, w], [0.0, 1.0]], 0.0)
    }
}

fn profile_transfer(pieces: &[Piece], k: f64, mass: f64) -> Result<Transfer> {
    let mut t = Transfer::identity();
    for piece in pieces {
        match *piece {
            Piece::Slab { x_left, x_right, v } => {
                let w = x_right - x_left;
                let g2 = 2.0 * mass * v - k * k;
                if g2 > 0.0 && g2.sqrt() * w > EVANESCENT_CAP {
                    return Err(Error::EvanescentOverflow { gamma_w: g2.sqrt() * w, x_left, x_right });
                }
                let (m, lg) = slab_matrix(g2, w);
                t = t.then(m, lg);
            }
            Piece::Delta { kappa, .. } => {
                t = t.then([[1.0, 0.0], [2.0 * kappa, 1.0]], 0.0);
            }
        }
    }
    Ok(t)
}

fn apply(m: &[[f64; 2]; 2], v: [Complex64; 2]) -> [Complex64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Solve for both scattering states of `p` at wavenumber `k`.
pub fn solve_modes(p: &Potential, k: f64, mass: f64) -> Result<ScatteringSolution> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
    }
    let (a, b) = p.support();
    let pieces = p.profile();
    let tr = profile_transfer(&pieces, k, mass)?;
    let ik = I * k;
    let m = tr.m;
    let adj = [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]];

    // incident from the left, transmitted wave of unit amplitude at x = b
    let ub = [cis(k * b), ik * cis(k * b)];
    let ua = apply(&adj, ub);
    let alpha = 0.5 * (ua[0] + ua[1] / ik) * cis(-k * a);
    let beta = 0.5 * (ua[0] - ua[1] / ik) * cis(k * a);
    let t_plus = (-tr.log_scale).exp() / alpha;
    let r_plus = beta / alpha;

    // incident from the right, transmitted wave of unit amplitude at x = a
    let ua = [cis(-k * a), -ik * cis(-k * a)];
    let ub = apply(&m, ua);
    let mu = 0.5 * (ub[0] - ub[1] / ik) * cis(k * b);
    let nu = 0.5 * (ub[0] + ub[1] / ik) * cis(-k * b);
    let t_right = (-tr.log_scale).exp() / mu;
    let r_right = nu / mu;

    // orthogonalise the right-incident state against u+
    let proj = 0.5 * (r_plus.conj() * t_right + t_plus.conj() * r_right);
    let s = -proj;
    let t_minus = t_right - proj * r_plus;
    let r_minus = r_right - proj * t_plus;
    let a_plus = Complex64::new((2.0 * PI).powf(-0.5), 0.0);
    let a_minus = Complex64::new((2.0 * PI * (1.0 + s.norm_sqr())).powf(-0.5), 0.0);

    Ok(ScatteringSolution { k, t_plus, r_plus, t_minus, r_minus, s, a_plus, a_minus, support: (a, b) })
}

/// Closed-form square-barrier coefficients, continued above the barrier top.
pub fn square_barrier_analytic(v0: f64, d: f64, k: f64, mass: f64) -> (Complex64, Complex64) {
    let g2 = 2.0 * mass * v0 - k * k;
    let phase = cis(-k * d);
    if g2 > 0.0 {
        // scaled by exp(-gamma d) so opaque barriers do not overflow
        let g = g2.sqrt();
        let e = (-2.0 * g * d).exp();
        let c = 0.5 * (1.0 + e);
        let sh = -0.5 * (-2.0 * g * d).exp_m1();
        let sinhc = if g * d < 1e-8 { d * (-g * d).exp() } else { sh / g };
        let den = 2.0 * k * c + I * (g2 - k * k) * sinhc;
        let t = phase * 2.0 * k * (-g * d).exp() / den;
        let r = -I * phase * (g2 + k * k) * sinhc / den;
        (t, r)
    } else {
        let q = (-g2).sqrt();
        let (s, c) = (q * d).sin_cos();
        let sinc = if q * d < 1e-8 { d } else { s / q };
        // gamma = i q: cosh -> cos, sinh/gamma -> sin/q, gamma^2 -> -q^2
        let den = 2.0 * k * c + I * (g2 - k * k) * sinc;
        let t = phase * 2.0 * k / den;
        let r = -I * phase * (g2 + k * k) * sinc / den;
        (t, r)
    }
}

/// Delta barrier `V = (kappa/M) delta(x)`.
pub fn delta_barrier_analytic(kappa: f64, k: f64) -> (Complex64, Complex64) {
    let t = 1.0 / (1.0 + I * kappa / k);
    let r = -1.0 / (1.0 - I * k / kappa);
    (t, r)
}

/// Opaque-barrier asymptotics, valid for `gamma d >= 5`.
pub fn long_barrier_limit(v0: f64, d: f64, k: f64, mass: f64) -> Result<(Complex64, Complex64)> {
    let g2 = 2.0 * mass * v0 - k * k;
    let gd = if g2 > 0.0 { g2.sqrt() * d } else { 0.0 };
    if gd < 5.0 {
        return Err(Error::RegimeViolation {
            condition: "long barrier requires gamma*d >= 5".into(),
            value: gd,
            threshold: 5.0,
            k: Some(k),
        });
    }
    let g = g2.sqrt();
    let sum = g2 + k * k;
    let diff = g2 - k * k;
    let phase = cis(-k * d);
    let t = phase * (-gd).exp() * 4.0 * k * g * (2.0 * k * g - I * diff) / (sum * sum);
    let r = phase * (-diff - 2.0 * I * k * g) / sum;
    Ok((t, r))
}

/// `gamma_k = sqrt(2 M V0 - k^2)` in the tunnelling regime.
pub fn gamma(v0: f64, k: f64, mass: f64) -> f64 {
    (2.0 * mass * v0 - k * k).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn free_particle() {
        let s = solve_modes(&Potential::Free, 1.0, 1.0).unwrap();
        assert!((s.t_plus - 1.0).norm() < 1e-15);
        assert!(s.r_plus.norm() < 1e-15 && s.s.norm() < 1e-15);
    }

    #[test]
    fn square_barrier_matches_transfer_matrix() {
        let p = Potential::square(2.0, 1.0).unwrap();
        for &k in &[0.3, 1.0, 1.9, 2.0, 2.1, 3.5] {
            let s = solve_modes(&p, k, 1.0).unwrap();
            let (t, r) = square_barrier_analytic(2.0, 1.0, k, 1.0);
            assert!(close(s.t_plus, t, 1e-12), "k={k}: {} vs {}", s.t_plus, t);
            assert!(close(s.r_plus, r, 1e-12), "k={k}: {} vs {}", s.r_plus, r);
            assert!((t.norm_sqr() + r.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_barrier_matches_transfer_matrix() {
        let p = Potential::delta(1.0).unwrap();
        for &k in &[0.2, 1.0, 2.0] {
            let s = solve_modes(&p, k, 1.0).unwrap();
            let (t, r) = delta_barrier_analytic(1.0, k);
            assert!(close(s.t_plus, t, 1e-14) && close(s.r_plus, r, 1e-14));
        }
        let (t, _) = delta_barrier_analytic(1.0, 1.0);
        assert!((t - Complex64::new(0.5, -0.5)).norm() < 1e-15);
        let (t, _) = delta_barrier_analytic(1.0, 2.0);
        assert!((t.norm_sqr() - 0.8).abs() < 1e-14);
    }

    #[test]
    fn branches_join_at_barrier_top() {
        let kc = (2.0f64 * 2.0).sqrt();
        let (a, _) = square_barrier_analytic(2.0, 1.0, kc - 1e-9, 1.0);
        let (b, _) = square_barrier_analytic(2.0, 1.0, kc + 1e-9, 1.0);
        assert!((a - b).norm() < 1e-6);
    }

    #[test]
    fn long_barrier_gate() {
        // gamma = sqrt(3), d chosen so gamma d = 2
        let d = 2.0 / 3f64.sqrt();
        assert!(matches!(long_barrier_limit(2.0, d, 1.0, 1.0), Err(Error::RegimeViolation { .. })));
        let (tl, _) = long_barrier_limit(2.0, 10.0, 1.0, 1.0).unwrap();
        let (t, _) = square_barrier_analytic(2.0, 10.0, 1.0, 1.0);
        assert!((tl - t).norm() / t.norm() < 1e-6);
        assert!((tl.arg() - t.arg()).abs() < 1e-6);
    }

    #[test]
    fn evanescent_overflow_is_reported() {
        let p = Potential::square(50.0, 80.0).unwrap();
        assert!(matches!(solve_modes(&p, 1.0, 1.0), Err(Error::EvanescentOverflow { .. })));
    }
}
