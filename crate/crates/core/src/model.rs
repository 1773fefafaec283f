//! Physical parameters, barrier models and initial states (units with hbar = 1).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::Pchip;

/// Mass and detector position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysParams {
    pub mass: f64,
    pub detector: f64,
}

impl PhysParams {
    pub fn new(mass: f64, detector: f64, potential: &Potential) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
        }
        let (_, right) = potential.support();
        if !(detector > right) || !(detector > 0.5 * potential.width()) {
            return Err(Error::InvalidParameter(format!(
                "detector at L = {detector} must lie right of the barrier support (right edge {right})"
            )));
        }
        Ok(Self { mass, detector })
    }

    /// Set when the detector is closer than ten barrier widths.
    pub fn near_barrier(&self, potential: &Potential) -> bool {
        self.detector < 10.0 * potential.width()
    }
}

/// Constant piece `[x_left, x_right]` at height `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub x_left: f64,
    pub x_right: f64,
    pub v: f64,
}

/// Potential sampled on a grid and interpolated by a monotone cubic.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPotential {
    interp: Pchip,
    slabs_per_interval: usize,
}

impl SampledPotential {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        Self::with_resolution(points, 8)
    }

    /// `slabs_per_interval` controls the staircase used by the transfer matrix.
    pub fn with_resolution(points: &[(f64, f64)], slabs_per_interval: usize) -> Result<Self> {
        if points.iter().any(|&(x, v)| !x.is_finite() || !(v >= 0.0)) {
            return Err(Error::InvalidParameter("sampled potential values must be finite and nonnegative".into()));
        }
        let (x, y) = points.iter().copied().unzip();
        Ok(Self { interp: Pchip::new(x, y)?, slabs_per_interval: slabs_per_interval.max(1) })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.interp.x().iter().copied().zip(self.interp.y().iter().copied())
    }

    pub fn interpolant(&self) -> &Pchip {
        &self.interp
    }

    pub fn slabs_per_interval(&self) -> usize {
        self.slabs_per_interval
    }
}

/// Barrier models with compact support and `V >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Free,
    Square {
        v0: f64,
        d: f64,
    },
    /// `V(x) = (kappa / M) delta(x)`.
    Delta {
        kappa: f64,
    },
    Piecewise(Vec<Segment>),
    Sampled(SampledPotential),
}

/// Piece of the transfer-matrix profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    Slab {
        x_left: f64,
        x_right: f64,
        v: f64,
    },
    /// Derivative jump `psi'(x+) - psi'(x-) = 2 kappa psi(x)`.
    Delta {
        x: f64,
        kappa: f64,
    },
}

impl Potential {
    pub fn square(v0: f64, d: f64) -> Result<Self> {
        if !(v0 > 0.0 && d > 0.0 && v0.is_finite() && d.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "square barrier needs V0 > 0 and d > 0, got V0 = {v0}, d = {d}"
            )));
        }
        Ok(Potential::Square { v0, d })
    }

    pub fn delta(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Potential::Delta { kappa })
    }

    pub fn piecewise(mut segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidParameter("piecewise potential needs a segment".into()));
        }
        segments.sort_by(|a, b| a.x_left.total_cmp(&b.x_left));
        for s in &segments {
            if !(s.x_right > s.x_left) || !(s.v >= 0.0) || !s.v.is_finite() {
                return Err(Error::InvalidParameter(format!("bad segment {s:?}")));
            }
        }
        if segments.windows(2).any(|w| w[1].x_left < w[0].x_right) {
            return Err(Error::InvalidParameter("segments overlap".into()));
        }
        Ok(Potential::Piecewise(segments))
    }

    pub fn sampled(points: &[(f64, f64)]) -> Result<Self> {
        Ok(Potential::Sampled(SampledPotential::new(points)?))
    }

    /// Leftmost and rightmost points of the support.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Potential::Free | Potential::Delta { .. } => (0.0, 0.0),
            Potential::Square { d, .. } => (-0.5 * d, 0.5 * d),
            Potential::Piecewise(s) => (s[0].x_left, s[s.len() - 1].x_right),
            Potential::Sampled(s) => {
                let x = s.interp.x();
                (x[0], x[x.len() - 1])
            }
        }
    }

    /// Width `d` of the symmetric interval `[-d/2, d/2]` containing the support.
    pub fn width(&self) -> f64 {
        let (a, b) = self.support();
        2.0 * a.abs().max(b.abs())
    }

    /// True for the delta barrier, which is never sampled pointwise.
    pub fn is_distributional(&self) -> bool {
        matches!(self, Potential::Delta { .. })
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        match self {
            Potential::Free | Potential::Delta { .. } => 0.0,
            Potential::Square { v0, d } => {
                if x.abs() <= 0.5 * d {
                    *v0
                } else {
                    0.0
                }
            }
            Potential::Piecewise(segs) => segs.iter().find(|s| x >= s.x_left && x <= s.x_right).map_or(0.0, |s| s.v),
            Potential::Sampled(s) => {
                let (a, b) = self.support();
                if x < a || x > b {
                    0.0
                } else {
                    s.interp.eval(x).max(0.0)
                }
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Delta { .. } => f64::INFINITY,
            Potential::Square { v0, .. } => *v0,
            Potential::Piecewise(s) => s.iter().map(|s| s.v).fold(0.0, f64::max),
            Potential::Sampled(_) => {
                let (a, b) = self.support();
                let n = 4096;
                (0..=n).map(|i| self.evaluate(a + (b - a) * i as f64 / n as f64)).fold(0.0, f64::max)
            }
        }
    }

    /// Mirror image `V(-x)`.
    pub fn mirrored(&self) -> Potential {
        match self {
            Potential::Piecewise(segs) => {
                let mut m: Vec<Segment> =
                    segs.iter().map(|s| Segment { x_left: -s.x_right, x_right: -s.x_left, v: s.v }).collect();
                m.sort_by(|a, b| a.x_left.total_cmp(&b.x_left));
                Potential::Piecewise(m)
            }
            Potential::Sampled(s) => {
                let mut pts: Vec<(f64, f64)> = s.points().map(|(x, v)| (-x, v)).collect();
                pts.reverse();
                Potential::Sampled(
                    SampledPotential::with_resolution(&pts, s.slabs_per_interval)
                        .expect("mirror of a valid grid is valid"),
                )
            }
            other => other.clone(),
        }
    }

    pub fn is_parity_symmetric(&self) -> bool {
        match self {
            Potential::Free | Potential::Square { .. } | Potential::Delta { .. } => true,
            Potential::Piecewise(segs) => {
                let m = match self.mirrored() {
                    Potential::Piecewise(m) => m,
                    _ => unreachable!(),
                };
                segs.len() == m.len()
                    && segs.iter().zip(&m).all(|(a, b)| {
                        (a.x_left - b.x_left).abs() < 1e-12
                            && (a.x_right - b.x_right).abs() < 1e-12
                            && (a.v - b.v).abs() < 1e-12
                    })
            }
            Potential::Sampled(s) => {
                s.points().all(|(x, v)| (x.abs() <= 0.5 * self.width()) && (self.evaluate(-x) - v).abs() < 1e-12)
            }
        }
    }

    /// Constant slabs and point interactions covering the support, left to right.
    pub fn profile(&self) -> Vec<Piece> {
        match self {
            Potential::Free => Vec::new(),
            Potential::Delta { kappa } => vec![Piece::Delta { x: 0.0, kappa: *kappa }],
            Potential::Square { v0, d } => vec![Piece::Slab { x_left: -0.5 * d, x_right: 0.5 * d, v: *v0 }],
            Potential::Piecewise(segs) => {
                let mut out = Vec::with_capacity(2 * segs.len());
                for (i, s) in segs.iter().enumerate() {
                    if i > 0 && s.x_left > segs[i - 1].x_right {
                        out.push(Piece::Slab { x_left: segs[i - 1].x_right, x_right: s.x_left, v: 0.0 });
                    }
                    out.push(Piece::Slab { x_left: s.x_left, x_right: s.x_right, v: s.v });
                }
                out
            }
            Potential::Sampled(s) => {
                let x = s.interp.x();
                let n = s.slabs_per_interval;
                let mut out = Vec::with_capacity(n * (x.len() - 1));
                for w in x.windows(2) {
                    let h = (w[1] - w[0]) / n as f64;
                    for j in 0..n {
                        let lo = w[0] + j as f64 * h;
                        let hi = if j + 1 == n { w[1] } else { lo + h };
                        let v = s.interp.eval(0.5 * (lo + hi)).max(0.0);
                        out.push(Piece::Slab { x_left: lo, x_right: hi, v });
                    }
                }
                out
            }
        }
    }
}

/// Classical turning points `x1 <= x2` at energy `k^2/2M` and their distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForbiddenRegion {
    pub x1: f64,
    pub x2: f64,
    pub d_k: f64,
}

impl ForbiddenRegion {
    pub const EMPTY: ForbiddenRegion = ForbiddenRegion { x1: 0.0, x2: 0.0, d_k: 0.0 };

    pub fn is_empty(&self) -> bool {
        self.d_k == 0.0
    }
}

pub fn forbidden_region(p: &Potential, k: f64, mass: f64) -> ForbiddenRegion {
    let e = k * k / (2.0 * mass);
    let region = |x1: f64, x2: f64| ForbiddenRegion { x1, x2, d_k: x2 - x1 };
    match p {
        Potential::Free | Potential::Delta { .. } => ForbiddenRegion::EMPTY,
        Potential::Square { v0, d } => {
            if e < *v0 {
                region(-0.5 * d, 0.5 * d)
            } else {
                ForbiddenRegion::EMPTY
            }
        }
        Potential::Piecewise(segs) => {
            let above: Vec<&Segment> = segs.iter().filter(|s| s.v > e).collect();
            match (above.first(), above.last()) {
                (Some(a), Some(b)) => region(a.x_left, b.x_right),
                _ => ForbiddenRegion::EMPTY,
            }
        }
        Potential::Sampled(s) => sampled_turning_points(s, e).map_or(ForbiddenRegion::EMPTY, |(x1, x2)| region(x1, x2)),
    }
}

fn sampled_turning_points(s: &SampledPotential, e: f64) -> Option<(f64, f64)> {
    let x = s.interp.x();
    let f = |t: f64| s.interp.eval(t) - e;
    let fine = 64;
    let mut lo = None;
    let mut hi = None;
    let (a, b) = (x[0], x[x.len() - 1]);
    if f(a) > 0.0 {
        lo = Some(a);
    }
    if f(b) > 0.0 {
        hi = Some(b);
    }
    let mut prev_t = a;
    let mut prev_f = f(a);
    for w in x.windows(2) {
        for j in 1..=fine {
            let t = w[0] + (w[1] - w[0]) * j as f64 / fine as f64;
            let ft = f(t);
            if (prev_f > 0.0) != (ft > 0.0) {
                let root = bisect(&f, prev_t, t);
                if lo.is_none() {
                    lo = Some(root);
                }
                if hi != Some(b) {
                    hi = Some(root);
                }
            }
            prev_t = t;
            prev_f = ft;
        }
    }
    match (lo, hi) {
        (Some(l), Some(h)) if h > l => Some((l, h)),
        _ => None,
    }
}

pub(crate) fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || (b - a).abs() <= 1e-15 * (1.0 + m.abs()) {
            return m;
        }
        if (fa > 0.0) == (fm > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Slope `d/dk (M d_k / k)` of the classical traversal time.
///
/// Hard walls contribute nothing, which leaves `-M d_k / k^2`; smooth
/// turning points add `1/V'(x2) - 1/V'(x1)`.
pub fn a_coefficient(p: &Potential, k: f64, mass: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
    }
    let fr = forbidden_region(p, k, mass);
    let hard = -mass * fr.d_k / (k * k);
    match p {
        Potential::Sampled(s) if !fr.is_empty() => {
            let e = k * k / (2.0 * mass);
            let (a, b) = p.support();
            let wall = |x: f64, edge: f64| -> Result<f64> {
                if x == edge && s.interp.eval(edge) > e {
                    return Ok(0.0);
                }
                let slope = s.interp.derivative(x);
                if slope.abs() < 1e-6 * p.max_value() / (b - a) {
                    return Err(Error::NonDifferentiablePotential { x });
                }
                Ok(1.0 / slope)
            };
            Ok(wall(fr.x2, b)? - wall(fr.x1, a)? + hard)
        }
        _ => Ok(hard),
    }
}

/// Minimum-uncertainty Gaussian wave packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianState {
    pub x0: f64,
    pub k0: f64,
    pub delta: f64,
    pub sigma: f64,
}

/// Quality flags from checking a state against a barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateFlags {
    /// `delta / |x0 - a|`, with `a` the left edge of the support.
    pub overlap_ratio: f64,
    pub overlap_warning: bool,
    pub monochromatic: bool,
}

impl GaussianState {
    pub fn new(x0: f64, k0: f64, delta: f64) -> Result<Self> {
        Self::with_spreads(x0, k0, delta, 0.5 / delta)
    }

    pub fn from_sigma(x0: f64, k0: f64, sigma: f64) -> Result<Self> {
        Self::with_spreads(x0, k0, 0.5 / sigma, sigma)
    }

    pub fn with_spreads(x0: f64, k0: f64, delta: f64, sigma: f64) -> Result<Self> {
        if !(k0 > 0.0 && delta > 0.0 && sigma > 0.0 && x0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "state needs k0, delta, sigma > 0 (k0 = {k0}, delta = {delta}, sigma = {sigma})"
            )));
        }
        if (sigma * delta - 0.5).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("sigma * delta = {} differs from 1/2", sigma * delta)));
        }
        if sigma >= k0 {
            return Err(Error::InvalidParameter(format!("sigma / k0 = {} must be below 1", sigma / k0)));
        }
        Ok(Self { x0, k0, delta, sigma })
    }

    pub fn check_against(&self, p: &Potential) -> Result<StateFlags> {
        let (a, _) = p.support();
        if !(self.x0 < a) || !(self.delta < (self.x0 - a).abs()) {
            return Err(Error::InvalidParameter(format!(
                "packet centre {} with spread {} overlaps the barrier starting at {a}",
                self.x0, self.delta
            )));
        }
        let ratio = self.delta / (self.x0 - a).abs();
        Ok(StateFlags {
            overlap_ratio: ratio,
            overlap_warning: ratio > 0.2,
            monochromatic: self.sigma / self.k0 <= 0.05,
        })
    }

    /// `<k|psi0>` without the constant phase `exp(i k0 x0)`.
    pub fn momentum_amplitude(&self, k: f64) -> Complex64 {
        let q = k - self.k0;
        let mag = (2.0 * PI * self.sigma * self.sigma).powf(-0.25) * (-q * q / (4.0 * self.sigma * self.sigma)).exp();
        Complex64::from_polar(mag, -q * self.x0)
    }

    pub fn momentum_density(&self, k: f64) -> f64 {
        self.momentum_amplitude(k).norm_sqr()
    }

    /// `<x|psi0>` with the same phase convention as [`Self::momentum_amplitude`].
    pub fn position_amplitude(&self, x: f64) -> Complex64 {
        let u = x - self.x0;
        let mag = (2.0 * PI * self.delta * self.delta).powf(-0.25) * (-u * u / (4.0 * self.delta * self.delta)).exp();
        Complex64::from_polar(mag, self.k0 * u)
    }
}

/// Initial state given as a (normalised) superposition of Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    terms: Vec<(Complex64, GaussianState)>,
    norm: f64,
}

impl InitialState {
    pub fn gaussian(g: GaussianState) -> Self {
        Self { terms: vec![(Complex64::new(1.0, 0.0), g)], norm: 1.0 }
    }

    pub fn superposition(terms: Vec<(Complex64, GaussianState)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("empty superposition".into()));
        }
        let mut s = Self { terms, norm: 1.0 };
        let (lo, hi) = s.k_range(10.0);
        let (x, w) = crate::quad::composite_gauss_legendre(lo, hi, 64, 16);
        let n2: f64 = x.iter().zip(&w).map(|(k, w)| w * s.raw_amplitude(*k).norm_sqr()).sum();
        s.norm = n2.sqrt();
        Ok(s)
    }

    pub fn terms(&self) -> &[(Complex64, GaussianState)] {
        &self.terms
    }

    /// The single Gaussian, if the state is one.
    pub fn as_gaussian(&self) -> Option<&GaussianState> {
        match self.terms.as_slice() {
            [(_, g)] => Some(g),
            _ => None,
        }
    }

    fn raw_amplitude(&self, k: f64) -> Complex64 {
        self.terms.iter().map(|(c, g)| c * g.momentum_amplitude(k)).sum()
    }

    pub fn momentum_amplitude(&self, k: f64) -> Complex64 {
        self.raw_amplitude(k) / self.norm
    }

    /// `<x|psi0>`, consistent with [`Self::momentum_amplitude`].
    pub fn position_amplitude(&self, x: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(c, g)| c * Complex64::from_polar(1.0, g.k0 * g.x0) * g.position_amplitude(x))
            .sum::<Complex64>()
            / self.norm
    }

    /// Momentum window `[min(k0 - w sigma), max(k0 + w sigma)]`, kept away from
    /// `k = 0` so that finite differences stay on the positive axis.
    pub fn k_range(&self, w: f64) -> (f64, f64) {
        let lo = self.terms.iter().map(|(_, g)| g.k0 - w * g.sigma).fold(f64::INFINITY, f64::min);
        let hi = self.terms.iter().map(|(_, g)| g.k0 + w * g.sigma).fold(f64::NEG_INFINITY, f64::max);
        (lo.max(1e-3 * hi), hi)
    }

    pub fn check_against(&self, p: &Potential) -> Result<StateFlags> {
        let mut worst: Option<StateFlags> = None;
        for (_, g) in &self.terms {
            let f = g.check_against(p)?;
            worst = Some(match worst {
                Some(w) if w.overlap_ratio >= f.overlap_ratio => {
                    StateFlags { monochromatic: w.monochromatic && f.monochromatic, ..w }
                }
                Some(w) => StateFlags { monochromatic: w.monochromatic && f.monochromatic, ..f },
                None => f,
            });
        }
        Ok(worst.expect("non-empty"))
    }
}
