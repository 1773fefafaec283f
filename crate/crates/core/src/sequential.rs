//! Phase-space sampling followed by arrival detection: joint density,
//! delay-time and tunnelling-time marginals and their sharp limits.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

pub use crate::arrival::RegimePolicy;
use crate::arrival::{p_gaussian_closed_form, ClosedFormInput, ClosedFormLevel, RegimeFlag, WeightKind};
use crate::error::{Error, Result};
use crate::model::{forbidden_region, GaussianState, InitialState, PhysParams, Potential};
use crate::povm::{b_first_passage, b_smeared, MUCH_GREATER};
use crate::quad::{self, default_step, Pchip};
use crate::scattering::solve_modes;

/// Threshold for the two small parameters of the marginal formulas.
pub const MARGINAL_THRESHOLD: f64 = 0.1;

/// Momentum diagonal `<k|rho0|k>`.
#[derive(Debug, Clone)]
pub enum MomentumDiagonal {
    State(InitialState),
    /// Tabulated density, zero outside the table.
    Tabulated(Pchip),
}

impl MomentumDiagonal {
    pub fn gaussian(g: GaussianState) -> Self {
        Self::State(InitialState::gaussian(g))
    }

    pub fn tabulated(k: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        if rho.iter().any(|r| *r < 0.0) || k.first().is_some_and(|k| *k <= 0.0) {
            return Err(Error::InvalidParameter("tabulated momentum density must be nonnegative on k > 0".into()));
        }
        Ok(Self::Tabulated(Pchip::new(k, rho)?))
    }

    pub fn density(&self, k: f64) -> f64 {
        match self {
            Self::State(s) => s.momentum_amplitude(k).norm_sqr(),
            Self::Tabulated(p) => {
                let x = p.x();
                if k < x[0] || k > x[x.len() - 1] {
                    0.0
                } else {
                    p.eval(k).max(0.0)
                }
            }
        }
    }

    pub fn k_range(&self) -> (f64, f64) {
        match self {
            Self::State(s) => s.k_range(8.0),
            Self::Tabulated(p) => (p.x()[0], p.x()[p.x().len() - 1]),
        }
    }

    /// Mean position, used to estimate travel times; zero for tabulated input.
    fn x_mean(&self) -> f64 {
        match self {
            Self::State(s) => s.terms().iter().map(|(_, g)| g.x0).fold(f64::INFINITY, f64::min),
            Self::Tabulated(_) => 0.0,
        }
    }
}

/// Per-k quantities entering the sequential distributions.
#[derive(Debug, Clone, Serialize)]
pub struct KTable {
    pub k: Vec<f64>,
    pub w: Vec<f64>,
    pub rho: Vec<f64>,
    pub t_abs2: Vec<f64>,
    pub b_tilde_abs2: Vec<f64>,
    pub lambda: Vec<f64>,
    pub xi: Vec<f64>,
    pub d_k: Vec<f64>,
}

/// `(lambda_k, xi_k)` from the smeared weight, `lambda = Im d log T / dk`.
fn lambda_xi(potential: &Potential, k: f64, mass: f64) -> Result<(f64, f64)> {
    let (dlog, darg) = quad::log_derivatives(|q| Ok(b_smeared(&solve_modes(potential, q, mass)?)), k, default_step(k))?;
    Ok((darg, 0.5 / k + dlog))
}

pub fn delay_function(potential: &Potential, k: f64, mass: f64) -> Result<f64> {
    Ok(mass * lambda_xi(potential, k, mass)?.0 / k)
}

pub fn tunnelling_function(potential: &Potential, k: f64, mass: f64) -> Result<f64> {
    let d = forbidden_region(potential, k, mass).d_k;
    Ok(mass * (lambda_xi(potential, k, mass)?.0 + d) / k)
}

impl KTable {
    pub fn new(rho0: &MomentumDiagonal, potential: &Potential, mass: f64, panels: usize) -> Result<Self> {
        let (lo, hi) = rho0.k_range();
        let (k, w) = quad::composite_gauss_legendre(lo, hi, panels, 8);
        let rows: Vec<_> = k
            .par_iter()
            .map(|&ki| -> Result<[f64; 6]> {
                let sol = solve_modes(potential, ki, mass)?;
                let (lambda, xi) = lambda_xi(potential, ki, mass)?;
                Ok([
                    rho0.density(ki),
                    sol.t_plus.norm_sqr(),
                    b_smeared(&sol).norm_sqr(),
                    lambda,
                    xi,
                    forbidden_region(potential, ki, mass).d_k,
                ])
            })
            .collect::<Result<_>>()?;
        let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
        Ok(Self { rho: col(0), t_abs2: col(1), b_tilde_abs2: col(2), lambda: col(3), xi: col(4), d_k: col(5), k, w })
    }

    /// `int |T_k|^2 <k|rho0|k> dk`.
    pub fn transmitted(&self) -> f64 {
        (0..self.k.len()).map(|i| self.w[i] * self.rho[i] * self.t_abs2[i]).sum()
    }

    /// `|T_k|^2 <k|rho0|k>` on the table nodes.
    pub fn rho_cross(&self) -> Vec<f64> {
        self.rho.iter().zip(&self.t_abs2).map(|(r, t)| r * t).collect()
    }

    fn significant(&self) -> impl Iterator<Item = usize> + '_ {
        let peak = self.rho.iter().copied().fold(0.0, f64::max);
        (0..self.k.len()).filter(move |&i| self.rho[i] > 1e-6 * peak)
    }
}

/// Which marginal to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Marginal {
    Delay,
    Tunnelling,
}

/// One marginal density with its regime record.
#[derive(Debug, Clone, Serialize)]
pub struct MarginalDensity {
    pub which: Marginal,
    pub sigma: f64,
    pub t_grid: Vec<f64>,
    pub p: Vec<f64>,
    pub integral: f64,
    pub regime: Vec<RegimeFlag>,
}

/// Both marginals at one coherent-state width.
#[derive(Debug, Clone, Serialize)]
pub struct SequentialDensity {
    pub sigma: f64,
    pub delay: MarginalDensity,
    pub tunnelling: MarginalDensity,
    /// Detected fraction `int |T_k|^2 <k|rho0|k> dk`.
    pub norm: f64,
    pub regime_d: bool,
    pub regime_tun: bool,
}

/// Worst values of `t^2 sigma^4 / M^2` and `sigma xi_k` over the support.
fn marginal_conditions(
    table: &KTable,
    rho0: &MomentumDiagonal,
    sigma: f64,
    mass: f64,
    detector: f64,
) -> Vec<(RegimeFlag, f64)> {
    let travel = detector - rho0.x_mean().min(0.0);
    let mut spread = (RegimeFlag::below("t^2 sigma^4 / M^2", 0.0, MARGINAL_THRESHOLD), f64::NAN);
    let mut width = (RegimeFlag::below("sigma xi_k", 0.0, MARGINAL_THRESHOLD), f64::NAN);
    for i in table.significant() {
        let k = table.k[i];
        let t = mass * (travel + table.lambda[i]).abs() / k;
        let v = (t * sigma * sigma / mass).powi(2);
        if v > spread.0.value {
            spread = (RegimeFlag::below("t^2 sigma^4 / M^2", v, MARGINAL_THRESHOLD), k);
        }
        let v = (sigma * table.xi[i]).abs();
        if v > width.0.value {
            width = (RegimeFlag::below("sigma xi_k", v, MARGINAL_THRESHOLD), k);
        }
    }
    vec![spread, width]
}

fn apply_policy(flags: Vec<(RegimeFlag, f64)>, policy: RegimePolicy) -> Result<Vec<RegimeFlag>> {
    let mut out = Vec::new();
    for (f, k) in flags {
        if !f.satisfied && policy == RegimePolicy::Enforce {
            return Err(Error::RegimeViolation {
                condition: f.condition,
                value: f.value,
                threshold: f.threshold,
                k: Some(k),
            });
        }
        out.push(f);
    }
    Ok(out)
}

/// Gaussian-kernel marginal
/// `sqrt(8 pi sigma^2) int dk rho |B~|^2 (k/M) exp(-(2k^2 sigma^2/M^2)(t - F(k))^2)`.
pub fn marginal(table: &KTable, which: Marginal, sigma: f64, mass: f64, t_grid: &[f64]) -> MarginalDensity {
    let idx: Vec<usize> = table.significant().collect();
    let centre: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let shift = if which == Marginal::Tunnelling { table.d_k[i] } else { 0.0 };
            mass * (table.lambda[i] + shift) / table.k[i]
        })
        .collect();
    let pref = (8.0 * PI * sigma * sigma).sqrt();
    let p: Vec<f64> = t_grid
        .par_iter()
        .map(|&t| {
            idx.iter()
                .zip(&centre)
                .map(|(&i, c)| {
                    let k = table.k[i];
                    let a = 2.0 * k * k * sigma * sigma / (mass * mass);
                    table.w[i] * table.rho[i] * table.b_tilde_abs2[i] * (k / mass) * (-a * (t - c) * (t - c)).exp()
                })
                .sum::<f64>()
                * pref
        })
        .collect();
    MarginalDensity {
        which,
        sigma,
        integral: quad::trapezoid(t_grid, &p),
        t_grid: t_grid.to_vec(),
        p,
        regime: Vec::new(),
    }
}

pub fn marginal_delay(
    rho0: &MomentumDiagonal,
    sigma: f64,
    potential: &Potential,
    params: PhysParams,
    t_grid: &[f64],
    policy: RegimePolicy,
) -> Result<MarginalDensity> {
    let table = KTable::new(rho0, potential, params.mass, 64)?;
    let flags = apply_policy(marginal_conditions(&table, rho0, sigma, params.mass, params.detector), policy)?;
    let mut m = marginal(&table, Marginal::Delay, sigma, params.mass, t_grid);
    m.regime = flags;
    Ok(m)
}

pub fn marginal_tunnelling(
    rho0: &MomentumDiagonal,
    sigma: f64,
    potential: &Potential,
    params: PhysParams,
    t_grid: &[f64],
    policy: RegimePolicy,
) -> Result<MarginalDensity> {
    let table = KTable::new(rho0, potential, params.mass, 64)?;
    let flags = apply_policy(marginal_conditions(&table, rho0, sigma, params.mass, params.detector), policy)?;
    let mut m = marginal(&table, Marginal::Tunnelling, sigma, params.mass, t_grid);
    m.regime = flags;
    Ok(m)
}

/// Both marginals plus the sharp-limit verdicts.
pub fn sequential_densities(
    rho0: &MomentumDiagonal,
    sigma: f64,
    potential: &Potential,
    params: PhysParams,
    t_grid: &[f64],
    policy: RegimePolicy,
) -> Result<SequentialDensity> {
    let table = KTable::new(rho0, potential, params.mass, 64)?;
    let flags = apply_policy(marginal_conditions(&table, rho0, sigma, params.mass, params.detector), policy)?;
    let mut delay = marginal(&table, Marginal::Delay, sigma, params.mass, t_grid);
    let mut tunnelling = marginal(&table, Marginal::Tunnelling, sigma, params.mass, t_grid);
    delay.regime = flags.clone();
    tunnelling.regime = flags;
    let check = regime_check_table(&table, potential, sigma);
    Ok(SequentialDensity {
        sigma,
        delay,
        tunnelling,
        norm: table.transmitted(),
        regime_d: check.cond_d,
        regime_tun: check.cond_t,
    })
}

/// Sharp-limit densities from the change of variables `t = F(k)`.
#[derive(Debug, Clone, Serialize)]
pub struct IdealDistributions {
    pub t_grid: Vec<f64>,
    pub p_d: Vec<f64>,
    pub p_tun: Vec<f64>,
    /// Grid points where a root had a vanishing Jacobian.
    pub degenerate: Vec<usize>,
    pub regime: RegimeCheck,
}

fn pushforward(
    rho0: &MomentumDiagonal,
    potential: &Potential,
    mass: f64,
    f: &(dyn Fn(f64) -> Result<f64> + Sync),
    k_nodes: &[f64],
    f_nodes: &[f64],
    t: f64,
) -> Result<f64> {
    let mut acc = 0.0;
    for j in 0..k_nodes.len() - 1 {
        let (ga, gb) = (f_nodes[j] - t, f_nodes[j + 1] - t);
        if ga != 0.0 && ga * gb >= 0.0 {
            continue;
        }
        let (mut a, mut b) = (k_nodes[j], k_nodes[j + 1]);
        let mut fa = ga;
        if ga != 0.0 {
            while (b - a) > 1e-12 * b {
                let m = 0.5 * (a + b);
                let fm = f(m)? - t;
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if (fm > 0.0) == (fa > 0.0) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
        }
        let k = 0.5 * (a + b);
        let deriv = quad::try_derivative(f, k, default_step(k))?;
        if deriv.abs() < 1e-12 {
            return Err(Error::DegenerateJacobian { k, derivative: deriv });
        }
        let t_abs2 = solve_modes(potential, k, mass)?.t_plus.norm_sqr();
        acc += rho0.density(k) * t_abs2 / deriv.abs();
    }
    Ok(acc)
}

/// `P(t) = sum over roots of F(k) = t of <k|rho0|k> |T_k|^2 / |F'(k)|`.
pub fn ideal_distributions(
    rho0: &MomentumDiagonal,
    potential: &Potential,
    mass: f64,
    t_grid: &[f64],
    sigma: Option<f64>,
) -> Result<IdealDistributions> {
    let (lo, hi) = rho0.k_range();
    let k_nodes = quad::linspace(lo, hi, 401);
    let fd = |k: f64| delay_function(potential, k, mass);
    let ft = |k: f64| tunnelling_function(potential, k, mass);
    let fd_nodes = k_nodes.iter().map(|&k| fd(k)).collect::<Result<Vec<_>>>()?;
    let ft_nodes = k_nodes.iter().map(|&k| ft(k)).collect::<Result<Vec<_>>>()?;
    let mut degenerate = Vec::new();
    let eval = |f: &(dyn Fn(f64) -> Result<f64> + Sync), nodes: &[f64]| -> Result<Vec<Option<f64>>> {
        t_grid
            .par_iter()
            .map(|&t| match pushforward(rho0, potential, mass, f, &k_nodes, nodes, t) {
                Ok(v) => Ok(Some(v)),
                Err(Error::DegenerateJacobian { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect()
    };
    let raw_d = eval(&fd, &fd_nodes)?;
    let raw_t = eval(&ft, &ft_nodes)?;
    for (i, (a, b)) in raw_d.iter().zip(&raw_t).enumerate() {
        if a.is_none() || b.is_none() {
            degenerate.push(i);
        }
    }
    let table = KTable::new(rho0, potential, mass, 32)?;
    Ok(IdealDistributions {
        t_grid: t_grid.to_vec(),
        p_d: raw_d.into_iter().map(|v| v.unwrap_or(0.0)).collect(),
        p_tun: raw_t.into_iter().map(|v| v.unwrap_or(0.0)).collect(),
        degenerate,
        regime: regime_check_table(&table, potential, sigma.unwrap_or(f64::NAN)),
    })
}

/// `|T_k|^2 <k|rho0|k>` on a caller grid, unnormalised.
pub fn rho_cross(rho0: &MomentumDiagonal, potential: &Potential, mass: f64, k: &[f64]) -> Result<Vec<f64>> {
    k.iter().map(|&ki| Ok(rho0.density(ki) * solve_modes(potential, ki, mass)?.t_plus.norm_sqr())).collect()
}

/// One quantile row of the sharp-limit check.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeRow {
    pub k: f64,
    pub sigma_lambda: f64,
    pub sigma_lambda_d: f64,
}

/// Sharp-limit conditions `sigma |lambda_k| >> 1` and `sigma (lambda_k + d_k) >> 1`.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeCheck {
    pub sigma: f64,
    pub cond_d: bool,
    pub cond_t: bool,
    pub factor: f64,
    pub rows: Vec<RegimeRow>,
    pub notes: Vec<String>,
}

pub fn regime_check(potential: &Potential, rho0: &MomentumDiagonal, sigma: f64, mass: f64) -> Result<RegimeCheck> {
    let table = KTable::new(rho0, potential, mass, 32)?;
    Ok(regime_check_table(&table, potential, sigma))
}

fn regime_check_table(table: &KTable, potential: &Potential, sigma: f64) -> RegimeCheck {
    let cdf = quad::cumulative_trapezoid(&table.k, &table.rho);
    let total = cdf[cdf.len() - 1];
    let rows: Vec<RegimeRow> = [0.1, 0.3, 0.5, 0.7, 0.9]
        .iter()
        .map(|q| {
            let i = cdf.partition_point(|c| *c < q * total).min(table.k.len() - 1);
            RegimeRow {
                k: table.k[i],
                sigma_lambda: sigma * table.lambda[i].abs(),
                sigma_lambda_d: sigma * (table.lambda[i] + table.d_k[i]),
            }
        })
        .collect();
    let cond_d = rows.iter().all(|r| r.sigma_lambda > MUCH_GREATER);
    let cond_t = rows.iter().all(|r| r.sigma_lambda_d > MUCH_GREATER);
    let mut notes = Vec::new();
    if let Potential::Delta { kappa } = potential {
        let k = rows[2].k;
        let need = MUCH_GREATER * (k * k + kappa * kappa) / kappa;
        notes.push(format!(
            "delta barrier: sigma kappa / (k^2 + kappa^2) >> 1 needs sigma > {need:.3} at k = {k:.3}, \
             a position resolution finer than the wavelength; physically unrealistic"
        ));
    }
    RegimeCheck { sigma, cond_d, cond_t, factor: MUCH_GREATER, rows, notes }
}

/// `<x k|rho0|x k>` for a Gaussian `rho0` against coherent states of momentum width `sigma`.
pub fn husimi_weight(rho0: &GaussianState, sigma: f64, x: f64, k: f64) -> f64 {
    let d = 0.5 / sigma;
    let d0 = rho0.delta;
    let s2 = d * d + d0 * d0;
    (2.0 * d * d0 / s2)
        * (-(x - rho0.x0).powi(2) / (2.0 * s2)).exp()
        * (-2.0 * (k - rho0.k0).powi(2) * d * d * d0 * d0 / s2).exp()
}

/// `P(t, x, k) = <x k|rho0|x k> p_{x,k}(t)`, with `p_{x,k}` the first closed form.
pub fn joint_density(
    rho0: &GaussianState,
    sigma: f64,
    potential: &Potential,
    params: PhysParams,
    x: f64,
    k: f64,
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    if k <= 0.0 {
        return Ok(vec![0.0; t_grid.len()]);
    }
    let q = husimi_weight(rho0, sigma, x, k);
    let st = GaussianState { x0: x, k0: k, delta: 0.5 / sigma, sigma };
    let m = params.mass;
    let b = |q: f64| Ok(b_first_passage(&solve_modes(potential, q, m)?));
    let (xi, lambda) = crate::povm::expansion_params(b, k, default_step(k))?;
    let input = ClosedFormInput {
        mass: m,
        detector: params.detector,
        weight: WeightKind::FirstPassage,
        b_abs2: b(k)?.norm_sqr(),
        xi,
        lambda,
    };
    let d = p_gaussian_closed_form(&st, &input, ClosedFormLevel::P1, t_grid)?;
    Ok(d.p.into_iter().map(|p| q * p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn husimi_centre_value_and_normalisation() {
        let g = GaussianState::from_sigma(-30.0, 1.0, 0.1).unwrap();
        assert!((husimi_weight(&g, 0.1, -30.0, 1.0) - 1.0).abs() < 1e-14);
        let (xs, wx) = quad::composite_gauss_legendre(-80.0, 20.0, 20, 16);
        let (ks, wk) = quad::composite_gauss_legendre(-1.0, 3.0, 20, 16);
        let mut s = 0.0;
        for (x, a) in xs.iter().zip(&wx) {
            for (k, b) in ks.iter().zip(&wk) {
                s += a * b * husimi_weight(&g, 0.3, *x, *k);
            }
        }
        assert!((s / (2.0 * PI) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn free_particle_has_no_sharp_limit() {
        let rho = MomentumDiagonal::gaussian(GaussianState::from_sigma(-30.0, 1.0, 0.1).unwrap());
        let c = regime_check(&Potential::Free, &rho, 3.0, 1.0).unwrap();
        assert!(!c.cond_d && !c.cond_t);
    }
}
