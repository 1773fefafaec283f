//! Batch pipelines behind the command-line front end. Each run writes one
//! directory with `manifest.json`, CSV data and, where relevant, `report.json`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::arrival::{
    closed_form_with_policy, extract_times, monochromatic_with_policy, p_exact, smeared_with_policy,
    transmitted_fraction, ArrivalDensity, ClosedFormInput, RegimePolicy, SpectralState,
};
use crate::config::{ArrivalMethod, ExperimentConfig, Pipeline, PotentialConfig, RangeConfig, StateConfig};
use crate::error::{Error, Result};
use crate::model::{a_coefficient, forbidden_region, InitialState, Potential};
use crate::oracle::{
    flux_arrival_density, kijowski_reference, l1_rel, linf_rel, propagate_restricted, Check, ComparisonReport,
    OracleGrid,
};
use crate::povm::{lambda_full, phase_time, uncertainty_bound, MUCH_GREATER};
use crate::scattering::{gamma, solve_modes};
use crate::sequential::{ideal_distributions, marginal_delay, sequential_densities, MomentumDiagonal};

/// Flags that change how a run treats failed regime conditions.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub force: bool,
    /// Mean momentum for `times` when no state is configured.
    pub k0: Option<f64>,
}

impl RunOptions {
    fn policy(&self) -> RegimePolicy {
        if self.force {
            RegimePolicy::Report
        } else {
            RegimePolicy::Enforce
        }
    }
}

/// Where a run wrote its files and the scalar results a sweep aggregates.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub summary: BTreeMap<String, f64>,
}

/// Regime thresholds used across the crate, echoed into every manifest.
pub fn thresholds() -> Value {
    json!({
        "closed_form_small_parameter": 0.1,
        "monochromatic_dk_over_k": 0.1,
        "marginal_small_parameter": crate::sequential::MARGINAL_THRESHOLD,
        "much_greater_factor": MUCH_GREATER,
        "multipeak_ratio": 0.2,
        "smeared_t_min_over_tau": 5.0,
        "overlap_warning_ratio": 0.2,
        "long_barrier_gamma_d": 5.0,
    })
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "{}", header.join(","))?;
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| fmt(*v)).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    f.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let v = serde_json::to_value(value).map_err(|e| Error::Io(e.to_string()))?;
    let text = serde_json::to_string_pretty(&v).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

struct Writer {
    dir: PathBuf,
    files: Vec<String>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        write_csv(&self.dir.join(name), header, rows)?;
        self.files.push(name.into());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.dir.join(name), value)?;
        self.files.push(name.into());
        Ok(())
    }

    fn finish(
        mut self,
        cfg: &ExperimentConfig,
        pipeline: &str,
        derived: Value,
        summary: BTreeMap<String, f64>,
    ) -> Result<RunOutput> {
        self.files.push("manifest.json".into());
        let manifest = json!({
            "tool": "toa",
            "version": env!("CARGO_PKG_VERSION"),
            "pipeline": pipeline,
            "config": cfg,
            "thresholds": thresholds(),
            "derived": derived,
            "files": self.files,
        });
        write_json(&self.dir.join("manifest.json"), &manifest)?;
        Ok(RunOutput { dir: self.dir, files: self.files, summary })
    }
}

fn time_scale(cfg: &ExperimentConfig) -> f64 {
    cfg.display.as_ref().map_or(1.0, |d| d.time)
}

/// `(k, |T|^2, arg T, |R|^2, residual)` on the configured k-range.
pub fn run_scatter(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    let potential = cfg.potential.build()?;
    let range = cfg.grid.k.ok_or_else(|| Error::Config("scatter needs grid.k".into()))?.validated()?;
    let m = cfg.physics.mass;
    let mut rows = Vec::with_capacity(range.n);
    let mut worst: f64 = 0.0;
    for k in range.points() {
        if k <= 0.0 {
            return Err(Error::Config("scatter needs k > 0".into()));
        }
        let s = solve_modes(&potential, k, m)?;
        worst = worst.max(s.max_residual());
        rows.push(vec![k, s.t_plus.norm_sqr(), s.t_plus.arg(), s.r_plus.norm_sqr(), s.max_residual()]);
    }
    let mut w = Writer::new(out)?;
    w.csv("scatter.csv", &["k", "abs_t2", "arg_t", "abs_r2", "residual"], &rows)?;
    let summary = BTreeMap::from([("max_residual".to_string(), worst)]);
    w.finish(cfg, "scatter", json!({ "max_residual": worst }), summary)
}

fn time_grid(cfg: &ExperimentConfig, state: &InitialState, potential: &Potential) -> Vec<f64> {
    if let Some(t) = cfg.grid.t {
        return t.points();
    }
    // Each term spans its classical arrival time plus eight position widths.
    let m = cfg.physics.mass;
    let (lo, _) = state.k_range(6.0);
    let mut start = f64::INFINITY;
    let mut stop: f64 = 0.0;
    for (_, g) in state.terms() {
        let centre = m * (cfg.physics.detector - g.x0) / g.k0;
        let spread = 8.0 * m * g.delta / g.k0;
        start = start.min(centre - spread);
        stop = stop.max(centre + spread);
    }
    let start = start.max(0.0);
    let stop = stop + 5.0 * m * potential.width() / lo;
    RangeConfig { start, stop, n: 1201 }.points()
}

fn density_rows(d: &ArrivalDensity, scale: f64) -> Vec<Vec<f64>> {
    d.t_grid.iter().zip(&d.p).map(|(t, p)| vec![t * scale, p / scale]).collect()
}

/// Arrival density with the configured method, plus peak-derived times.
pub fn run_arrival(cfg: &ExperimentConfig, out: &Path, opts: RunOptions) -> Result<RunOutput> {
    let potential = cfg.potential.build()?;
    let params = cfg.params(&potential)?;
    let sc = cfg.state()?;
    let state = sc.build()?;
    let t = time_grid(cfg, &state, &potential);
    let policy = opts.policy();
    let density = match cfg.method.arrival {
        ArrivalMethod::Exact | ArrivalMethod::Smeared | ArrivalMethod::Monochromatic => {
            let spec = SpectralState::new(state.clone(), &potential, params, cfg.grid.k_nodes)?;
            match cfg.method.arrival {
                ArrivalMethod::Exact => p_exact(&spec, &t)?,
                ArrivalMethod::Monochromatic => monochromatic_with_policy(&spec, &t, policy)?,
                _ => {
                    let tau =
                        cfg.method.tau.ok_or_else(|| Error::Config("method.tau is required for smeared".into()))?;
                    smeared_with_policy(&spec, &t, tau, policy)?
                }
            }
        }
        other => {
            let g =
                state.as_gaussian().ok_or_else(|| Error::Config("closed forms need a single Gaussian state".into()))?;
            let input = ClosedFormInput::from_potential(&potential, g, params, cfg.method.weight)?;
            closed_form_with_policy(g, &input, other.level().expect("closed form"), &t, policy)?
        }
    };
    let mut summary = BTreeMap::from([
        ("integral".to_string(), density.integral()),
        ("p_nodetect".to_string(), density.p_nodetect),
        ("t_peak".to_string(), density.t_peak),
    ]);
    let first = state.terms()[0].1;
    let (times, times_error) = match extract_times(&density, &first, &potential, params) {
        Ok(ts) => {
            summary.insert("t_d".into(), ts.t_d);
            summary.insert("t_tun".into(), ts.t_tun);
            (Some(ts), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    let transmitted = transmitted_fraction(&state, &potential, params.mass)?;
    summary.insert("transmitted".into(), transmitted);
    let meta = json!({
        "method": density.method,
        "regime": density.regime,
        "diagnostics": density.diagnostics,
        "t_peak": density.t_peak,
        "p_nodetect": density.p_nodetect,
        "integral": density.integral(),
        "min_raw": density.min_raw,
        "transmitted_fraction": transmitted,
        "times": times,
        "times_error": times_error,
    });
    let mut w = Writer::new(out)?;
    w.csv("density.csv", &["t", "p"], &density_rows(&density, time_scale(cfg)))?;
    w.json("density.json", &meta)?;
    w.finish(cfg, "arrival", meta, summary)
}

/// Phase time, forbidden-region width and the uncertainty verdict at `k0`.
pub fn run_times(cfg: &ExperimentConfig, out: &Path, opts: RunOptions) -> Result<RunOutput> {
    let potential = cfg.potential.build()?;
    let m = cfg.physics.mass;
    let l = cfg.physics.detector;
    let k0 = match (&cfg.state, opts.k0) {
        (_, Some(k)) => k,
        (Some(s), None) => s.k0,
        (None, None) => return Err(Error::Config("times needs state.k0 or --k0".into())),
    };
    let sol = |k: f64| solve_modes(&potential, k, m);
    let d_k = forbidden_region(&potential, k0, m).d_k;
    let mut ts = phase_time(sol, k0, m, d_k)?;
    let a = a_coefficient(&potential, k0, m)?;
    let sigma = cfg.state.as_ref().and_then(|s: &StateConfig| s.gaussian().ok()).map(|g| g.sigma);
    let bound = sigma.map(|s| uncertainty_bound(&ts, a, s, m, k0));
    ts.uncertainty = bound.map(|b| b.total);
    let lam_full = lambda_full(sol, k0, l).ok();
    let long = match &cfg.potential {
        PotentialConfig::Square { v0, d } if k0 * k0 / (2.0 * m) < *v0 => {
            let g = gamma(*v0, k0, m);
            (g * d >= 5.0).then(|| json!({ "gamma": g, "t_tun_long": 2.0 * m / (g * k0) }))
        }
        _ => None,
    };
    let derived = json!({
        "k0": k0,
        "times": ts,
        "a_coefficient": a,
        "uncertainty": bound,
        "lambda_full_at_detector": lam_full,
        "long_barrier": long,
    });
    let mut summary = BTreeMap::from([
        ("t_tun".to_string(), ts.t_tun),
        ("t_d".to_string(), ts.t_d),
        ("lambda".to_string(), ts.lambda),
        ("xi".to_string(), ts.xi),
        ("d_k".to_string(), d_k),
        ("a".to_string(), a),
    ]);
    if let Some(b) = bound {
        summary.insert("uncertainty".into(), b.total);
    }
    let mut w = Writer::new(out)?;
    w.json("times.json", &derived)?;
    w.finish(cfg, "times", derived, summary)
}

/// Delay and tunnelling-time marginals and their sharp limits.
pub fn run_sequential(cfg: &ExperimentConfig, out: &Path, opts: RunOptions) -> Result<RunOutput> {
    let potential = cfg.potential.build()?;
    let params = cfg.params(&potential)?;
    let state = cfg.state()?.build()?;
    let seq = cfg.sequential.as_ref().ok_or_else(|| Error::Config("sequential needs a [sequential] table".into()))?;
    let policy = if opts.force { RegimePolicy::Report } else { seq.policy };
    let (lo, hi) = state.k_range(4.0);
    let value_grid = |f: &dyn Fn(f64) -> Result<f64>| -> Result<Vec<f64>> {
        if let Some(r) = cfg.grid.t_d {
            return Ok(r.points());
        }
        let vals = crate::quad::linspace(lo, hi, 41).into_iter().map(f).collect::<Result<Vec<_>>>()?;
        let (a, b) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let pad = 6.0 * params.mass / (2.0 * lo * seq.sigma);
        Ok(RangeConfig { start: a - pad, stop: b + pad, n: 2001 }.points())
    };
    let m = params.mass;
    let t_d = value_grid(&|k| crate::sequential::delay_function(&potential, k, m))?;
    let t_t = value_grid(&|k| crate::sequential::tunnelling_function(&potential, k, m))?;
    let rho = MomentumDiagonal::State(state);
    let dens = sequential_densities(&rho, seq.sigma, &potential, params, &t_t, policy)?;
    let delay = marginal_delay(&rho, seq.sigma, &potential, params, &t_d, policy)?;
    let scale = time_scale(cfg);
    let conditions_met = dens.tunnelling.regime.iter().all(|f| f.satisfied);
    let flag_d = if conditions_met && dens.regime_d { 1.0 } else { 0.0 };
    let flag_t = if conditions_met && dens.regime_tun { 1.0 } else { 0.0 };
    let rows = |t: &[f64], p: &[f64], flag: f64| -> Vec<Vec<f64>> {
        t.iter().zip(p).map(|(t, p)| vec![t * scale, p / scale, flag]).collect()
    };
    let mut w = Writer::new(out)?;
    w.csv("delay.csv", &["t_value", "density", "regime_flag"], &rows(&t_d, &delay.p, flag_d))?;
    w.csv("tunnelling.csv", &["t_value", "density", "regime_flag"], &rows(&t_t, &dens.tunnelling.p, flag_t))?;
    let mut summary = BTreeMap::from([
        ("norm".to_string(), dens.norm),
        ("integral_d".to_string(), delay.integral),
        ("integral_tun".to_string(), dens.tunnelling.integral),
    ]);
    let ideal = if seq.ideal {
        let id_d = ideal_distributions(&rho, &potential, m, &t_d, Some(seq.sigma))?;
        let id_t = ideal_distributions(&rho, &potential, m, &t_t, Some(seq.sigma))?;
        let flag =
            |id: &crate::sequential::IdealDistributions, i: usize| if id.degenerate.contains(&i) { 0.0 } else { 1.0 };
        let rows_d: Vec<Vec<f64>> =
            (0..t_d.len()).map(|i| vec![t_d[i] * scale, id_d.p_d[i] / scale, flag(&id_d, i)]).collect();
        let rows_t: Vec<Vec<f64>> =
            (0..t_t.len()).map(|i| vec![t_t[i] * scale, id_t.p_tun[i] / scale, flag(&id_t, i)]).collect();
        w.csv("ideal_delay.csv", &["t_value", "density", "regime_flag"], &rows_d)?;
        w.csv("ideal_tunnelling.csv", &["t_value", "density", "regime_flag"], &rows_t)?;
        summary.insert("l1_d_vs_ideal".into(), l1_rel(&t_d, &delay.p, &id_d.p_d));
        summary.insert("l1_tun_vs_ideal".into(), l1_rel(&t_t, &dens.tunnelling.p, &id_t.p_tun));
        Some(id_t.regime)
    } else {
        None
    };
    let meta = json!({
        "sigma": dens.sigma,
        "norm": dens.norm,
        "integral_d": delay.integral,
        "integral_tun": dens.tunnelling.integral,
        "regime_d": dens.regime_d,
        "regime_tun": dens.regime_tun,
        "marginal_conditions": dens.tunnelling.regime,
        "sharp_limit": ideal,
    });
    w.json("sequential.json", &meta)?;
    w.finish(cfg, "sequential", meta, summary)
}

/// Named oracle cases for `oracle-compare --case`.
pub fn oracle_case(name: &str) -> Result<ExperimentConfig> {
    let potential = match name {
        "free-gaussian" => "kind = \"free\"",
        "square-barrier" => "kind = \"square\"\nv0 = 0.6\nd = 0.2",
        "delta-barrier" => "kind = \"delta\"\nkappa = 0.2",
        other => return Err(Error::Config(format!("unknown oracle case '{other}'"))),
    };
    ExperimentConfig::from_toml(&format!(
        "[physics]\nmass = 1.0\ndetector = 10.0\n[potential]\n{potential}\n\
         [state]\nx0 = -150.0\nk0 = 1.0\nsigma = 0.02\n\
         [grid]\nt = {{ start = 60.0, stop = 300.0, n = 200 }}\n\
         [oracle]\ndx = 0.05\ndt = 0.05\nt_max = 420.0\n[output]\ndir = \"toa-out/oracle-{name}\"\n"
    ))
}

struct OracleRun {
    ppp: Vec<f64>,
    flux: Vec<f64>,
    flux_cumulative: f64,
    drift: f64,
    hermiticity: f64,
    worst_block: f64,
    advisory: Option<String>,
}

fn oracle_once(
    state: &InitialState,
    potential: &Potential,
    params: crate::model::PhysParams,
    grid: OracleGrid,
    t_max: f64,
    t: &[f64],
    (tau, e_max): (f64, f64),
) -> Result<OracleRun> {
    let run = propagate_restricted(state, potential, params, grid, t_max)?;
    let ppp = run.record.ppp_density(t, tau, e_max).p;
    let small: Vec<f64> = {
        let n = t.len().min(200);
        crate::quad::linspace(t[0], t[t.len() - 1], n)
    };
    let cells = run.record.rho_small_scale(&small)?;
    let scale = (0..cells.n()).map(|i| cells.get(i, i).norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut worst_block = f64::INFINITY;
    for lo in (0..cells.n()).step_by(7) {
        for hi in (lo + 1..=cells.n()).step_by(11) {
            worst_block = worst_block.min(cells.block_sum(lo, hi).re / scale);
        }
    }
    let flux = flux_arrival_density(state, potential, params, grid, t_max, params.detector)?;
    Ok(OracleRun {
        ppp,
        flux: flux.resample(t),
        flux_cumulative: flux.cumulative[flux.cumulative.len() - 1],
        drift: run.norm_drift,
        hermiticity: cells.hermiticity_residual() / scale,
        worst_block,
        advisory: run.cfl_advisory,
    })
}

/// Grid oracle against the spectral pipeline; writes `report.json`.
pub fn run_oracle_compare(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    let potential = cfg.potential.build()?;
    let params = cfg.params(&potential)?;
    let state = cfg.state()?.build()?;
    let g = *state.as_gaussian().ok_or_else(|| Error::Config("oracle-compare needs a single Gaussian state".into()))?;
    let oc = cfg.oracle.clone().ok_or_else(|| Error::Config("oracle-compare needs an [oracle] table".into()))?;
    let t = cfg.grid.t.ok_or_else(|| Error::Config("oracle-compare needs grid.t".into()))?.points();
    let spec = SpectralState::new(state.clone(), &potential, params, cfg.grid.k_nodes)?;
    let exact = p_exact(&spec, &t)?;
    let (_, kmax) = state.k_range(6.0);
    let e_max = kmax * kmax / (2.0 * params.mass);
    let eps = g.k0 * g.k0 / (2.0 * params.mass);
    let tau = oc.tau.unwrap_or(25.0 / eps);
    let grid = OracleGrid::restricted(&state, params, oc.dx, oc.dt);
    let base = oracle_once(&state, &potential, params, grid, oc.t_max, &t, (tau, e_max))?;
    let mut checks = vec![
        Check::new("norm drift", base.drift, 1e-8),
        Check::new("hermiticity residual (relative)", base.hermiticity, 1e-10),
        Check::new("block positivity (negative part, relative)", (-base.worst_block).max(0.0), 1e-8),
        Check::new("smeared oracle density vs p_exact (Linf / peak)", linf_rel(&base.ppp, &exact.p), 0.03),
        Check::new("cumulative flux overshoot", (base.flux_cumulative - 1.0).max(-base.flux_cumulative).max(0.0), 1e-3),
    ];
    let m = params.mass;
    let flux_peak = crate::arrival::peak_time(&t, &base.flux);
    if matches!(potential, Potential::Free) {
        checks.push(Check::new("flux vs p_exact (L1 / norm)", l1_rel(&t, &base.flux, &exact.p), 0.05));
    } else {
        checks.push(Check::new(
            "flux peak vs p_exact peak (units of M / k0 sigma)",
            (flux_peak - exact.t_peak).abs() * g.k0 * g.sigma / m,
            0.2,
        ));
    }
    let mut notes = Vec::new();
    if let Some(a) = &base.advisory {
        notes.push(a.clone());
    }
    if oc.convergence_gate {
        let fine = oracle_once(&state, &potential, params, grid.halved(), oc.t_max, &t, (tau, e_max))?;
        checks.push(Check::new("grid halving: smeared density change", linf_rel(&fine.ppp, &base.ppp), 0.03));
        checks.push(Check::new("grid halving: flux change", l1_rel(&t, &fine.flux, &base.flux), 0.05));
    }
    if matches!(potential, Potential::Free) {
        let kij = kijowski_reference(&g, m, params.detector, &t);
        let abs = exact.p.iter().zip(&kij.p).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        notes.push(format!(
            "Kijowski reference vs p_exact: max abs difference {abs:.3e}, relative to peak {:.3e}",
            linf_rel(&exact.p, &kij.p)
        ));
    }
    let case = serde_json::to_string(&cfg.potential).map_err(|e| Error::Io(e.to_string()))?;
    let report = ComparisonReport { case, checks, notes };
    let mut w = Writer::new(out)?;
    let rows: Vec<Vec<f64>> = (0..t.len()).map(|i| vec![t[i], exact.p[i], base.ppp[i], base.flux[i]]).collect();
    w.csv("oracle.csv", &["t", "p_exact", "p_oracle", "flux"], &rows)?;
    w.json("report.json", &report)?;
    let summary = report.checks.iter().map(|c| (c.name.clone(), c.value)).collect::<BTreeMap<_, _>>();
    let derived = json!({ "all_pass": report.all_pass(), "tau": tau, "grid": grid });
    w.finish(cfg, "oracle-compare", derived, summary)
}

/// Runs `pipeline` over the Cartesian product of up to three axes.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path, opts: RunOptions) -> Result<RunOutput> {
    let sw = cfg.sweep.as_ref().ok_or_else(|| Error::Config("sweep needs a [sweep] table".into()))?;
    if sw.axis.is_empty() || sw.axis.len() > 3 {
        return Err(Error::Config(format!("sweep takes 1 to 3 axes, got {}", sw.axis.len())));
    }
    let values: Vec<Vec<f64>> = sw.axis.iter().map(|a| a.values()).collect::<Result<_>>()?;
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for vals in &values {
        points = points.into_iter().flat_map(|p| vals.iter().map(move |v| [p.clone(), vec![*v]].concat())).collect();
    }
    let configs: Vec<ExperimentConfig> = points
        .iter()
        .map(|p| {
            let mut c = cfg.clone();
            c.sweep = None;
            for (axis, v) in sw.axis.iter().zip(p) {
                c = c.with_value(&axis.path, *v)?;
            }
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let results: Vec<std::result::Result<RunOutput, String>> = configs
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let dir = out.join(format!("point_{i:04}"));
            let r = match sw.pipeline {
                Pipeline::Scatter => run_scatter(c, &dir),
                Pipeline::Arrival => run_arrival(c, &dir, opts),
                Pipeline::Times => run_times(c, &dir, opts),
                Pipeline::Sequential => run_sequential(c, &dir, opts),
            };
            r.map_err(|e| e.to_string())
        })
        .collect();
    let mut keys: Vec<String> =
        results.iter().filter_map(|r| r.as_ref().ok()).flat_map(|r| r.summary.keys().cloned()).collect();
    keys.sort();
    keys.dedup();
    let mut header: Vec<String> = sw.axis.iter().map(|a| a.path.clone()).collect();
    header.extend(keys.iter().cloned());
    let rows: Vec<Vec<f64>> = points
        .iter()
        .zip(&results)
        .map(|(p, r)| {
            let mut row = p.clone();
            for k in &keys {
                row.push(r.as_ref().ok().and_then(|o| o.summary.get(k).copied()).unwrap_or(f64::NAN));
            }
            row
        })
        .collect();
    let mut w = Writer::new(out)?;
    let header_ref: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    w.csv("aggregate.csv", &header_ref, &rows)?;
    let errors: Vec<Value> = results
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().err().map(|e| json!({ "point": i, "error": e })))
        .collect();
    let derived = json!({ "points": points.len(), "errors": errors });
    w.finish(cfg, "sweep", derived, BTreeMap::new())
}

/// Exit status for a failed run: 2 for configuration problems, 1 for regime
/// violations, 3 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::RegimeViolation { .. } => 1,
        _ => 3,
    }
}
