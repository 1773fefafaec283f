//! Experiment configuration (TOML), shared by every subcommand.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arrival::{ClosedFormLevel, RegimePolicy, WeightKind};
use crate::error::{Error, Result};
use crate::model::{GaussianState, InitialState, PhysParams, Potential, Segment};
use crate::quad;

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    pub state: Option<StateConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub method: MethodConfig,
    pub sequential: Option<SequentialConfig>,
    pub oracle: Option<OracleConfig>,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    pub display: Option<DisplayConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "ten")]
    pub detector: f64,
}

fn one() -> f64 {
    1.0
}

fn ten() -> f64 {
    10.0
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self { mass: 1.0, detector: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    #[default]
    Free,
    Square {
        v0: f64,
        d: f64,
    },
    Delta {
        kappa: f64,
    },
    /// `[x_left, x_right, v]` triples.
    Piecewise {
        segments: Vec<[f64; 3]>,
    },
    /// `[x, v]` samples, interpolated monotonically.
    Sampled {
        points: Vec<[f64; 2]>,
    },
}

impl PotentialConfig {
    pub fn build(&self) -> Result<Potential> {
        match self {
            Self::Free => Ok(Potential::Free),
            Self::Square { v0, d } => Potential::square(*v0, *d),
            Self::Delta { kappa } => Potential::delta(*kappa),
            Self::Piecewise { segments } => Potential::piecewise(
                segments.iter().map(|s| Segment { x_left: s[0], x_right: s[1], v: s[2] }).collect(),
            ),
            Self::Sampled { points } => {
                let pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
                Potential::sampled(&pts)
            }
        }
    }

    /// Parses `free`, `square:V0=2,d=1` or `delta:kappa=1`.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut v0 = None;
        let mut d = None;
        let mut kappa = None;
        for kv in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value in potential spec, got '{kv}'")))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Config(format!("bad number '{v}' in potential spec")))?;
            match k.trim().to_ascii_lowercase().as_str() {
                "v0" => v0 = Some(v),
                "d" => d = Some(v),
                "kappa" => kappa = Some(v),
                other => return Err(Error::Config(format!("unknown potential parameter '{other}'"))),
            }
        }
        let need =
            |x: Option<f64>, name: &str| x.ok_or_else(|| Error::Config(format!("potential '{kind}' needs {name}")));
        match kind.trim() {
            "free" => Ok(Self::Free),
            "square" => Ok(Self::Square { v0: need(v0, "V0")?, d: need(d, "d")? }),
            "delta" => Ok(Self::Delta { kappa: need(kappa, "kappa")? }),
            other => Err(Error::Config(format!("unknown potential kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub x0: f64,
    pub k0: f64,
    pub sigma: Option<f64>,
    pub delta: Option<f64>,
    /// Further Gaussians added coherently to the first.
    #[serde(default)]
    pub extra: Vec<TermConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub x0: f64,
    pub k0: f64,
    pub sigma: f64,
    #[serde(default = "one")]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl StateConfig {
    pub fn gaussian(&self) -> Result<GaussianState> {
        match (self.sigma, self.delta) {
            (Some(s), None) => GaussianState::from_sigma(self.x0, self.k0, s),
            (None, Some(d)) => GaussianState::new(self.x0, self.k0, d),
            (Some(s), Some(d)) => GaussianState::with_spreads(self.x0, self.k0, d, s),
            (None, None) => Err(Error::Config("state needs sigma or delta".into())),
        }
    }

    pub fn build(&self) -> Result<InitialState> {
        let g = self.gaussian()?;
        if self.extra.is_empty() {
            return Ok(InitialState::gaussian(g));
        }
        let mut terms = vec![(Complex64::new(1.0, 0.0), g)];
        for t in &self.extra {
            terms.push((Complex64::new(t.re, t.im), GaussianState::from_sigma(t.x0, t.k0, t.sigma)?));
        }
        InitialState::superposition(terms)
    }
}

/// `start:stop:n`, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub start: f64,
    pub stop: f64,
    pub n: usize,
}

impl RangeConfig {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("expected start:stop:n, got '{s}'"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let start = parts[0].trim().parse().map_err(|_| bad())?;
        let stop = parts[1].trim().parse().map_err(|_| bad())?;
        let n = parts[2].trim().parse().map_err(|_| bad())?;
        Self { start, stop, n }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.n < 2 || !(self.stop > self.start) {
            return Err(Error::Config(format!(
                "range needs stop > start and n >= 2 (got {}:{}:{})",
                self.start, self.stop, self.n
            )));
        }
        Ok(self)
    }

    pub fn points(&self) -> Vec<f64> {
        quad::linspace(self.start, self.stop, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub k: Option<RangeConfig>,
    pub t: Option<RangeConfig>,
    pub t_d: Option<RangeConfig>,
    #[serde(default = "default_nodes")]
    pub k_nodes: usize,
}

fn default_nodes() -> usize {
    crate::arrival::DEFAULT_K_NODES
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { k: None, t: None, t_d: None, k_nodes: default_nodes() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalMethod {
    #[default]
    Exact,
    Smeared,
    Monochromatic,
    P1,
    P2,
    P3,
}

impl ArrivalMethod {
    pub fn level(self) -> Option<ClosedFormLevel> {
        match self {
            Self::P1 => Some(ClosedFormLevel::P1),
            Self::P2 => Some(ClosedFormLevel::P2),
            Self::P3 => Some(ClosedFormLevel::P3),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    #[serde(default)]
    pub arrival: ArrivalMethod,
    pub tau: Option<f64>,
    #[serde(default)]
    pub weight: WeightKind,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SequentialConfig {
    /// Coherent-state momentum width of the phase-space measurement.
    pub sigma: f64,
    #[serde(default)]
    pub policy: RegimePolicy,
    #[serde(default = "yes")]
    pub ideal: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub dx: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Smearing width for the oracle density; defaults to `25 / eps`.
    pub tau: Option<f64>,
    #[serde(default = "yes")]
    pub convergence_gate: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub pipeline: Pipeline,
    pub axis: Vec<AxisConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Scatter,
    Arrival,
    Times,
    Sequential,
}

/// One swept configuration key, given as explicit values or a range.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    /// Dotted key, e.g. `potential.d` or `state.sigma`.
    pub path: String,
    pub values: Option<Vec<f64>>,
    pub range: Option<RangeConfig>,
}

impl AxisConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        match (&self.values, &self.range) {
            (Some(v), None) if !v.is_empty() => Ok(v.clone()),
            (None, Some(r)) => Ok(r.validated()?.points()),
            _ => Err(Error::Config(format!("axis '{}' needs exactly one of values or range", self.path))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
}

fn default_dir() -> String {
    "toa-out".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

/// Scale factors applied to CSV columns only: `t * time`, `p / time`, `x * length`.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DisplayConfig {
    #[serde(default = "one")]
    pub time: f64,
    #[serde(default = "one")]
    pub length: f64,
    pub time_unit: Option<String>,
    pub length_unit: Option<String>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn params(&self, potential: &Potential) -> Result<PhysParams> {
        PhysParams::new(self.physics.mass, self.physics.detector, potential)
    }

    pub fn state(&self) -> Result<&StateConfig> {
        self.state.as_ref().ok_or_else(|| Error::Config("this pipeline needs a [state] table".into()))
    }

    /// Copy with the dotted key `path` set to `value`.
    pub fn with_value(&self, path: &str, value: f64) -> Result<Self> {
        let mut doc = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        let keys: Vec<&str> = path.split('.').collect();
        let (last, parents) = keys.split_last().ok_or_else(|| Error::Config("empty sweep key".into()))?;
        let mut table = doc.as_table_mut().ok_or_else(|| Error::Config("configuration is not a table".into()))?;
        for key in parents {
            table = table
                .get_mut(*key)
                .and_then(|v| v.as_table_mut())
                .ok_or_else(|| Error::Config(format!("unknown sweep key '{path}'")))?;
        }
        if !table.contains_key(*last) && !matches!(*last, "sigma" | "delta" | "tau") {
            return Err(Error::Config(format!("unknown sweep key '{path}'")));
        }
        table.insert((*last).to_string(), toml::Value::Float(value));
        let cfg: Self = doc.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Ok(cfg)
    }
}
