use thiserror::Error;

/// Failure modes shared by every stage of the pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("evanescent overflow: gamma*w = {gamma_w:.3} on segment [{x_left}, {x_right}] exceeds 700")]
    EvanescentOverflow { gamma_w: f64, x_left: f64, x_right: f64 },

    #[error("regime violation: {condition} (value {value:.6e}, threshold {threshold:.6e}{})",
        .k.map(|k| format!(", at k = {k:.6}")).unwrap_or_default())]
    RegimeViolation { condition: String, value: f64, threshold: f64, k: Option<f64> },

    #[error("potential is not differentiable at the turning point x = {x}")]
    NonDifferentiablePotential { x: f64 },

    #[error("phase jump of {jump:.3} rad across the derivative stencil at k = {k}")]
    PhaseUnwrapFailure { k: f64, jump: f64 },

    #[error("transmission amplitude {abs_t:e} at k = {k} is below the 1e-300 cutoff")]
    ZeroTransmission { k: f64, abs_t: f64 },

    #[error("resonant denominator |1 + f exp(-2ikL)| = {value:e} at k = {k}")]
    ResonantDenominator { k: f64, value: f64 },

    #[error("time grid too coarse: phase step {phase:.4} exceeds pi/4")]
    GridTooCoarse { phase: f64 },

    #[error("density has a secondary maximum at {ratio:.3} of the global peak")]
    MultiPeak { ratio: f64 },

    #[error("degenerate jacobian |F'(k)| = {derivative:e} at k = {k}")]
    DegenerateJacobian { k: f64, derivative: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
