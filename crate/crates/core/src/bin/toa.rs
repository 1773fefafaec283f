//! Command-line front end for the arrival-time pipelines.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tunnel_toa::config::{
    ArrivalMethod, ExperimentConfig, PotentialConfig, RangeConfig, SequentialConfig, StateConfig,
};
use tunnel_toa::run::{self, RunOptions};
use tunnel_toa::{Error, Result};

#[derive(Parser)]
#[command(name = "toa", version, about = "Arrival-time densities and tunnelling times in one dimension")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transmission and reflection on a k grid.
    Scatter(Common),
    /// Arrival-time density at the detector.
    Arrival(Common),
    /// Phase time, delay and the uncertainty verdict at k0.
    Times(Common),
    /// Sequential delay and tunnelling-time distributions.
    Sequential(Common),
    /// Grid oracle against the spectral arrival density.
    OracleCompare {
        /// free-gaussian, square-barrier or delta-barrier.
        #[arg(long)]
        case: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the pipeline named in [sweep] over up to three axes.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: output.dir from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report failed regime conditions instead of stopping.
    #[arg(long)]
    force: bool,
    /// e.g. free, square:V0=2,d=1 or delta:kappa=1.
    #[arg(long)]
    potential: Option<String>,
    /// Wavenumber grid start:stop:n.
    #[arg(long)]
    k: Option<String>,
    /// Time grid start:stop:n.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    #[arg(long = "M")]
    mass: Option<f64>,
    /// Detector position.
    #[arg(long = "L", allow_hyphen_values = true)]
    detector: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    #[arg(long)]
    k0: Option<f64>,
    /// Momentum width of the initial state.
    #[arg(long)]
    sigma: Option<f64>,
    /// exact, smeared, monochromatic, p1, p2 or p3.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    /// Coherent-state width of the sequential measurement.
    #[arg(long)]
    seq_sigma: Option<f64>,
}

fn parse_method(s: &str) -> Result<ArrivalMethod> {
    Ok(match s {
        "exact" => ArrivalMethod::Exact,
        "smeared" => ArrivalMethod::Smeared,
        "monochromatic" => ArrivalMethod::Monochromatic,
        "p1" => ArrivalMethod::P1,
        "p2" => ArrivalMethod::P2,
        "p3" => ArrivalMethod::P3,
        other => return Err(Error::Config(format!("unknown method '{other}'"))),
    })
}

impl Common {
    fn build(&self, base: Option<ExperimentConfig>) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, base) {
            (Some(p), _) => ExperimentConfig::load(p)?,
            (None, Some(b)) => b,
            (None, None) => ExperimentConfig::default(),
        };
        if let Some(p) = &self.potential {
            cfg.potential = PotentialConfig::parse(p)?;
        }
        if let Some(k) = &self.k {
            cfg.grid.k = Some(RangeConfig::parse(k)?);
        }
        if let Some(t) = &self.t {
            cfg.grid.t = Some(RangeConfig::parse(t)?);
        }
        if let Some(m) = self.mass {
            cfg.physics.mass = m;
        }
        if let Some(l) = self.detector {
            cfg.physics.detector = l;
        }
        if self.x0.is_some() || self.sigma.is_some() || (self.k0.is_some() && cfg.state.is_some()) {
            let mut s = cfg.state.clone().unwrap_or(StateConfig {
                x0: f64::NAN,
                k0: f64::NAN,
                sigma: None,
                delta: None,
                extra: Vec::new(),
            });
            if let Some(x0) = self.x0 {
                s.x0 = x0;
            }
            if let Some(k0) = self.k0 {
                s.k0 = k0;
            }
            if let Some(sigma) = self.sigma {
                s.sigma = Some(sigma);
                s.delta = None;
            }
            if !s.x0.is_finite() || !s.k0.is_finite() {
                return Err(Error::Config("a state needs both --x0 and --k0".into()));
            }
            cfg.state = Some(s);
        }
        if let Some(m) = &self.method {
            cfg.method.arrival = parse_method(m)?;
        }
        if let Some(tau) = self.tau {
            cfg.method.tau = Some(tau);
        }
        if let Some(sigma) = self.seq_sigma {
            match cfg.sequential.as_mut() {
                Some(s) => s.sigma = sigma,
                None => cfg.sequential = Some(SequentialConfig { sigma, policy: Default::default(), ideal: true }),
            }
        }
        Ok(cfg)
    }

    fn options(&self, cfg: &ExperimentConfig) -> RunOptions {
        RunOptions { force: self.force, k0: if cfg.state.is_none() { self.k0 } else { None } }
    }

    fn out(&self, cfg: &ExperimentConfig) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
    }
}

fn dispatch(cli: Cli) -> Result<run::RunOutput> {
    match cli.command {
        Command::Scatter(c) => {
            let cfg = c.build(None)?;
            run::run_scatter(&cfg, &c.out(&cfg))
        }
        Command::Arrival(c) => {
            let cfg = c.build(None)?;
            run::run_arrival(&cfg, &c.out(&cfg), c.options(&cfg))
        }
        Command::Times(c) => {
            let cfg = c.build(None)?;
            run::run_times(&cfg, &c.out(&cfg), c.options(&cfg))
        }
        Command::Sequential(c) => {
            let cfg = c.build(None)?;
            run::run_sequential(&cfg, &c.out(&cfg), c.options(&cfg))
        }
        Command::OracleCompare { case, common } => {
            let base = case.as_deref().map(run::oracle_case).transpose()?;
            if base.is_none() && common.config.is_none() {
                return Err(Error::Config("oracle-compare needs --case or --config".into()));
            }
            let cfg = common.build(base)?;
            run::run_oracle_compare(&cfg, &common.out(&cfg))
        }
        Command::Sweep(c) => {
            let cfg = c.build(None)?;
            run::run_sweep(&cfg, &c.out(&cfg), c.options(&cfg))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(out) => {
            println!("{}", out.dir.display());
            for (k, v) in &out.summary {
                println!("  {k} = {v:.10e}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("toa: {e}");
            ExitCode::from(run::exit_code(&e) as u8)
        }
    }
}
