//! Batch sweep over the barrier width, as the `toa sweep` subcommand runs it.
//!
//! cargo run --example sweep

use tunnel_toa::config::ExperimentConfig;
use tunnel_toa::run::{run_sweep, RunOptions};

fn main() -> tunnel_toa::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/hartman_sweep.toml");
    let cfg = ExperimentConfig::load(path.as_ref())?;
    let out = std::env::temp_dir().join("toa-hartman-sweep");
    run_sweep(&cfg, &out, RunOptions::default())?;
    print!("{}", std::fs::read_to_string(out.join("aggregate.csv"))?);
    println!("wrote {}", out.display());
    Ok(())
}
