use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use mergelab::runner;
use mergelab::scenario::{self, Mode, ScenarioConfig};

/// Simulation lab for traffic flow on a 2:1 merge junction: a
/// follow-the-leader vehicle model with a periodic light, finite-volume
/// solvers for the network conservation law with switching or homogenized
/// junction couplings, and the comparison experiments between them.
#[derive(Parser, Debug)]
#[command(name = "mergelab", version)]
struct Args {
    /// Path to a scenario JSON document.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Name of a bundled scenario (see --preset help for the list).
    #[arg(long, help = preset_help())]
    preset: Option<String>,

    /// Run mode, overriding the scenario's own: micro | meso | homog |
    /// compare | germ-check | germ-brute | tv-check | entropy-check.
    #[arg(long)]
    mode: Option<String>,

    /// Output directory for CSV and JSON artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Seed override for any randomized sampling.
    #[arg(long)]
    seed: Option<u64>,

    /// Treat recorded invariant violations as fatal.
    #[arg(long)]
    strict: bool,
}

fn preset_help() -> String {
    format!("Bundled scenario: one of {}", scenario::preset_names().join(", "))
}

fn load_config(args: &Args) -> Result<ScenarioConfig, String> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            ScenarioConfig::from_json(&text).map_err(|e| e.to_string())?
        }
        (None, Some(name)) => scenario::preset(name).map_err(|e| e.to_string())?,
        _ => return Err("give exactly one of --config or --preset".into()),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match load_config(&args) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let mode = match args.mode.as_deref().map(Mode::parse).transpose() {
        Ok(mode) => mode,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match runner::run(&cfg, mode, &args.out, args.strict) {
        Ok(artifacts) => {
            for f in &artifacts.files {
                println!("wrote {}", f.display());
            }
            if artifacts.passed {
                println!("ok: all enabled checks passed");
                ExitCode::SUCCESS
            } else {
                for f in &artifacts.failures {
                    eprintln!("check failed: {f}");
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
