//! `ttn`: experiment driver for the treetensor library.
//!
//! `ttn --config exp.json [--out dir] [--seed n] [--threads t]` runs the
//! experiment described by the config and writes a CSV table plus a JSON
//! summary. `ttn predict ...` prints a complexity prediction as JSON.
//!
//! Exit codes: 0 success, 2 bad configuration or I/O failure, 3 when a run
//! finished but a measured error exceeded its certified bound.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use treetensor::{predict_complexity, PredictModel, PredictParams};

use commands::{run, RunContext};
use config::load_config;
use output::{sha256_hex, RunMeta};

#[derive(Debug, Parser)]
#[command(name = "ttn", version, about = "Tree tensor network experiment driver")]
struct Cli {
    /// JSON experiment config (required unless a subcommand is given).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory for result files, created if missing.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Overrides the seed recorded in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps; rows keep their config order either way.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    sub: Option<Sub>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Prints the parameter count a model predicts for a target accuracy.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// One of: sobolev, mixed-trivial, mixed-binary, compositional-trivial,
    /// compositional-bounded-arity.
    #[arg(long)]
    model: String,
    /// Number of variables.
    #[arg(long)]
    d: usize,
    /// Smoothness order.
    #[arg(long)]
    s: usize,
    /// Target accuracy in (0, 1).
    #[arg(long)]
    eps: f64,
    /// Tree arity (bounded-arity model).
    #[arg(long)]
    arity: Option<usize>,
    /// Tree depth (bounded-arity model).
    #[arg(long)]
    depth: Option<usize>,
    /// First-derivative bound.
    #[arg(long)]
    b1: Option<f64>,
    /// Largest derivative bound.
    #[arg(long)]
    bstar: Option<f64>,
    /// Stand-in for the theory's unquantified constant.
    #[arg(long, default_value_t = 1.0)]
    prefactor: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(violations) if violations.is_empty() => ExitCode::SUCCESS,
        Ok(violations) => {
            for v in &violations {
                eprintln!("bound violation: {v}");
            }
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<Vec<String>> {
    if let Some(Sub::Predict(args)) = cli.sub {
        run_predict(&args)?;
        return Ok(Vec::new());
    }
    let path = cli
        .config
        .context("pass --config <FILE> or a subcommand; see --help")?;
    if cli.threads == 0 {
        anyhow::bail!("--threads must be >= 1");
    }
    let loaded = load_config(&path)?;
    let seed = cli.seed.unwrap_or(loaded.cfg.seed);
    let meta = RunMeta {
        command: loaded.cfg.command.as_str(),
        config_sha256: sha256_hex(&loaded.raw),
        seed,
    };
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating {}", cli.out.display()))?;
    let ctx = RunContext {
        loaded,
        meta,
        out_dir: cli.out,
        seed,
        threads: cli.threads,
    };
    let outcome = run(&ctx)?;
    println!("wrote {}", outcome.csv_path.display());
    println!("wrote {}", outcome.summary_path.display());
    Ok(outcome.violations)
}

fn run_predict(args: &PredictArgs) -> Result<()> {
    let model = PredictModel::from_str(&args.model)?;
    let params = PredictParams {
        d: args.d,
        s: args.s,
        eps: args.eps,
        arity: args.arity,
        depth: args.depth,
        b1: args.b1,
        bstar: args.bstar,
        prefactor: args.prefactor,
    };
    let out = predict_complexity(model, &params)?;
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}
