use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use qwalk_cli::{run, CliError, ExperimentConfig, OutputFormat, EXIT_FAIL, EXIT_INVALID, EXIT_PASS};

/// Run a quantum-walk experiment described by a TOML config.
///
/// Exit status: 0 when every configured threshold is met, 1 when a
/// criterion fails, 2 on invalid input.
#[derive(Debug, Parser)]
#[command(name = "qwalk", version)]
struct Args {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of replicas.
    #[arg(long)]
    replicas: Option<u64>,
    /// Output file; stdout when neither this nor the config sets one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format (csv or json).
    #[arg(long)]
    format: Option<String>,
}

fn resolve(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.replicas {
        cfg.replicas = Some(r);
    }
    if let Some(out) = &args.out {
        cfg.output_path = Some(out.clone());
    }
    if let Some(f) = &args.format {
        cfg.output_format = Some(f.parse::<OutputFormat>()?);
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = resolve(&args).and_then(|cfg| run(&cfg).map(|o| (cfg, o)));
    match outcome {
        Ok((cfg, o)) => {
            let status = if o.verdict.pass { "pass" } else { "FAIL" };
            eprintln!("{}: {status} {}", cfg.command, o.verdict.details);
            ExitCode::from(if o.verdict.pass { EXIT_PASS } else { EXIT_FAIL })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
