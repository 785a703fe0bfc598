use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use waveguide::{commands, config, RunError};

/// Scattering, design and eigenvalue runs for sound-hard waveguides with thin chimneys.
#[derive(Debug, Parser)]
#[command(name = "waveguide", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` from the config; default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value` with a dotted key, e.g. `spec.k_over_pi=0.6`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads for sweeps and comparisons.
    #[arg(long)]
    threads: Option<usize>,
}

fn execute(cli: &Cli) -> anyhow::Result<Vec<PathBuf>> {
    let cfg = config::load(&cli.config, &cli.overrides).map_err(|e| RunError::Config(e.to_string()))?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Config(format!("thread pool: {e}")))?;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let files = commands::run(&cfg, &out).with_context(|| format!("{:?} run", cfg.command))?;
    Ok(files)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let line = match err.downcast_ref::<RunError>() {
                Some(e) => e.machine_line(),
                None => format!("kind=internal code=1 reason=\"{err:#}\""),
            };
            eprintln!("error: {line}");
            let code = err.downcast_ref::<RunError>().map_or(1, RunError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
