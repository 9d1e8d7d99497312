use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use framecert_cli::{parse_config, run, CliError, Command, Format, Overrides, RunConfig};

/// Certified Bessel/frame bound checks for measure pairs.
#[derive(Parser, Debug)]
#[command(name = "framecert", version)]
struct Cli {
    /// Command to run; may instead be given as `command` in the config.
    #[arg(value_enum)]
    command: Option<Command>,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline JSON configuration, used instead of --config.
    #[arg(long, conflicts_with = "config")]
    inline: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Lattice frame measures keep the atoms with |n| ≤ T.
    #[arg(long = "trunc-T")]
    trunc_t: Option<u32>,
    #[arg(long)]
    ifs_depth: Option<u32>,
    #[arg(long)]
    error_budget: Option<f64>,
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let text = match (&cli.config, &cli.inline) {
        (Some(p), _) => std::fs::read_to_string(p).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        })?,
        (None, Some(t)) => t.clone(),
        (None, None) => "{}".to_string(),
    };
    let mut cfg: RunConfig = parse_config(&text)?;
    Overrides {
        command: cli.command,
        seed: cli.seed,
        format: cli.format,
        out: cli.out.map(|p| p.display().to_string()),
        trunc_t: cli.trunc_t,
        ifs_depth: cli.ifs_depth,
        error_budget: cli.error_budget,
    }
    .apply(&mut cfg)?;
    let outcome = run(&cfg)?;
    match &cfg.output.path {
        Some(p) => std::fs::write(p, &outcome.artifact).map_err(|source| CliError::Io {
            path: p.clone(),
            source,
        })?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(outcome.artifact.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })?;
        }
    }
    Ok(outcome.status)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("framecert: {e}");
            ExitCode::from(1)
        }
    }
}
