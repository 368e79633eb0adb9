mod commands;
mod config;
mod json;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{Mode, NSpec, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "loggas", version, about = "Beta log-gas equilibrium, fluctuation and partition-function toolkit")]
struct Cli {
    #[arg(value_enum)]
    mode: Mode,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Particle number or inclusive range `a..b`.
    #[arg(long, value_parser = NSpec::parse)]
    n: Option<NSpec>,
    #[arg(long)]
    beta: Option<f64>,
    /// Truncation and contour tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

/// Exit status for usage and configuration problems.
const EXIT_USAGE: u8 = 1;

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(m) = cfg.mode {
        if m != cli.mode {
            return Err(format!("config mode {m:?} conflicts with subcommand {:?}", cli.mode));
        }
    }
    cfg.mode = Some(cli.mode);
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.n.is_some() {
        cfg.n = cli.n;
    }
    if cli.beta.is_some() {
        cfg.beta = cli.beta;
    }
    if cli.tol.is_some() {
        cfg.tol = cli.tol;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match commands::run(&cfg) {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
