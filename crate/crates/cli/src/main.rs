//! `povm-forge <command> --config <path> --out <dir> [--seed <u64>]`
//!
//! Every successful run writes its payload files plus `manifest.json`
//! (inputs, versions, checksums, results). A failed run writes
//! `error.json` instead and exits with 1 (invalid input), 2 (numerical
//! failure) or 3 (physically impossible request).

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::Value;

use crate::config::RawConfig;
use crate::error::CliError;
use crate::manifest::{sha256_hex, write_error, write_manifest, Inputs, Outputs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Retrodicted amplitude and coupling curves for polynomial drives.
    Forward,
    /// Drive for a Gaussian or Hermite-Gaussian target.
    Invert,
    /// Entropic time and frequency widths.
    Uncertainty,
    /// Click-weight tables and mode matching behind a filter.
    Povm,
    /// Efficiency under Gaussian timing jitter.
    Jitter,
    /// Two-source discrimination: probabilities and sampled estimate.
    Superres,
    /// Fast invariant suite.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Forward => "forward",
            Command::Invert => "invert",
            Command::Uncertainty => "uncertainty",
            Command::Povm => "povm",
            Command::Jitter => "jitter",
            Command::Superres => "superres",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "povm-forge",
    version,
    about = "Single-photon detector POVM toolkit"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration for the command (not used by selftest).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Seed for sampled results; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, env = "POVM_FORGE_THREADS")]
    threads: Option<usize>,
}

fn execute(cli: &Cli, raw: Option<&RawConfig>, out: &mut Outputs) -> Result<Value, CliError> {
    let need = || {
        raw.ok_or_else(|| CliError::Usage(format!("`{}` requires --config", cli.command.name())))
    };
    match cli.command {
        Command::Forward => commands::forward(&need()?.parse()?, out),
        Command::Invert => commands::invert(&need()?.parse()?, out),
        Command::Uncertainty => commands::uncertainty(&need()?.parse()?, out),
        Command::Povm => commands::povm(&need()?.parse()?, out),
        Command::Jitter => commands::jitter(&need()?.parse()?, out),
        Command::Superres => {
            let cfg: config::SuperresConfig = need()?.parse()?;
            let seed = cli.seed.or(cfg.seed).unwrap_or(0);
            commands::superres(&cfg, seed, out)
        }
        Command::Selftest => {
            if raw.is_some() {
                return Err(CliError::Usage("selftest takes no --config".into()));
            }
            commands::selftest(out)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let raw = cli.config.as_deref().map(RawConfig::load).transpose()?;
    let mut out = Outputs::create(&cli.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let results = pool.install(|| execute(cli, raw.as_ref(), &mut out))?;
    let inputs = Inputs {
        config_path: raw.as_ref().map(|r| r.path.clone()),
        config_sha256: raw.as_ref().map(|r| sha256_hex(r.text.as_bytes())),
        config: raw.map(|r| r.value).unwrap_or(Value::Null),
        seed: cli.seed,
        threads: cli.threads,
    };
    write_manifest(&out, cli.command.name(), &inputs, &results)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if cli.threads == Some(0) {
        eprintln!("povm-forge: POVM_FORGE_THREADS must be a positive integer");
        return ExitCode::from(1);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("povm-forge {}: {err}", cli.command.name());
            if let Err(record) = write_error(&cli.out, cli.command.name(), &err) {
                eprintln!("povm-forge: could not write error record: {record}");
            }
            ExitCode::from(err.exit_code())
        }
    }
}
