//! `hetnet`: analysis, simulation, sweeps and bias optimisation for
//! multi-RAT heterogeneous networks.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 I/O error.

// `!(x > 0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod config;
mod output;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Parser;

use crate::args::{strip_out, Cli, Command};
use crate::config::{parse_config, read_config_text, to_network, ConfigError, Format};
use crate::output::{write_dir, RunManifest};

/// Bad command-line input that clap's own parsing cannot catch.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_INVALID: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_IO: u8 = 3;

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(c) = cause.downcast_ref::<ConfigError>() {
            return if matches!(c, ConfigError::Io(..)) { EXIT_IO } else { EXIT_INVALID };
        }
        if let Some(c) = cause.downcast_ref::<hetnet_core::Error>() {
            return if c.is_numeric() { EXIT_NUMERIC } else { EXIT_INVALID };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
    }
    EXIT_INVALID
}

/// The config of a run: where it came from and its verbatim text.
struct ConfigSource {
    path: PathBuf,
    text: String,
}

fn execute(command: Command, source: Option<ConfigSource>, out: Option<PathBuf>, argv: Vec<String>) -> Result<()> {
    let Some(common) = command.common() else { bail!(UsageError("replay cannot be nested".into())) };
    let source = match source {
        Some(s) => s,
        None => ConfigSource { path: common.config.clone(), text: read_config_text(&common.config)? },
    };
    let config = to_network(&parse_config(&source.text, Format::of(&source.path))?)?;

    let start = Instant::now();
    let artifacts = commands::run(&command, &config)?;
    let wall_clock_s = start.elapsed().as_secs_f64();
    for note in &artifacts.notes {
        eprintln!("{note}");
    }
    match out {
        Some(dir) => {
            let manifest = RunManifest {
                tool_version: env!("CARGO_PKG_VERSION").into(),
                command: command.name().into(),
                argv,
                config_path: source.path,
                config_text: source.text,
                resolved: artifacts.resolved.clone(),
                seed: artifacts.seed,
                wall_clock_s,
                outputs: artifacts.files.iter().map(|f| f.name.clone()).collect(),
            };
            write_dir(&dir, &artifacts, &manifest).with_context(|| format!("writing {}", dir.display()))?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(artifacts.files[0].contents.as_bytes()).context("writing stdout")?;
            stdout.flush().context("writing stdout")?;
        }
    }
    Ok(())
}

fn replay(manifest_path: &Path, out: Option<PathBuf>) -> Result<()> {
    let manifest =
        RunManifest::read(manifest_path).with_context(|| format!("reading manifest {}", manifest_path.display()))?;
    let full = std::iter::once("hetnet".to_owned()).chain(manifest.argv.iter().cloned());
    let cli = Cli::try_parse_from(full).map_err(|e| UsageError(format!("manifest arguments: {e}")))?;
    let source = ConfigSource { path: manifest.config_path, text: manifest.config_text };
    execute(cli.command, Some(source), out, manifest.argv)
}

fn run(cli: Cli, argv: &[String]) -> Result<()> {
    match cli.command {
        Command::Replay(r) => replay(&r.manifest, r.out),
        command => {
            let out = command.common().and_then(|c| c.out.clone());
            execute(command, None, out, strip_out(argv))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, &argv[1..]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
