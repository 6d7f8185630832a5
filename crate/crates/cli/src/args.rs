//! Command-line grammar and its value parsers.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hetnet_core::coverage::RateMethod;
use hetnet_core::montecarlo::Deployment;
use hetnet_core::ClassId;
use serde::Serialize;

/// Largest number of points a grid argument may expand to.
const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Parser, Debug)]
#[command(name = "hetnet", version, about = "SINR and rate coverage of multi-RAT heterogeneous networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Analytic coverage curves.
    #[command(subcommand)]
    Analyze(Analyze),
    /// Monte Carlo estimate of the coverage curves.
    Simulate(SimulateArgs),
    /// Metric as a function of one class's association bias.
    #[command(subcommand)]
    Sweep(Sweep),
    /// Optimal association bias of a two-RAT network.
    #[command(subcommand)]
    Optimize(Optimize),
    /// Analytic against simulated coverage curves.
    Compare(CompareArgs),
    /// Rerun the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Analyze {
    /// SINR coverage over a threshold grid in dB.
    Sinr(AnalyzeSinrArgs),
    /// Rate coverage over a log-spaced rate grid.
    Rate(AnalyzeRateArgs),
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    Bias(SweepBiasArgs),
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimize {
    Bias(OptimizeBiasArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Network configuration, TOML or JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for CSV/JSON files and the run manifest. Without it
    /// the main table is printed to stdout.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct AnalyzeSinrArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Thresholds in dB as LO:HI:STEP.
    #[arg(long, allow_hyphen_values = true, default_value = "-10:20:1", value_parser = parse_step_grid)]
    pub tau_grid_db: Grid,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct AnalyzeRateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Rate thresholds in bit/s as LO:HI:POINTS, log-spaced.
    #[arg(long, default_value = "1e4:1e7:20", value_parser = parse_log_grid)]
    pub rho_grid: Grid,
    #[arg(long, default_value = "theorem1", value_parser = parse_method)]
    pub method: RateMethod,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimArgs {
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses all cores. Output does not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, default_value = "ppp", value_parser = parse_deployment)]
    pub deployment: Deployment,
    /// Side of the square simulation window in km.
    #[arg(long, default_value_t = 20.0)]
    pub window_km: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub sim: SimArgs,
    #[arg(long, allow_hyphen_values = true, default_value = "-20:40:1", value_parser = parse_step_grid)]
    pub tau_grid_db: Grid,
    #[arg(long, default_value = "1e3:1e9:61", value_parser = parse_log_grid)]
    pub rho_grid: Grid,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub sim: SimArgs,
    #[arg(long, allow_hyphen_values = true, default_value = "-10:20:1", value_parser = parse_step_grid)]
    pub tau_grid_db: Grid,
    #[arg(long, default_value = "1e4:1e7:20", value_parser = parse_log_grid)]
    pub rho_grid: Grid,
    #[arg(long, default_value = "theorem1", value_parser = parse_method)]
    pub method: RateMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricArg {
    /// SINR coverage at the configured thresholds.
    Sir,
    /// Rate coverage at the configured thresholds.
    Rate,
    /// Rate achieved by 95% of users.
    P95,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SweepBiasArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Class whose bias is swept, as RAT,TIER.
    #[arg(long, value_parser = parse_class)]
    pub class: ClassId,
    /// Biases in dB as LO:HI:STEP.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_step_grid)]
    pub range_db: Grid,
    #[arg(long, value_enum)]
    pub metric: MetricArg,
    /// Rate model for the rate and p95 metrics.
    #[arg(long, default_value = "theorem1", value_parser = parse_method)]
    pub method: RateMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Sir,
    Rate,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OptimizeBiasArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Search bracket in dB as LO:HI for the rate mode.
    #[arg(long, allow_hyphen_values = true, default_value = "-40:40", value_parser = parse_range)]
    pub range_db: (f64, f64),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    /// Name as typed on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze(Analyze::Sinr(_)) => "analyze sinr",
            Command::Analyze(Analyze::Rate(_)) => "analyze rate",
            Command::Simulate(_) => "simulate",
            Command::Sweep(Sweep::Bias(_)) => "sweep bias",
            Command::Optimize(Optimize::Bias(_)) => "optimize bias",
            Command::Compare(_) => "compare",
            Command::Replay(_) => "replay",
        }
    }

    pub fn common(&self) -> Option<&Common> {
        match self {
            Command::Analyze(Analyze::Sinr(a)) => Some(&a.common),
            Command::Analyze(Analyze::Rate(a)) => Some(&a.common),
            Command::Simulate(a) => Some(&a.common),
            Command::Sweep(Sweep::Bias(a)) => Some(&a.common),
            Command::Optimize(Optimize::Bias(a)) => Some(&a.common),
            Command::Compare(a) => Some(&a.common),
            Command::Replay(_) => None,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Simulate(a) => Some(a.sim.seed),
            Command::Compare(a) => Some(a.sim.seed),
            _ => None,
        }
    }
}

/// An expanded grid argument.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Grid(pub Vec<f64>);

fn numbers<const N: usize>(s: &str, shape: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != N {
        return Err(format!("expected {shape}, got '{s}'"));
    }
    let mut out = [0.0f64; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|_| format!("'{p}' is not a number"))?;
        if !o.is_finite() {
            return Err(format!("'{p}' is not finite"));
        }
    }
    Ok(out)
}

/// `LO:HI:STEP`, inclusive of `HI` when it lies on the lattice.
pub fn parse_step_grid(s: &str) -> Result<Grid, String> {
    let [lo, hi, step] = numbers::<3>(s, "LO:HI:STEP")?;
    if !(step > 0.0) || hi < lo {
        return Err("need STEP > 0 and HI >= LO".into());
    }
    let n = ((hi - lo) / step + 1e-9).floor();
    if n >= MAX_GRID_POINTS as f64 {
        return Err(format!("grid would exceed {MAX_GRID_POINTS} points"));
    }
    Ok(Grid((0..=n as usize).map(|i| lo + i as f64 * step).collect()))
}

/// `LO:HI:POINTS`, geometric spacing.
pub fn parse_log_grid(s: &str) -> Result<Grid, String> {
    let [lo, hi, points] = numbers::<3>(s, "LO:HI:POINTS")?;
    if !(lo > 0.0) || hi < lo {
        return Err("need 0 < LO <= HI".into());
    }
    if points.fract() != 0.0 || points < 1.0 || points > MAX_GRID_POINTS as f64 {
        return Err(format!("POINTS must be an integer in 1..={MAX_GRID_POINTS}"));
    }
    let n = points as usize;
    if n == 1 {
        return if lo == hi { Ok(Grid(vec![lo])) } else { Err("a single point needs LO = HI".into()) };
    }
    let ratio = (hi / lo).ln();
    Ok(Grid((0..n).map(|i| lo * (ratio * i as f64 / (n - 1) as f64).exp()).collect()))
}

/// `LO:HI`.
pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let [lo, hi] = numbers::<2>(s, "LO:HI")?;
    if hi <= lo {
        return Err("need HI > LO".into());
    }
    Ok((lo, hi))
}

/// `RAT,TIER` for an open class, `RAT,TIER'` for a closed one.
pub fn parse_class(s: &str) -> Result<ClassId, String> {
    let (body, closed) = match s.trim().strip_suffix('\'') {
        Some(b) => (b, true),
        None => (s.trim(), false),
    };
    let (rat, tier) = body.split_once(',').ok_or_else(|| format!("expected RAT,TIER, got '{s}'"))?;
    let rat: u32 = rat.trim().parse().map_err(|_| format!("bad RAT index '{rat}'"))?;
    let tier: u32 = tier.trim().parse().map_err(|_| format!("bad tier index '{tier}'"))?;
    Ok(if closed { ClassId::closed(rat, tier) } else { ClassId::open(rat, tier) })
}

fn parse_method(s: &str) -> Result<RateMethod, String> {
    s.parse().map_err(|e: hetnet_core::Error| e.to_string())
}

fn parse_deployment(s: &str) -> Result<Deployment, String> {
    s.parse().map_err(|e: hetnet_core::Error| e.to_string())
}

/// Drops `--out DIR` and `--out=DIR` so the remaining arguments can be
/// replayed into another directory.
pub fn strip_out(argv: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(argv.len());
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}
