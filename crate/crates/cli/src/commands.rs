//! Subcommand bodies. Each returns its files; writing them is the caller's job.

use anyhow::{bail, Result};
use hetnet_core::model::db_to_linear;
use hetnet_core::montecarlo::{run_batch, SimSettings};
use hetnet_core::offload::{bias_sweep, optimal_bias_rate, optimal_bias_sir, SweepMetric};
use hetnet_core::{Analyzer, CcdfCurve, NetworkConfig, TwoRatScenario};
use serde_json::{json, Map, Value};

use crate::args::{
    Analyze, AnalyzeRateArgs, AnalyzeSinrArgs, Command, CompareArgs, MetricArg, ModeArg, Optimize, OptimizeBiasArgs,
    SimArgs, SimulateArgs, Sweep, SweepBiasArgs,
};
use crate::output::{class_tag, fmt_num, json_text, Artifacts, Table};

pub fn run(command: &Command, config: &NetworkConfig) -> Result<Artifacts> {
    let mut artifacts = match command {
        Command::Analyze(Analyze::Sinr(a)) => analyze_sinr(a, config)?,
        Command::Analyze(Analyze::Rate(a)) => analyze_rate(a, config)?,
        Command::Simulate(a) => simulate(a, config)?,
        Command::Sweep(Sweep::Bias(a)) => sweep_bias(a, config)?,
        Command::Optimize(Optimize::Bias(a)) => optimize_bias(a, config)?,
        Command::Compare(a) => compare(a, config)?,
        Command::Replay(_) => bail!("replay cannot be nested"),
    };
    artifacts.resolved = json!({
        "command": command.name(),
        "options": command,
        "network": canonical_config(config),
    });
    artifacts.seed = command.seed();
    Ok(artifacts)
}

/// The configuration in canonical units, as recorded in manifests.
pub fn canonical_config(config: &NetworkConfig) -> Value {
    let classes: Vec<Value> = config
        .classes
        .iter()
        .map(|c| {
            json!({
                "class": c.id.to_string(),
                "density_per_km2": c.density,
                "power_w": c.power,
                "bias_linear": c.bias,
                "alpha": c.exponent,
                "bandwidth_hz": c.bandwidth,
                "sinr_threshold_linear": config.sinr_threshold.get(&c.id),
                "rate_threshold_bps": config.rate_threshold.get(&c.id),
            })
        })
        .collect();
    let noise: Map<String, Value> = config.noise_power.iter().map(|(r, w)| (r.to_string(), json!(w))).collect();
    json!({ "users_per_km2": config.user_density, "noise_w_per_rat": noise, "classes": classes })
}

/// Threshold column, overall coverage, then one column per serving class.
fn curve_table(first: &str, shown: &[f64], curve: &CcdfCurve) -> Table {
    let mut header = vec![first.to_owned(), "coverage".to_owned()];
    header.extend(curve.per_class.keys().map(|id| format!("coverage_given_{}", class_tag(*id))));
    let mut table = Table::new(header);
    for (g, x) in shown.iter().enumerate() {
        let mut row = vec![*x, curve.values[g]];
        row.extend(curve.per_class.values().map(|v| v[g]));
        table.push_numbers(&row);
    }
    table
}

fn analyze_sinr(a: &AnalyzeSinrArgs, config: &NetworkConfig) -> Result<Artifacts> {
    let taus: Vec<f64> = a.tau_grid_db.0.iter().map(|db| db_to_linear(*db)).collect();
    let curve = Analyzer::new(config)?.sinr_ccdf(&taus)?;
    let mut out = Artifacts::default();
    out.add("sinr_coverage.csv", curve_table("tau_db", &a.tau_grid_db.0, &curve).to_csv());
    Ok(out)
}

fn analyze_rate(a: &AnalyzeRateArgs, config: &NetworkConfig) -> Result<Artifacts> {
    let curve = Analyzer::new(config)?.rate_ccdf(&a.rho_grid.0, a.method)?;
    let mut out = Artifacts::default();
    out.add("rate_coverage.csv", curve_table("rho_bps", &a.rho_grid.0, &curve).to_csv());
    Ok(out)
}

fn sim_settings(s: &SimArgs, config: &NetworkConfig) -> Result<SimSettings> {
    if s.trials == 0 {
        bail!(crate::UsageError("--trials must be positive".into()));
    }
    if !(s.window_km > 0.0 && s.window_km.is_finite()) {
        bail!(crate::UsageError("--window-km must be positive".into()));
    }
    let mut settings = SimSettings::new(s.trials, s.seed).with_deployment(config, s.deployment);
    settings.parallel_workers = s.workers;
    settings.window_km = s.window_km;
    Ok(settings)
}

fn summary_json(summary: &hetnet_core::montecarlo::EmpiricalSummary) -> Value {
    let by_class = |f: &dyn Fn(&hetnet_core::ClassId) -> Option<Value>| -> Map<String, Value> {
        summary.association_freq.keys().filter_map(|id| Some((id.to_string(), f(id)?))).collect()
    };
    let mean_load = by_class(&|id| {
        let h = summary.load_histogram.get(id)?;
        let total: u64 = h.iter().sum();
        let s: u64 = h.iter().enumerate().map(|(n, c)| n as u64 * c).sum();
        Some(json!(1.0 + s as f64 / total.max(1) as f64))
    });
    json!({
        "trial_count": summary.trial_count,
        "empty_trials": summary.empty_trials,
        "far_serving_trials": summary.far_serving_trials,
        "association_freq": by_class(&|id| summary.association_freq.get(id).map(|v| json!(v))),
        "mean_cell_area_km2": by_class(&|id| summary.mean_cell_area.get(id).map(|v| json!(v))),
        "mean_load_including_typical": mean_load,
        "other_users_histogram": by_class(&|id| summary.load_histogram.get(id).map(|v| json!(v))),
    })
}

fn simulate(a: &SimulateArgs, config: &NetworkConfig) -> Result<Artifacts> {
    let summary = run_batch(config, &sim_settings(&a.sim, config)?)?;
    let taus: Vec<f64> = a.tau_grid_db.0.iter().map(|db| db_to_linear(*db)).collect();
    let sinr = summary.sinr_ccdf_at(&taus);
    let rate = summary.rate_ccdf_at(&a.rho_grid.0);
    let mut table = Table::new(["metric", "threshold", "coverage"]);
    for (db, v) in a.tau_grid_db.0.iter().zip(&sinr.values) {
        table.rows.push(vec!["sinr_db".into(), fmt_num(*db), fmt_num(*v)]);
    }
    for (rho, v) in a.rho_grid.0.iter().zip(&rate.values) {
        table.rows.push(vec!["rate_bps".into(), fmt_num(*rho), fmt_num(*v)]);
    }
    let mut out = Artifacts::default();
    out.add("empirical_ccdf.csv", table.to_csv());
    out.add("summary.json", json_text(summary_json(&summary)));
    if summary.empty_trials > 0 {
        out.notes.push(format!("{} trials had no open AP in the window", summary.empty_trials));
    }
    Ok(out)
}

fn sweep_bias(a: &SweepBiasArgs, config: &NetworkConfig) -> Result<Artifacts> {
    let (metric, column) = match a.metric {
        MetricArg::Sir => (SweepMetric::SinrCoverage, "sinr_coverage"),
        MetricArg::Rate => (SweepMetric::RateCoverage(a.method), "rate_coverage"),
        MetricArg::P95 => (SweepMetric::PercentileRate { coverage_target: 0.95, method: a.method }, "rate_p95_bps"),
    };
    let values = bias_sweep(config, a.class, &a.range_db.0, metric)?;
    let mut table = Table::new(["bias_db", column]);
    for (db, v) in values {
        table.push_numbers(&[db, v]);
    }
    let mut out = Artifacts::default();
    out.add("bias_sweep.csv", table.to_csv());
    Ok(out)
}

fn optimize_bias(a: &OptimizeBiasArgs, config: &NetworkConfig) -> Result<Artifacts> {
    let scenario = TwoRatScenario::from_config(config)?;
    let (mode, result) = match a.mode {
        ModeArg::Sir => ("sir", optimal_bias_sir(&scenario)?),
        ModeArg::Rate => ("rate", optimal_bias_rate(&scenario, a.range_db)?),
    };
    let trace: Vec<Value> =
        result.trace.iter().map(|p| json!({"bias_db": p.bias_db, "objective": p.objective})).collect();
    let body = json!({
        "mode": mode,
        "class1": scenario.class1.to_string(),
        "class2": scenario.class2.to_string(),
        "b_opt": result.b_opt,
        "b_opt_db": result.b_opt_db,
        "objective": result.objective_at_opt,
        "offload_fraction": result.offload_fraction,
        "boundary_warning": result.boundary_warning,
        "trace": trace,
    });
    let mut out = Artifacts::default();
    if result.boundary_warning {
        out.notes.push("warning: optimum on the edge of the search bracket".into());
    }
    out.add("optimization.json", json_text(body));
    Ok(out)
}

fn compare(a: &CompareArgs, config: &NetworkConfig) -> Result<Artifacts> {
    let an = Analyzer::new(config)?;
    let taus: Vec<f64> = a.tau_grid_db.0.iter().map(|db| db_to_linear(*db)).collect();
    let sinr = an.sinr_ccdf(&taus)?;
    let rate = an.rate_ccdf(&a.rho_grid.0, a.method)?;
    let summary = run_batch(config, &sim_settings(&a.sim, config)?)?;
    let emp_sinr = summary.sinr_ccdf_at(&taus);
    let emp_rate = summary.rate_ccdf_at(&a.rho_grid.0);

    let mut table = Table::new(["metric", "threshold", "analytic", "empirical", "abs_gap"]);
    let mut push = |metric: &str, shown: &[f64], an: &[f64], emp: &[f64]| -> f64 {
        let mut gap = 0.0f64;
        for ((x, p), q) in shown.iter().zip(an).zip(emp) {
            gap = gap.max((p - q).abs());
            table.rows.push(vec![metric.into(), fmt_num(*x), fmt_num(*p), fmt_num(*q), fmt_num((p - q).abs())]);
        }
        gap
    };
    let sinr_gap = push("sinr_db", &a.tau_grid_db.0, &sinr.values, &emp_sinr.values);
    let rate_gap = push("rate_bps", &a.rho_grid.0, &rate.values, &emp_rate.values);

    let mut out = Artifacts::default();
    out.add("compare.csv", table.to_csv());
    out.add(
        "compare.json",
        json_text(json!({
            "rate_method": a.method,
            "trials": summary.trial_count,
            "seed": a.sim.seed,
            "max_gap_sinr": sinr_gap,
            "max_gap_rate": rate_gap,
        })),
    );
    out.notes.push(format!("max gap: sinr {} rate {}", fmt_num(sinr_gap), fmt_num(rate_gap)));
    Ok(out)
}
