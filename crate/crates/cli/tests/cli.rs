use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_hetnet");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn hetnet(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hetnet(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn column(csv: &str, col: usize) -> Vec<f64> {
    csv.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn simulate_output_independent_of_workers() {
    let c = config("closed_access.toml");
    let base = ["simulate", "--config", &c, "--trials", "3000", "--seed", "7"];
    let one = ok(&[&base[..], &["--workers", "1"]].concat());
    let eight = ok(&[&base[..], &["--workers", "8"]].concat());
    assert_eq!(one, eight);
    assert!(one.starts_with("metric,threshold,coverage\n"));
}

#[test]
fn mean_load_matches_closed_form() {
    let c = config("offload.toml");
    let grid = ["--rho-grid", "1e4:1e7:20"];
    let a = ok(&[&["analyze", "rate", "--config", &c, "--method", "meanload"][..], &grid].concat());
    let b = ok(&[&["analyze", "rate", "--config", &c, "--method", "closedform"][..], &grid].concat());
    assert_eq!(a.lines().next(), b.lines().next());
    for col in 1..4 {
        for (x, y) in column(&a, col).iter().zip(column(&b, col)) {
            assert!((x - y).abs() <= 1e-6, "column {col}: {x} vs {y}");
        }
    }
}

#[test]
fn sir_optimal_bias_for_equal_thresholds() {
    let out = ok(&["optimize", "bias", "--config", &config("equal_threshold.toml"), "--mode", "sir"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["b_opt_db"].as_f64().unwrap() + 17.5).abs() < 1e-6, "{v}");
    assert!((v["offload_fraction"].as_f64().unwrap() - 0.5).abs() < 1e-9, "{v}");
}

#[test]
fn rate_optimal_bias_inside_bracket() {
    let out = ok(&["optimize", "bias", "--config", &config("offload.toml"), "--mode", "rate"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let b = v["b_opt_db"].as_f64().unwrap();
    assert!(b > 0.0 && b < 40.0, "{v}");
    assert_eq!(v["boundary_warning"], false);
    assert!(!v["trace"].as_array().unwrap().is_empty());
}

#[test]
fn empty_classes_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "empty.toml", "users_per_km2 = 10\nclasses = []\n");
    let out = hetnet(&["analyze", "sinr", "--config", &p]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("classes must not be empty"));
}

#[test]
fn parse_errors_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.toml", "users_per_km2 = 10\n\n[[classes]]\nrat = \"one\"\n");
    let out = hetnet(&["analyze", "sinr", "--config", &p]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_config_is_an_io_failure() {
    let out = hetnet(&["analyze", "sinr", "--config", "/nonexistent/net.toml"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn bad_arguments_exit_with_one() {
    let c = config("closed_access.toml");
    assert_eq!(code(&hetnet(&["analyze", "sinr", "--config", &c, "--tau-grid-db", "5:1:1"])), 1);
    assert_eq!(code(&hetnet(&["analyze", "rate", "--config", &c, "--method", "exact"])), 1);
    assert_eq!(code(&hetnet(&["frobnicate"])), 1);
    assert_eq!(code(&hetnet(&["--help"])), 0);
}

#[test]
fn inapplicable_requests_are_rejected() {
    let c = config("closed_access.toml");
    // Unequal exponents rule out the closed form.
    assert_eq!(code(&hetnet(&["analyze", "rate", "--config", &c, "--method", "closedform"])), 1);
    // Three classes are not a two-RAT scenario.
    assert_eq!(code(&hetnet(&["optimize", "bias", "--config", &c, "--mode", "sir"])), 1);
    // Closed classes have no bias to sweep.
    let out = hetnet(&["sweep", "bias", "--config", &c, "--class", "2,3'", "--range-db", "0:1:1", "--metric", "sir"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bias_defaults_to_zero_db() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("closed_access.toml")).unwrap();
    let without = write(dir.path(), "a.toml", &text.replace("bias_db = 0\n", ""));
    let explicit = write(dir.path(), "b.toml", &text);
    let out_dir = dir.path().join("run");
    let out = out_dir.display().to_string();
    ok(&["analyze", "sinr", "--config", &without, "--out", &out]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    for c in manifest["resolved"]["network"]["classes"].as_array().unwrap() {
        assert_eq!(c["bias_linear"].as_f64().unwrap(), 1.0, "{c}");
    }
    assert_eq!(ok(&["analyze", "sinr", "--config", &without]), ok(&["analyze", "sinr", "--config", &explicit]));
}

#[test]
fn json_config_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("offload.toml")).unwrap();
    let value: toml::Value = toml::from_str(&text).unwrap();
    let p = write(dir.path(), "offload.json", &serde_json::to_string(&value).unwrap());
    assert_eq!(ok(&["analyze", "sinr", "--config", &p]), ok(&["analyze", "sinr", "--config", &config("offload.toml")]));
}

#[test]
fn manifest_replays_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let c = config("closed_access.toml");
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    ok(&["analyze", "rate", "--config", &c, "--rho-grid", "1e4:1e6:5", "--out", first.to_str().unwrap()]);
    ok(&["replay", "--manifest", first.join("manifest.json").to_str().unwrap(), "--out", second.to_str().unwrap()]);
    let a = std::fs::read(first.join("rate_coverage.csv")).unwrap();
    assert_eq!(a, std::fs::read(second.join("rate_coverage.csv")).unwrap());

    let sim = dir.path().join("sim");
    let again = dir.path().join("sim-again");
    ok(&["simulate", "--config", &c, "--trials", "1000", "--seed", "3", "--out", sim.to_str().unwrap()]);
    ok(&["replay", "--manifest", sim.join("manifest.json").to_str().unwrap(), "--out", again.to_str().unwrap()]);
    for f in ["empirical_ccdf.csv", "summary.json"] {
        assert_eq!(std::fs::read(sim.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(sim.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["command"], "simulate");
    assert!(!manifest["argv"].as_array().unwrap().iter().any(|a| a == "--out"));
}

#[test]
fn sweep_of_absent_class_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("four_class.toml")).unwrap();
    let p = write(
        dir.path(),
        "no22.toml",
        &text.replace("rat = 2\ntier = 2\ndensity_per_km2 = 5", "rat = 2\ntier = 2\ndensity_per_km2 = 0"),
    );
    let csv = ok(&["sweep", "bias", "--config", &p, "--class", "2,2", "--range-db", "-10:10:5", "--metric", "sir"]);
    assert!(csv.starts_with("bias_db,sinr_coverage\n"));
    let v = column(&csv, 1);
    assert_eq!(v.len(), 5);
    assert!(v.iter().all(|x| (x - v[0]).abs() < 1e-12), "{v:?}");
}

#[test]
fn percentile_sweep_columns() {
    let c = config("four_class.toml");
    let csv = ok(&["sweep", "bias", "--config", &c, "--class", "2,3", "--range-db", "0:10:5", "--metric", "p95"]);
    assert!(csv.starts_with("bias_db,rate_p95_bps\n"));
    assert!(column(&csv, 1).iter().all(|r| *r > 0.0));
}

#[test]
fn compare_reports_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let c = config("closed_access.toml");
    ok(&["compare", "--config", &c, "--trials", "4000", "--seed", "11", "--out", out.to_str().unwrap()]);
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("compare.json")).unwrap()).unwrap();
    assert!(stats["max_gap_rate"].as_f64().unwrap() < 0.1, "{stats}");
    assert!(stats["max_gap_sinr"].as_f64().unwrap() < 0.1, "{stats}");
    let csv = std::fs::read_to_string(out.join("compare.csv")).unwrap();
    assert!(csv.starts_with("metric,threshold,analytic,empirical,abs_gap\n"));
    assert_eq!(csv.lines().count(), 1 + 31 + 20);
}
