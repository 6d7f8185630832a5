//! Number formatting, CSV tables and the run manifest.

use std::path::{Path, PathBuf};

use hetnet_core::ClassId;
use serde::{Deserialize, Serialize};

pub const SIGNIFICANT_DIGITS: usize = 9;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest text for `x` rounded to nine significant digits. Plain notation
/// for magnitudes in `[1e-5, 1e15)`, exponent notation otherwise.
pub fn fmt_num(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        return "0".into();
    }
    if !r.is_finite() {
        return if r.is_nan() {
            "nan".into()
        } else if r > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let a = r.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// `(1,1)` becomes `1_1`; closed classes get a `c` suffix.
pub fn class_tag(id: ClassId) -> String {
    if id.is_open() {
        format!("{}_{}", id.rat, id.tier)
    } else {
        format!("{}_{}c", id.rat, id.tier)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push_numbers(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|v| fmt_num(*v)).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Deep-copies a JSON value with every number rounded to nine significant
/// digits.
pub fn round_json(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            n.as_f64().and_then(|f| serde_json::Number::from_f64(round_sig(f))).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

pub fn json_text(v: serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(&round_json(v)).expect("JSON values always serialise");
    s.push('\n');
    s
}

/// One file produced by a command.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    /// The first artifact is the one printed when no output directory is set.
    pub files: Vec<Artifact>,
    /// Short human-readable lines for stderr.
    pub notes: Vec<String>,
    pub resolved: serde_json::Value,
    pub seed: Option<u64>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push(Artifact { name: name.into(), contents });
    }
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Everything needed to rerun a command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    /// Arguments after the program name, without `--out`.
    pub argv: Vec<String>,
    pub config_path: PathBuf,
    /// Verbatim config file contents at run time.
    pub config_text: String,
    pub resolved: serde_json::Value,
    pub seed: Option<u64>,
    pub wall_clock_s: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

pub fn write_dir(dir: &Path, artifacts: &Artifacts, manifest: &RunManifest) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for f in &artifacts.files {
        std::fs::write(dir.join(&f.name), &f.contents)?;
    }
    let text = serde_json::to_string_pretty(manifest).map_err(std::io::Error::other)?;
    std::fs::write(dir.join(MANIFEST_NAME), text + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_num(0.123456789012), "0.123456789");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_num(-17.5), "-17.5");
        assert_eq!(fmt_num(1e4), "10000");
        assert_eq!(fmt_num(2.0e-7), "2e-7");
        assert_eq!(fmt_num(123456789012.0), "123456789000");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn table_is_header_first() {
        let mut t = Table::new(["a", "b"]);
        t.push_numbers(&[1.0, 0.5]);
        assert_eq!(t.to_csv(), "a,b\n1,0.5\n");
    }

    #[test]
    fn json_numbers_rounded() {
        let v = round_json(serde_json::json!({"x": [1.0 / 3.0], "n": 7}));
        assert_eq!(v["x"][0].as_f64().unwrap(), 0.333333333);
        assert_eq!(v["n"], 7);
    }

    #[test]
    fn class_tags() {
        assert_eq!(class_tag(ClassId::open(2, 3)), "2_3");
        assert_eq!(class_tag(ClassId::closed(2, 3)), "2_3c");
    }
}
