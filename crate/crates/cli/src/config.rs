//! Configuration files: TOML by default, JSON when the extension is `.json`.
//! Decibel fields are converted to linear units here and nowhere else.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use hetnet_core::model::{db_to_linear, dbm_to_watts, Access};
use hetnet_core::{ApClass, ClassId, NetworkConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub users_per_km2: f64,
    /// Noise power per RAT in dBm; `-inf` or a missing RAT means no noise.
    #[serde(default)]
    pub noise_dbm_per_rat: BTreeMap<String, f64>,
    pub classes: Vec<ClassEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassEntry {
    pub rat: u32,
    pub tier: u32,
    #[serde(default = "open_access")]
    pub access: Access,
    pub density_per_km2: f64,
    pub power_dbm: f64,
    #[serde(default)]
    pub bias_db: f64,
    pub alpha: f64,
    /// Required for open classes. Closed classes never serve.
    pub bandwidth_hz: Option<f64>,
    pub sinr_threshold_db: Option<f64>,
    pub rate_threshold_bps: Option<f64>,
}

fn open_access() -> Access {
    Access::Open
}

#[derive(Debug)]
pub enum ConfigError {
    Io(String, std::io::Error),
    Parse(String),
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(path, e) => write!(f, "cannot read config {path}: {e}"),
            ConfigError::Parse(msg) => write!(f, "config parse error: {msg}"),
            ConfigError::Invalid(list) => write!(f, "invalid config: {}", list.join("; ")),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn of(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

pub fn read_config_text(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.display().to_string(), e))
}

pub fn parse_config(text: &str, format: Format) -> Result<ConfigFile, ConfigError> {
    match format {
        Format::Toml => toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string().trim_end().to_owned())),
        Format::Json => serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string())),
    }
}

/// Converts to canonical units and validates.
pub fn to_network(file: &ConfigFile) -> Result<NetworkConfig, ConfigError> {
    let mut problems = Vec::new();
    if file.classes.is_empty() {
        problems.push("classes must not be empty".to_owned());
    }
    let mut config = NetworkConfig::new(file.users_per_km2);
    for (rat, dbm) in &file.noise_dbm_per_rat {
        let Ok(rat) = rat.parse::<u32>() else {
            problems.push(format!("noise_dbm_per_rat key '{rat}' is not a RAT index"));
            continue;
        };
        if dbm.is_nan() || *dbm == f64::INFINITY {
            problems.push(format!("noise_dbm_per_rat.{rat} must be finite or -inf"));
            continue;
        }
        let watts = dbm_to_watts(*dbm);
        if watts > 0.0 {
            config = config.with_noise(rat, watts);
        }
    }
    for (i, c) in file.classes.iter().enumerate() {
        let id = ClassId { rat: c.rat, tier: c.tier, access: c.access };
        let bandwidth = match (c.bandwidth_hz, id.is_open()) {
            (Some(w), _) => w,
            (None, false) => 1.0,
            (None, true) => {
                problems.push(format!("classes[{i}] {id}: bandwidth_hz is required for open classes"));
                1.0
            }
        };
        config = config.with_class(ApClass::new(
            id,
            c.density_per_km2,
            dbm_to_watts(c.power_dbm),
            db_to_linear(c.bias_db),
            c.alpha,
            bandwidth,
        ));
        if id.is_open() {
            if let Some(t) = c.sinr_threshold_db {
                config.sinr_threshold.insert(id, db_to_linear(t));
            }
            if let Some(r) = c.rate_threshold_bps {
                config.rate_threshold.insert(id, r);
            }
        }
    }
    problems.extend(config.validate().violations.iter().map(|v| v.to_string()));
    if problems.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(problems))
    }
}
