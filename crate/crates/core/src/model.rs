//! Network description: AP classes, the full configuration, validation and
//! per-serving-class normalisation.
//!
//! Canonical units everywhere inside the crate: watts, hertz, kilometres,
//! bits per second and linear ratios. Decibel conversion happens once, when a
//! configuration is ingested.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Access {
    Open,
    Closed,
}

/// A (RAT, tier) pair plus its access mode. Closed-access APs of tier `k`
/// form their own class `(m, k')`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassId {
    pub rat: u32,
    pub tier: u32,
    pub access: Access,
}

impl ClassId {
    pub const fn open(rat: u32, tier: u32) -> Self {
        Self { rat, tier, access: Access::Open }
    }

    pub const fn closed(rat: u32, tier: u32) -> Self {
        Self { rat, tier, access: Access::Closed }
    }

    pub fn is_open(&self) -> bool {
        self.access == Access::Open
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.access {
            Access::Open => write!(f, "({},{})", self.rat, self.tier),
            Access::Closed => write!(f, "({},{}')", self.rat, self.tier),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApClass<T> {
    pub id: ClassId,
    /// APs per km².
    pub density: T,
    /// Transmit power in watts.
    pub power: T,
    /// Linear association bias. Ignored for closed-access classes.
    pub bias: T,
    /// Path-loss exponent, strictly greater than 2.
    pub exponent: T,
    /// Bandwidth in Hz. Ignored for closed-access classes.
    pub bandwidth: T,
}

impl<T: Real> ApClass<T> {
    pub fn new(id: ClassId, density: T, power: T, bias: T, exponent: T, bandwidth: T) -> Self {
        Self { id, density, power, bias, exponent, bandwidth }
    }

    /// Association weight `P·B` used by the biased received-power rule.
    pub fn weight(&self) -> T {
        self.power * self.bias
    }

    /// Open access with positive density, i.e. a member of the serving set.
    pub fn can_serve(&self) -> bool {
        self.id.is_open() && self.density > T::zero()
    }

    pub fn cast<U: Real>(&self) -> ApClass<U> {
        ApClass {
            id: self.id,
            density: U::lit(self.density.as_f64()),
            power: U::lit(self.power.as_f64()),
            bias: U::lit(self.bias.as_f64()),
            exponent: U::lit(self.exponent.as_f64()),
            bandwidth: U::lit(self.bandwidth.as_f64()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig<T> {
    pub classes: Vec<ApClass<T>>,
    /// Users per km².
    pub user_density: T,
    /// Noise power in watts per RAT; a missing RAT means noise is ignored.
    pub noise_power: BTreeMap<u32, T>,
    /// Linear SINR threshold per open class.
    pub sinr_threshold: BTreeMap<ClassId, T>,
    /// Rate threshold in bits/s per open class.
    pub rate_threshold: BTreeMap<ClassId, T>,
}

impl<T: Real> NetworkConfig<T> {
    pub fn new(user_density: T) -> Self {
        Self {
            classes: Vec::new(),
            user_density,
            noise_power: BTreeMap::new(),
            sinr_threshold: BTreeMap::new(),
            rate_threshold: BTreeMap::new(),
        }
    }

    pub fn with_class(mut self, class: ApClass<T>) -> Self {
        self.classes.push(class);
        self
    }

    pub fn with_noise(mut self, rat: u32, watts: T) -> Self {
        self.noise_power.insert(rat, watts);
        self
    }

    pub fn with_thresholds(mut self, id: ClassId, sinr: T, rate: T) -> Self {
        self.sinr_threshold.insert(id, sinr);
        self.rate_threshold.insert(id, rate);
        self
    }

    /// Sets the same SINR and rate thresholds on every open-access class.
    pub fn with_common_thresholds(mut self, sinr: T, rate: T) -> Self {
        let open: Vec<ClassId> = self.classes.iter().filter(|c| c.id.is_open()).map(|c| c.id).collect();
        for id in open {
            self.sinr_threshold.insert(id, sinr);
            self.rate_threshold.insert(id, rate);
        }
        self
    }

    pub fn class(&self, id: ClassId) -> Option<&ApClass<T>> {
        self.classes.iter().find(|c| c.id == id)
    }

    pub fn class_mut(&mut self, id: ClassId) -> Option<&mut ApClass<T>> {
        self.classes.iter_mut().find(|c| c.id == id)
    }

    /// The serving set: open classes with positive density, in `ClassId` order.
    pub fn open_classes(&self) -> Vec<&ApClass<T>> {
        let mut v: Vec<_> = self.classes.iter().filter(|c| c.can_serve()).collect();
        v.sort_by_key(|c| c.id);
        v
    }

    /// Every class of `rat` with positive density, open or closed.
    pub fn rat_classes(&self, rat: u32) -> Vec<&ApClass<T>> {
        let mut v: Vec<_> = self.classes.iter().filter(|c| c.id.rat == rat && c.density > T::zero()).collect();
        v.sort_by_key(|c| c.id);
        v
    }

    pub fn rats(&self) -> Vec<u32> {
        let mut r: Vec<u32> = self.classes.iter().map(|c| c.id.rat).collect();
        r.sort_unstable();
        r.dedup();
        r
    }

    pub fn noise(&self, rat: u32) -> T {
        self.noise_power.get(&rat).copied().unwrap_or_else(T::zero)
    }

    pub fn is_noise_free(&self) -> bool {
        self.noise_power.values().all(|n| *n == T::zero())
    }

    pub fn sinr_threshold_of(&self, id: ClassId) -> Result<T> {
        self.sinr_threshold.get(&id).copied().ok_or(Error::UnknownClass(id))
    }

    pub fn rate_threshold_of(&self, id: ClassId) -> Result<T> {
        self.rate_threshold.get(&id).copied().ok_or(Error::UnknownClass(id))
    }

    /// Copy of the configuration with one class's linear bias replaced.
    pub fn with_bias(&self, id: ClassId, bias: T) -> Result<Self> {
        let mut c = self.clone();
        c.class_mut(id).ok_or(Error::UnknownClass(id))?.bias = bias;
        Ok(c)
    }

    /// Copy of the configuration with one class's density replaced.
    pub fn with_density(&self, id: ClassId, density: T) -> Result<Self> {
        let mut c = self.clone();
        c.class_mut(id).ok_or(Error::UnknownClass(id))?.density = density;
        Ok(c)
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    /// Returns the configuration unchanged if it validates.
    pub fn validated(self) -> Result<Self> {
        let report = validate(&self);
        if report.is_ok() {
            Ok(self)
        } else {
            Err(Error::InvalidConfig(report))
        }
    }

    pub fn cast<U: Real>(&self) -> NetworkConfig<U> {
        let conv = |m: &BTreeMap<ClassId, T>| m.iter().map(|(k, v)| (*k, U::lit(v.as_f64()))).collect();
        NetworkConfig {
            classes: self.classes.iter().map(ApClass::cast).collect(),
            user_density: U::lit(self.user_density.as_f64()),
            noise_power: self.noise_power.iter().map(|(k, v)| (*k, U::lit(v.as_f64()))).collect(),
            sinr_threshold: conv(&self.sinr_threshold),
            rate_threshold: conv(&self.rate_threshold),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub class: Option<ClassId>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.class {
            Some(id) => write!(f, "{id}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, class: Option<ClassId>, message: impl Into<String>) {
        self.violations.push(Violation { class, message: message.into() });
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("pass");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate<T: Real>(config: &NetworkConfig<T>) -> ValidationReport {
    let mut report = ValidationReport::default();
    let finite_pos = |x: T| x.is_finite() && x > T::zero();

    for (i, c) in config.classes.iter().enumerate() {
        let id = Some(c.id);
        if config.classes[..i].iter().any(|o| o.id == c.id) {
            report.push(id, "duplicate class id");
        }
        if c.id.rat == 0 || c.id.tier == 0 {
            report.push(id, "rat and tier indices start at 1");
        }
        if !(c.density.is_finite() && c.density >= T::zero()) {
            report.push(id, "density must be finite and non-negative");
        }
        if !finite_pos(c.power) {
            report.push(id, "power must be positive");
        }
        if !finite_pos(c.bias) {
            report.push(id, "bias must be positive");
        }
        if !finite_pos(c.bandwidth) {
            report.push(id, "bandwidth must be positive");
        }
        if !(c.exponent.is_finite() && c.exponent > T::lit(2.0)) {
            report.push(id, "exponent must exceed 2");
        }
        if c.id.is_open() {
            match config.sinr_threshold.get(&c.id) {
                None => report.push(id, "missing sinr threshold"),
                Some(t) if !finite_pos(*t) => report.push(id, "sinr threshold must be positive"),
                _ => {}
            }
            match config.rate_threshold.get(&c.id) {
                None => report.push(id, "missing rate threshold"),
                Some(t) if !finite_pos(*t) => report.push(id, "rate threshold must be positive"),
                _ => {}
            }
        }
    }

    if !config.classes.iter().any(|c| c.can_serve()) {
        report.push(None, "no open-access class with positive density (V_open empty)");
    }
    if !(config.user_density.is_finite() && config.user_density >= T::zero()) {
        report.push(None, "user density must be finite and non-negative");
    }
    for (rat, n) in &config.noise_power {
        if !(n.is_finite() && *n >= T::zero()) {
            report.push(None, format!("noise power of RAT {rat} must be finite and non-negative"));
        }
    }
    report
}

pub fn db_to_linear<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

pub fn linear_to_db<T: Real>(linear: T) -> T {
    T::lit(10.0) * linear.log10()
}

pub fn dbm_to_watts<T: Real>(dbm: T) -> T {
    T::lit(10.0).powf((dbm - T::lit(30.0)) / T::lit(10.0))
}

/// `(watts, linear_bias)` from a dBm power and a dB bias.
pub fn from_decibel_units<T: Real>(power_dbm: T, bias_db: T) -> (T, T) {
    (dbm_to_watts(power_dbm), db_to_linear(bias_db))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizedParams<T> {
    pub id: ClassId,
    pub weight_ratio: T,
    pub power_ratio: T,
    pub bias_ratio: T,
    pub exponent_ratio: T,
}

/// Every class's parameters divided by those of the serving class.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedClassView<T> {
    pub serving: ClassId,
    pub entries: Vec<NormalizedParams<T>>,
}

impl<T: Real> NormalizedClassView<T> {
    pub fn get(&self, id: ClassId) -> Option<&NormalizedParams<T>> {
        self.entries.iter().find(|e| e.id == id)
    }
}

/// Normalises every class against `serving`, which must be in the serving set.
/// Closed classes get ratios too, but their weight and bias ratios carry no
/// meaning since they never serve.
pub fn normalize<T: Real>(config: &NetworkConfig<T>, serving: ClassId) -> Result<NormalizedClassView<T>> {
    let s = config.class(serving).ok_or(Error::UnknownClass(serving))?;
    if !s.can_serve() {
        return Err(Error::NotServing(serving));
    }
    let entries = config
        .classes
        .iter()
        .map(|c| NormalizedParams {
            id: c.id,
            weight_ratio: c.weight() / s.weight(),
            power_ratio: c.power / s.power,
            bias_ratio: c.bias / s.bias,
            exponent_ratio: c.exponent / s.exponent,
        })
        .collect();
    Ok(NormalizedClassView { serving, entries })
}
