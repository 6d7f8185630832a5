//! Analytic SINR and rate coverage of the typical user.
//!
//! [`Analyzer`] hoists everything that does not depend on the threshold
//! (association probabilities, association exponents, interferer geometry)
//! out of the per-threshold work, and memoises the interference integral `Z`
//! across calls.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::association::{
    association_exponent, association_probability, association_terms, default_n_max, tagged_load_pmf, AssociationTerm,
    LOAD_TRUNCATION_BUDGET,
};
use crate::error::{Error, Result};
use crate::model::{ClassId, NetworkConfig};
use crate::numerics::{pv_area_moment, semi_infinite_integral, QuadratureSettings, ZTable};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CcdfAxis {
    SinrLinear,
    RateBps,
}

/// Coverage probability as a function of a threshold. `values` is the
/// overall coverage; `per_class` holds the coverage conditioned on each
/// serving class, so that `values[g] = Σ A_ij · per_class[ij][g]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CcdfCurve<T> {
    pub axis: CcdfAxis,
    pub grid: Vec<T>,
    pub values: Vec<T>,
    pub per_class: BTreeMap<ClassId, Vec<T>>,
}

impl<T: Real> CcdfCurve<T> {
    /// Largest absolute pointwise difference against a curve on the same grid.
    pub fn max_gap(&self, other: &[T]) -> T {
        self.values.iter().zip(other).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    pub fn is_nonincreasing(&self, slack: T) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + slack)
    }
}

/// How the load at the tagged AP enters the rate coverage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMethod {
    /// Full load distribution of the tagged AP.
    Theorem1,
    /// Load replaced by its mean.
    MeanLoad,
    /// Mean load, no noise, equal exponents: no quadrature at all.
    ClosedForm,
}

impl std::str::FromStr for RateMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem1" => Ok(Self::Theorem1),
            "meanload" => Ok(Self::MeanLoad),
            "closedform" => Ok(Self::ClosedForm),
            other => Err(Error::InvalidArgument(format!("unknown rate method '{other}'"))),
        }
    }
}

/// `t(x) = 2^x − 1`: SINR needed for spectral efficiency `x`.
pub fn sinr_for_efficiency<T: Real>(x: T) -> T {
    T::lit(2.0).powf(x) - T::one()
}

/// Coverage settings used by [`Analyzer::new`].
pub fn coverage_quadrature<T: Real>() -> QuadratureSettings<T> {
    QuadratureSettings {
        rel_tol: T::lit(1e-10).max(T::epsilon() * T::lit(1e3)),
        abs_tol: T::lit(1e-14),
        max_subdivisions: 400,
    }
}

/// One class of the serving RAT as seen from a serving class.
#[derive(Clone, Copy, Debug)]
struct Interferer<T> {
    id: ClassId,
    density: T,
    exponent: T,
    /// `P̂_ik^{2/α_ik}`.
    power_factor: T,
    /// Third argument of `Z`: `T̂_ik / P̂_ik` for open classes, 0 for closed.
    exclusion: T,
    /// `2/α̂_ik`.
    y_power: T,
}

#[derive(Clone, Debug)]
struct ServingClass<T> {
    id: ClassId,
    density: T,
    association: T,
    /// `λ_u A_ij / λ_ij`.
    load_ratio: T,
    power: T,
    exponent: T,
    noise: T,
    bandwidth: T,
    terms: Vec<AssociationTerm<T>>,
    interferers: Vec<Interferer<T>>,
}

/// Coverage evaluator bound to one validated configuration.
pub struct Analyzer<'a, T: Real> {
    config: &'a NetworkConfig<T>,
    serving: Vec<ServingClass<T>>,
    z: ZTable<T>,
    settings: QuadratureSettings<T>,
}

impl<'a, T: Real> Analyzer<'a, T> {
    pub fn new(config: &'a NetworkConfig<T>) -> Result<Self> {
        Self::with_settings(config, coverage_quadrature())
    }

    pub fn with_settings(config: &'a NetworkConfig<T>, settings: QuadratureSettings<T>) -> Result<Self> {
        let report = config.validate();
        if !report.is_ok() {
            return Err(Error::InvalidConfig(report));
        }
        let two = T::lit(2.0);
        let mut serving = Vec::new();
        for c in config.open_classes() {
            let association = association_probability(config, c.id)?;
            let interferers = config
                .rat_classes(c.id.rat)
                .into_iter()
                .map(|k| {
                    let p_hat = k.power / c.power;
                    Interferer {
                        id: k.id,
                        density: k.density,
                        exponent: k.exponent,
                        power_factor: p_hat.powf(two / k.exponent),
                        exclusion: if k.id.is_open() { (k.weight() / c.weight()) / p_hat } else { T::zero() },
                        y_power: two * c.exponent / k.exponent,
                    }
                })
                .collect();
            serving.push(ServingClass {
                id: c.id,
                density: c.density,
                association,
                load_ratio: config.user_density * association / c.density,
                power: c.power,
                exponent: c.exponent,
                noise: config.noise(c.id.rat),
                bandwidth: c.bandwidth,
                terms: association_terms(config, c.id)?,
                interferers,
            });
        }
        Ok(Self { config, serving, z: ZTable::new(), settings })
    }

    pub fn config(&self) -> &NetworkConfig<T> {
        self.config
    }

    pub fn serving_classes(&self) -> Vec<ClassId> {
        self.serving.iter().map(|s| s.id).collect()
    }

    fn class(&self, id: ClassId) -> Result<&ServingClass<T>> {
        self.serving.iter().find(|s| s.id == id).ok_or_else(|| {
            if self.config.class(id).is_some() {
                Error::NotServing(id)
            } else {
                Error::UnknownClass(id)
            }
        })
    }

    pub fn association(&self, id: ClassId) -> Result<T> {
        Ok(self.class(id)?.association)
    }

    /// Mean total load `1 + (9/7) λ_u A_ij / λ_ij` at the tagged AP.
    pub fn mean_load(&self, id: ClassId) -> Result<T> {
        Ok(T::one() + pv_area_moment::<T>(2) * self.class(id)?.load_ratio)
    }

    fn interferer_coefficient(&self, k: &Interferer<T>, tau: T) -> Result<T> {
        Ok(k.power_factor * k.density * self.z.get(tau, k.exponent, k.exclusion)?)
    }

    /// `D_ij(k, τ)`: combined open and closed interference coefficient of
    /// tier `k` of the serving RAT.
    pub fn d_coefficient(&self, serving: ClassId, tier: u32, tau: T) -> Result<T> {
        let s = self.class(serving)?;
        s.interferers
            .iter()
            .filter(|k| k.id.tier == tier)
            .try_fold(T::zero(), |acc, k| Ok(acc + self.interferer_coefficient(k, tau)?))
    }

    /// `∫_0^∞ y exp(−τ/SNR(y) − π{Σ D y^{2/α̂} + Σ G y^{2/α̂}}) dy` without the
    /// `2πλ_ij` prefactor.
    pub(crate) fn coverage_integral(&self, serving: ClassId, tau: T) -> Result<T> {
        let s = self.class(serving)?;
        if tau.is_infinite() {
            return Ok(T::zero());
        }
        let interference: Vec<(T, T)> = s
            .interferers
            .iter()
            .map(|k| Ok((self.interferer_coefficient(k, tau)?, k.y_power)))
            .collect::<Result<_>>()?;
        let noise_coeff = tau * s.noise / s.power;
        let pi = T::PI();
        let integrand = |y: T| {
            let inter = interference.iter().fold(T::zero(), |acc, (d, p)| acc + *d * y.powf(*p));
            let snr_term = if noise_coeff > T::zero() { noise_coeff * y.powf(s.exponent) } else { T::zero() };
            y * (-snr_term - pi * (inter + association_exponent(&s.terms, y))).exp()
        };
        semi_infinite_integral(integrand, T::zero(), &self.settings)
    }

    /// `S_ij(τ)`: SINR coverage conditioned on being served by `serving`.
    pub fn sinr_coverage_conditioned(&self, serving: ClassId, tau: T) -> Result<T> {
        let s = self.class(serving)?;
        let integral = self.coverage_integral(serving, tau)?;
        let value = T::lit(2.0) * T::PI() * s.density / s.association * integral;
        Ok(value.min(T::one()).max(T::zero()))
    }

    /// Overall SINR coverage with the configured per-class thresholds.
    pub fn sinr_coverage(&self) -> Result<T> {
        self.serving.iter().try_fold(T::zero(), |acc, s| {
            let tau = self.config.sinr_threshold_of(s.id)?;
            Ok(acc + s.association * self.sinr_coverage_conditioned(s.id, tau)?)
        })
    }

    /// SINR CCDF with one threshold applied to every class at each grid point.
    pub fn sinr_ccdf(&self, grid: &[T]) -> Result<CcdfCurve<T>> {
        self.ccdf(CcdfAxis::SinrLinear, grid, |id, tau| self.sinr_coverage_conditioned(id, tau))
    }

    fn ccdf<F>(&self, axis: CcdfAxis, grid: &[T], conditioned: F) -> Result<CcdfCurve<T>>
    where
        F: Fn(ClassId, T) -> Result<T> + Sync,
    {
        let mut per_class = BTreeMap::new();
        let mut values = vec![T::zero(); grid.len()];
        for s in &self.serving {
            let col: Vec<T> = grid.par_iter().map(|x| conditioned(s.id, *x)).collect::<Result<_>>()?;
            for (v, c) in values.iter_mut().zip(&col) {
                *v = *v + s.association * *c;
            }
            per_class.insert(s.id, col);
        }
        Ok(CcdfCurve { axis, grid: grid.to_vec(), values, per_class })
    }

    /// `P(R > ρ | served by (i,j))` under the chosen load model.
    pub fn rate_coverage_conditioned(&self, serving: ClassId, rho: T, method: RateMethod) -> Result<T> {
        let s = self.class(serving)?;
        let rho_hat = rho / s.bandwidth;
        match method {
            RateMethod::Theorem1 => {
                let n_max = default_n_max(s.load_ratio);
                let pmf = tagged_load_pmf(s.load_ratio, n_max);
                let mass = pmf.iter().fold(T::zero(), |a, p| a + *p);
                if mass < T::one() - T::lit(LOAD_TRUNCATION_BUDGET) {
                    log::warn!("load PMF of {} truncated with mass {mass}", s.id);
                }
                let mut acc = T::zero();
                let mut remaining = mass;
                for (n, p) in pmf.iter().enumerate() {
                    let tau = sinr_for_efficiency(rho_hat * T::lit((n + 1) as f64));
                    let cov = self.sinr_coverage_conditioned(serving, tau)?;
                    acc = acc + *p * cov;
                    remaining = remaining - *p;
                    // Coverage only falls with n, so the tail is bounded by cov·remaining.
                    if cov * remaining.max(T::zero()) < T::lit(1e-14) {
                        break;
                    }
                }
                Ok(acc)
            }
            RateMethod::MeanLoad => {
                let tau = sinr_for_efficiency(rho_hat * self.mean_load(serving)?);
                self.sinr_coverage_conditioned(serving, tau)
            }
            RateMethod::ClosedForm => {
                self.require_closed_form()?;
                let tau = sinr_for_efficiency(rho_hat * self.mean_load(serving)?);
                Ok(self.interference_limited_term(s, tau)? / s.association)
            }
        }
    }

    /// Rate coverage with the configured per-class rate thresholds.
    pub fn rate_coverage(&self, method: RateMethod) -> Result<T> {
        self.serving.iter().try_fold(T::zero(), |acc, s| {
            let rho = self.config.rate_threshold_of(s.id)?;
            Ok(acc + s.association * self.rate_coverage_conditioned(s.id, rho, method)?)
        })
    }

    /// Rate coverage with one rate threshold applied to every class.
    pub fn rate_coverage_common(&self, rho: T, method: RateMethod) -> Result<T> {
        self.serving
            .iter()
            .try_fold(T::zero(), |acc, s| Ok(acc + s.association * self.rate_coverage_conditioned(s.id, rho, method)?))
    }

    pub fn rate_ccdf(&self, grid: &[T], method: RateMethod) -> Result<CcdfCurve<T>> {
        self.ccdf(CcdfAxis::RateBps, grid, |id, rho| self.rate_coverage_conditioned(id, rho, method))
    }

    fn require_closed_form(&self) -> Result<()> {
        if !self.config.is_noise_free() {
            return Err(Error::ClosedFormInapplicable("noise power must be zero on every RAT".into()));
        }
        let exps: Vec<T> = self.config.classes.iter().filter(|c| c.density > T::zero()).map(|c| c.exponent).collect();
        if exps.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::ClosedFormInapplicable("path-loss exponents must all be equal".into()));
        }
        Ok(())
    }

    /// `λ_ij / (Σ_k D_ij(k, τ) + Σ G_ij(m,k))`.
    fn interference_limited_term(&self, s: &ServingClass<T>, tau: T) -> Result<T> {
        if tau.is_infinite() {
            return Ok(T::zero());
        }
        let d = s.interferers.iter().try_fold(T::zero(), |acc, k| Ok(acc + self.interferer_coefficient(k, tau)?))?;
        let g = s.terms.iter().fold(T::zero(), |acc, t| acc + t.coeff);
        Ok(s.density / (d + g))
    }

    /// SIR coverage in the interference-limited, equal-exponent regime,
    /// without quadrature, using the configured SINR thresholds.
    pub fn sir_coverage_closed_form(&self) -> Result<T> {
        self.require_closed_form()?;
        self.serving.iter().try_fold(T::zero(), |acc, s| {
            let tau = self.config.sinr_threshold_of(s.id)?;
            Ok(acc + self.interference_limited_term(s, tau)?)
        })
    }

    /// Mean-load rate coverage without quadrature.
    pub fn rate_coverage_closed_form(&self) -> Result<T> {
        self.rate_coverage(RateMethod::ClosedForm)
    }
}

pub fn d_coefficient<T: Real>(config: &NetworkConfig<T>, serving: ClassId, tier: u32, tau: T) -> Result<T> {
    Analyzer::new(config)?.d_coefficient(serving, tier, tau)
}

pub fn sinr_coverage_conditioned<T: Real>(config: &NetworkConfig<T>, serving: ClassId, tau: T) -> Result<T> {
    Analyzer::new(config)?.sinr_coverage_conditioned(serving, tau)
}

pub fn sinr_coverage<T: Real>(config: &NetworkConfig<T>) -> Result<T> {
    Analyzer::new(config)?.sinr_coverage()
}

pub fn sinr_ccdf<T: Real>(config: &NetworkConfig<T>, grid: &[T]) -> Result<CcdfCurve<T>> {
    Analyzer::new(config)?.sinr_ccdf(grid)
}

pub fn rate_coverage<T: Real>(config: &NetworkConfig<T>) -> Result<T> {
    Analyzer::new(config)?.rate_coverage(RateMethod::Theorem1)
}

pub fn rate_ccdf<T: Real>(config: &NetworkConfig<T>, grid: &[T], method: RateMethod) -> Result<CcdfCurve<T>> {
    Analyzer::new(config)?.rate_ccdf(grid, method)
}

pub fn rate_coverage_mean_load<T: Real>(config: &NetworkConfig<T>) -> Result<T> {
    Analyzer::new(config)?.rate_coverage(RateMethod::MeanLoad)
}

pub fn rate_coverage_closed_form<T: Real>(config: &NetworkConfig<T>) -> Result<T> {
    Analyzer::new(config)?.rate_coverage_closed_form()
}
