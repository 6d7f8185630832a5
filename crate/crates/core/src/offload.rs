//! Offload design for a two-RAT network: SIR- and rate-optimal association
//! bias, SIR-optimal density, general bias sweeps and percentile rates.

use rayon::prelude::*;
use serde::Serialize;

use crate::coverage::{sinr_for_efficiency, Analyzer, RateMethod};
use crate::error::{Error, Result};
use crate::model::{db_to_linear, linear_to_db, ApClass, ClassId, NetworkConfig};
use crate::numerics::{pv_area_moment, z_integral};
use crate::scalar::Real;

/// A RAT-1 class `(1,q)` overlaid with a RAT-2 class `(2,r)`, no noise and a
/// common path-loss exponent. Biases are relative: `B_1q = 1`, `B_2r = b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoRatScenario<T> {
    pub class1: ClassId,
    pub class2: ClassId,
    pub power1: T,
    pub power2: T,
    /// `λ_1q` in APs per km².
    pub density1: T,
    /// `a = λ_2r / λ_1q`.
    pub density_ratio: T,
    /// `b = B_2r / B_1q`, linear.
    pub bias_ratio: T,
    pub alpha: T,
    pub sinr_threshold1: T,
    pub sinr_threshold2: T,
    pub user_density: T,
    pub bandwidth1: T,
    pub bandwidth2: T,
    pub rate_threshold1: T,
    pub rate_threshold2: T,
}

impl<T: Real> TwoRatScenario<T> {
    /// Extracts the scenario from a configuration holding exactly one open
    /// class in RAT 1 and one in RAT 2, nothing else with positive density.
    pub fn from_config(config: &NetworkConfig<T>) -> Result<Self> {
        let report = config.validate();
        if !report.is_ok() {
            return Err(Error::InvalidConfig(report));
        }
        let active: Vec<&ApClass<T>> = config.classes.iter().filter(|c| c.density > T::zero()).collect();
        let pick = |rat: u32| -> Result<&ApClass<T>> {
            let v: Vec<_> = active.iter().filter(|c| c.id.rat == rat).collect();
            match v.as_slice() {
                [c] if c.id.is_open() => Ok(**c),
                _ => Err(Error::InvalidScenario(format!("RAT {rat} must hold exactly one open class"))),
            }
        };
        let (c1, c2) = (pick(1)?, pick(2)?);
        if active.len() != 2 {
            return Err(Error::InvalidScenario("only RATs 1 and 2 may be deployed".into()));
        }
        if c1.exponent != c2.exponent {
            return Err(Error::InvalidScenario("path-loss exponents must be equal".into()));
        }
        if !config.is_noise_free() {
            return Err(Error::InvalidScenario("noise power must be zero".into()));
        }
        Ok(Self {
            class1: c1.id,
            class2: c2.id,
            power1: c1.power,
            power2: c2.power,
            density1: c1.density,
            density_ratio: c2.density / c1.density,
            bias_ratio: c2.bias / c1.bias,
            alpha: c1.exponent,
            sinr_threshold1: config.sinr_threshold_of(c1.id)?,
            sinr_threshold2: config.sinr_threshold_of(c2.id)?,
            user_density: config.user_density,
            bandwidth1: c1.bandwidth,
            bandwidth2: c2.bandwidth,
            rate_threshold1: config.rate_threshold_of(c1.id)?,
            rate_threshold2: config.rate_threshold_of(c2.id)?,
        })
    }

    pub fn to_config(&self) -> NetworkConfig<T> {
        let one = T::one();
        NetworkConfig::new(self.user_density)
            .with_class(ApClass::new(self.class1, self.density1, self.power1, one, self.alpha, self.bandwidth1))
            .with_class(ApClass::new(
                self.class2,
                self.density1 * self.density_ratio,
                self.power2,
                self.bias_ratio,
                self.alpha,
                self.bandwidth2,
            ))
            .with_thresholds(self.class1, self.sinr_threshold1, self.rate_threshold1)
            .with_thresholds(self.class2, self.sinr_threshold2, self.rate_threshold2)
    }

    fn check(&self) -> Result<()> {
        let positive = [
            self.power1,
            self.power2,
            self.density1,
            self.density_ratio,
            self.bias_ratio,
            self.sinr_threshold1,
            self.sinr_threshold2,
        ];
        if positive.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidScenario("powers, densities, bias and thresholds must be positive".into()));
        }
        if !(self.alpha > T::lit(2.0)) {
            return Err(Error::InvalidScenario("exponent must exceed 2".into()));
        }
        Ok(())
    }

    /// `x = a (P̂₂ b)^{2/α}`, the biased-power ratio that fixes `A₂ = x/(1+x)`.
    fn mix(&self, b: T) -> T {
        self.density_ratio * (self.power2 / self.power1 * b).powf(T::lit(2.0) / self.alpha)
    }

    /// Two-class interference-limited SIR coverage at bias ratio `b`.
    pub fn sir_coverage(&self, b: T) -> Result<T> {
        let z1 = z_integral(self.sinr_threshold1, self.alpha, T::one())?;
        let z2 = z_integral(self.sinr_threshold2, self.alpha, T::one())?;
        let x = self.mix(b);
        Ok(T::one() / (z1 + T::one() + x) + T::one() / (z2 + T::one() + T::one() / x))
    }

    pub fn offload_fraction(&self, b: T) -> T {
        let x = self.mix(b);
        x / (T::one() + x)
    }

    /// Mean-load rate coverage at bias ratio `b`; the load, and hence the
    /// SIR threshold, of each class moves with `b`.
    pub fn rate_objective(&self, b: T) -> Result<T> {
        let x = self.mix(b);
        let a2 = x / (T::one() + x);
        let a1 = T::one() - a2;
        let k = pv_area_moment::<T>(2);
        let load1 = T::one() + k * self.user_density * a1 / self.density1;
        let load2 = T::one() + k * self.user_density * a2 / (self.density1 * self.density_ratio);
        let t1 = sinr_for_efficiency(self.rate_threshold1 / self.bandwidth1 * load1);
        let t2 = sinr_for_efficiency(self.rate_threshold2 / self.bandwidth2 * load2);
        let term = |t: T, other: T| -> Result<T> {
            if t.is_infinite() {
                return Ok(T::zero());
            }
            Ok(T::one() / (z_integral(t, self.alpha, T::one())? + T::one() + other))
        };
        Ok(term(t1, x)? + term(t2, T::one() / x)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TracePoint<T> {
    pub bias_db: T,
    pub objective: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizationResult<T> {
    /// Optimal `B_2r / B_1q`, linear.
    pub b_opt: T,
    pub b_opt_db: T,
    pub objective_at_opt: T,
    /// `A₂` at the optimum.
    pub offload_fraction: T,
    pub trace: Vec<TracePoint<T>>,
    /// Set when the optimum sits on the search bracket's edge.
    pub boundary_warning: bool,
}

/// SIR-optimal bias ratio in closed form.
pub fn optimal_bias_sir<T: Real>(scenario: &TwoRatScenario<T>) -> Result<OptimizationResult<T>> {
    scenario.check()?;
    let z1 = z_integral(scenario.sinr_threshold1, scenario.alpha, T::one())?;
    let z2 = z_integral(scenario.sinr_threshold2, scenario.alpha, T::one())?;
    let b_opt =
        scenario.power1 / scenario.power2 * (z1 / (scenario.density_ratio * z2)).powf(scenario.alpha / T::lit(2.0));
    Ok(OptimizationResult {
        b_opt,
        b_opt_db: linear_to_db(b_opt),
        objective_at_opt: (z1 + z2) / (z1 + z2 + z1 * z2),
        offload_fraction: z1 / (z1 + z2),
        trace: Vec::new(),
        boundary_warning: false,
    })
}

/// SIR-optimal density ratio `a` at the scenario's fixed bias ratio.
pub fn optimal_density_sir<T: Real>(scenario: &TwoRatScenario<T>) -> Result<T> {
    scenario.check()?;
    let z1 = z_integral(scenario.sinr_threshold1, scenario.alpha, T::one())?;
    let z2 = z_integral(scenario.sinr_threshold2, scenario.alpha, T::one())?;
    let base = scenario.power1 / (scenario.power2 * scenario.bias_ratio);
    Ok(base.powf(T::lit(2.0) / scenario.alpha) * z1 / z2)
}

/// Default search bracket for the rate-optimal bias, in dB.
pub const RATE_BIAS_BRACKET_DB: (f64, f64) = (-40.0, 40.0);

/// Rate-optimal bias ratio: 1 dB grid over `bracket_db`, then golden-section
/// refinement around the best grid point down to 0.01 dB.
pub fn optimal_bias_rate<T: Real>(scenario: &TwoRatScenario<T>, bracket_db: (T, T)) -> Result<OptimizationResult<T>> {
    scenario.check()?;
    let (lo, hi) = bracket_db;
    if !(hi - lo >= T::lit(40.0)) {
        return Err(Error::InvalidArgument("rate bias bracket must span at least 40 dB".into()));
    }
    let eval = |db: T| -> Result<TracePoint<T>> {
        Ok(TracePoint { bias_db: db, objective: scenario.rate_objective(db_to_linear(db))? })
    };
    let steps = (hi - lo).floor().to_usize().unwrap_or(0);
    let mut grid: Vec<T> = (0..=steps).map(|i| lo + T::lit(i as f64)).collect();
    if *grid.last().unwrap() < hi {
        grid.push(hi);
    }
    let mut trace: Vec<TracePoint<T>> = grid.par_iter().map(|db| eval(*db)).collect::<Result<_>>()?;
    let best = argmax(&trace);
    let boundary_warning = best == 0 || best == trace.len() - 1;
    if boundary_warning {
        log::warn!("rate-optimal bias at bracket edge {} dB", trace[best].bias_db);
    }

    let (mut a, mut b) = (trace[best.saturating_sub(1)].bias_db, trace[(best + 1).min(trace.len() - 1)].bias_db);
    let ratio = T::lit(0.5 * (5f64.sqrt() - 1.0));
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    trace.push(f1);
    trace.push(f2);
    while b - a > T::lit(0.01) {
        if f1.objective >= f2.objective {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = eval(x1)?;
            trace.push(f1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = eval(x2)?;
            trace.push(f2);
        }
    }
    let opt = trace[argmax(&trace)];
    let b_opt = db_to_linear(opt.bias_db);
    Ok(OptimizationResult {
        b_opt,
        b_opt_db: opt.bias_db,
        objective_at_opt: opt.objective,
        offload_fraction: scenario.offload_fraction(b_opt),
        trace,
        boundary_warning,
    })
}

fn argmax<T: Real>(trace: &[TracePoint<T>]) -> usize {
    let mut best = 0;
    for (i, p) in trace.iter().enumerate() {
        if p.objective > trace[best].objective {
            best = i;
        }
    }
    best
}

/// Quantity reported by [`bias_sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SweepMetric<T> {
    /// SINR coverage at the configured per-class thresholds.
    SinrCoverage,
    /// Rate coverage at the configured per-class thresholds.
    RateCoverage(RateMethod),
    /// Rate met by `coverage_target` of users, one threshold for all classes.
    PercentileRate { coverage_target: T, method: RateMethod },
}

/// Evaluates `metric` with the bias of `target` set to each value in `grid_db`.
pub fn bias_sweep<T: Real>(
    config: &NetworkConfig<T>,
    target: ClassId,
    grid_db: &[T],
    metric: SweepMetric<T>,
) -> Result<Vec<(T, T)>> {
    match config.class(target) {
        None => return Err(Error::UnknownClass(target)),
        Some(c) if !c.id.is_open() => return Err(Error::NotServing(target)),
        Some(_) => {}
    }
    grid_db
        .par_iter()
        .map(|db| {
            let c = config.with_bias(target, db_to_linear(*db))?;
            let value = match metric {
                SweepMetric::SinrCoverage => Analyzer::new(&c)?.sinr_coverage()?,
                SweepMetric::RateCoverage(m) => Analyzer::new(&c)?.rate_coverage(m)?,
                SweepMetric::PercentileRate { coverage_target, method } => {
                    percentile_rate_with(&c, coverage_target, method)?
                }
            };
            Ok((*db, value))
        })
        .collect()
}

/// Rate `ρ` with `R(ρ) = coverage_target` under the full load law.
pub fn percentile_rate<T: Real>(config: &NetworkConfig<T>, coverage_target: T) -> Result<T> {
    percentile_rate_with(config, coverage_target, RateMethod::Theorem1)
}

/// SNR ceiling used for the initial upper end of the percentile bracket.
const PERCENTILE_SNR_CEILING_DB: f64 = 30.0;

pub fn percentile_rate_with<T: Real>(config: &NetworkConfig<T>, coverage_target: T, method: RateMethod) -> Result<T> {
    if !(coverage_target > T::zero() && coverage_target < T::one()) {
        return Err(Error::InvalidArgument("coverage target must lie in (0, 1)".into()));
    }
    let an = Analyzer::new(config)?;
    let r = |rho: T| an.rate_coverage_common(rho, method);
    let mut lo = T::one();
    if r(lo)? < coverage_target {
        return Err(Error::NoSolution(format!("rate coverage at 1 bps is below the target {coverage_target}")));
    }
    let w_max = config.open_classes().iter().fold(T::zero(), |m, c| m.max(c.bandwidth));
    let mut hi = w_max * (T::one() + db_to_linear(T::lit(PERCENTILE_SNR_CEILING_DB))).log2();
    let mut expansions = 0;
    while r(hi)? >= coverage_target {
        lo = hi;
        hi = hi * T::lit(4.0);
        expansions += 1;
        if expansions > 200 || hi.is_infinite() {
            return Err(Error::NoSolution("rate coverage never drops below the target".into()));
        }
    }
    while hi / lo - T::one() > T::lit(1e-3) {
        let mid = (lo * hi).sqrt();
        if r(mid)? >= coverage_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}
