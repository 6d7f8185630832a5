//! Which AP serves the typical user, how far away it is, and how many other
//! users share it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{normalize, ClassId, NetworkConfig};
use crate::numerics::{pv_area_moment, semi_infinite_integral, stirling2, QuadratureSettings, PV_AREA_SHAPE};
use crate::scalar::Real;

/// Probability mass the default truncation of a load PMF may leave out.
pub const LOAD_TRUNCATION_BUDGET: f64 = 1e-6;

/// Settings for the association and distance integrals. Tighter than the
/// defaults so that association probabilities sum to one within 1e-8.
pub fn association_quadrature<T: Real>() -> QuadratureSettings<T> {
    QuadratureSettings { rel_tol: T::lit(1e-11), abs_tol: T::lit(1e-14), max_subdivisions: 400 }
}

/// One open class's contribution `G_ij(m,k) · y^{2/α̂_mk}` to the
/// association exponent when `(i,j)` serves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssociationTerm<T> {
    pub id: ClassId,
    /// `G_ij(m,k) = λ_mk · T̂_mk^{2/α_mk}`.
    pub coeff: T,
    /// `2/α̂_mk = 2·α_ij/α_mk`.
    pub power: T,
}

pub fn association_terms<T: Real>(config: &NetworkConfig<T>, serving: ClassId) -> Result<Vec<AssociationTerm<T>>> {
    let view = normalize(config, serving)?;
    let two = T::lit(2.0);
    Ok(config
        .open_classes()
        .into_iter()
        .map(|c| {
            let n = view.get(c.id).expect("normalised view covers every class");
            AssociationTerm {
                id: c.id,
                coeff: c.density * n.weight_ratio.powf(two / c.exponent),
                power: two / n.exponent_ratio,
            }
        })
        .collect())
}

pub(crate) fn association_exponent<T: Real>(terms: &[AssociationTerm<T>], y: T) -> T {
    terms.iter().fold(T::zero(), |s, t| s + t.coeff * y.powf(t.power))
}

/// True when every open class shares one path-loss exponent.
pub fn equal_open_exponents<T: Real>(config: &NetworkConfig<T>) -> bool {
    let open = config.open_classes();
    open.windows(2).all(|w| w[0].exponent == w[1].exponent)
}

fn serving_density<T: Real>(config: &NetworkConfig<T>, serving: ClassId) -> Result<T> {
    let c = config.class(serving).ok_or(Error::UnknownClass(serving))?;
    if !c.can_serve() {
        return Err(Error::NotServing(serving));
    }
    Ok(c.density)
}

/// Probability that the typical user is served by `serving`. Uses the
/// closed form `λ_ij / Σ G_ij(m,k)` when all open exponents coincide and the
/// general integral otherwise.
pub fn association_probability<T: Real>(config: &NetworkConfig<T>, serving: ClassId) -> Result<T> {
    if equal_open_exponents(config) {
        let density = serving_density(config, serving)?;
        let terms = association_terms(config, serving)?;
        let sum = terms.iter().fold(T::zero(), |s, t| s + t.coeff);
        Ok(density / sum)
    } else {
        association_probability_integral(config, serving, &association_quadrature())
    }
}

/// `2πλ_ij ∫_0^∞ z·exp(−π Σ G_ij(m,k) z^{2/α̂_mk}) dz`, always by quadrature.
pub fn association_probability_integral<T: Real>(
    config: &NetworkConfig<T>,
    serving: ClassId,
    settings: &QuadratureSettings<T>,
) -> Result<T> {
    let density = serving_density(config, serving)?;
    let terms = association_terms(config, serving)?;
    let pi = T::PI();
    let integral =
        semi_infinite_integral(|z: T| z * (-pi * association_exponent(&terms, z)).exp(), T::zero(), settings)?;
    Ok(T::lit(2.0) * pi * density * integral)
}

/// Traffic offload fraction of a RAT: total association probability of its
/// open classes.
pub fn rat_offload_fraction<T: Real>(config: &NetworkConfig<T>, rat: u32) -> Result<T> {
    let open: Vec<ClassId> = config.open_classes().iter().filter(|c| c.id.rat == rat).map(|c| c.id).collect();
    if open.is_empty() {
        return Err(Error::NoOpenClassInRat(rat));
    }
    open.into_iter().try_fold(T::zero(), |s, id| Ok(s + association_probability(config, id)?))
}

/// Density of the distance to the serving AP, conditioned on `serving`.
pub fn served_distance_pdf<T: Real>(config: &NetworkConfig<T>, serving: ClassId, y: T) -> Result<T> {
    if y < T::zero() {
        return Ok(T::zero());
    }
    let density = serving_density(config, serving)?;
    let a = association_probability(config, serving)?;
    let terms = association_terms(config, serving)?;
    let pi = T::PI();
    Ok(T::lit(2.0) * pi * density / a * y * (-pi * association_exponent(&terms, y)).exp())
}

/// CDF of the served distance, by quadrature of the density.
pub fn served_distance_cdf<T: Real>(config: &NetworkConfig<T>, serving: ClassId, y: T) -> Result<T> {
    if y <= T::zero() {
        return Ok(T::zero());
    }
    let density = serving_density(config, serving)?;
    let a = association_probability(config, serving)?;
    let terms = association_terms(config, serving)?;
    let pi = T::PI();
    // Survival is the better-conditioned tail integral.
    let survival =
        semi_infinite_integral(|z: T| z * (-pi * association_exponent(&terms, z)).exp(), y, &association_quadrature())?;
    Ok((T::one() - T::lit(2.0) * pi * density / a * survival).max(T::zero()))
}

/// Mean association area of an AP of `serving`, in km²: `A_ij / λ_ij`.
pub fn mean_association_area<T: Real>(config: &NetworkConfig<T>, serving: ClassId) -> Result<T> {
    let density = serving_density(config, serving)?;
    Ok(association_probability(config, serving)? / density)
}

/// Mean number of users per association area, `λ_u · A_ij / λ_ij`.
pub fn load_ratio<T: Real>(config: &NetworkConfig<T>, serving: ClassId) -> Result<T> {
    Ok(config.user_density * mean_association_area(config, serving)?)
}

/// Truncated PMF of a user count at an AP.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoadDistribution<T> {
    pub serving: ClassId,
    /// `λ_u · A_ij / λ_ij`.
    pub ratio: T,
    /// `pmf[n]` for `n = 0..=n_max`.
    pub pmf: Vec<T>,
    pub n_max: usize,
}

impl<T: Real> LoadDistribution<T> {
    pub fn total_mass(&self) -> T {
        self.pmf.iter().fold(T::zero(), |s, p| s + *p)
    }

    pub fn mean(&self) -> T {
        self.pmf.iter().enumerate().fold(T::zero(), |s, (n, p)| s + T::lit(n as f64) * *p)
    }

    pub fn raw_moment(&self, k: i32) -> T {
        self.pmf.iter().enumerate().fold(T::zero(), |s, (n, p)| s + T::lit(n as f64).powi(k) * *p)
    }
}

/// Default truncation: at least `max(50, ⌈4r⌉ + 20)` terms, extended until
/// the omitted tail mass and tail mean of the tagged-AP law are both below a
/// thousandth of the budget.
pub fn default_n_max<T: Real>(ratio: T) -> usize {
    let base = ((T::lit(4.0) * ratio).ceil().as_f64() as usize + 20).max(50);
    if ratio <= T::zero() {
        return base;
    }
    let target = LOAD_TRUNCATION_BUDGET * 1e-3;
    let shape = PV_AREA_SHAPE + 1.0;
    let r = ratio.as_f64();
    let (ln_step, mut ln_p) = ((r / (PV_AREA_SHAPE + r)).ln(), shape * (PV_AREA_SHAPE / (PV_AREA_SHAPE + r)).ln());
    let full_mean = shape * r / PV_AREA_SHAPE;
    let (mut mass, mut mean) = (0.0, 0.0);
    let mut n = 0usize;
    const CAP: usize = 50_000_000;
    while n < CAP {
        let p = ln_p.exp();
        mass += p;
        mean += n as f64 * p;
        if 1.0 - mass < target && full_mean - mean < target && n >= base {
            break;
        }
        ln_p += ((n as f64 + shape) / (n as f64 + 1.0)).ln() + ln_step;
        n += 1;
    }
    n.max(base)
}

/// Negative-binomial PMF with the given gamma shape, mixing a Poisson count
/// over a gamma area law with mean `ratio`-scaled moments.
fn gamma_poisson_pmf<T: Real>(shape: T, ratio: T, n_max: usize) -> Vec<T> {
    let mut pmf = vec![T::zero(); n_max + 1];
    if ratio <= T::zero() {
        pmf[0] = T::one();
        return pmf;
    }
    let k = T::lit(PV_AREA_SHAPE);
    let ln_step = (ratio / (k + ratio)).ln();
    let mut ln_p = shape * (k / (k + ratio)).ln();
    for (n, slot) in pmf.iter_mut().enumerate() {
        *slot = ln_p.exp();
        let nf = T::lit(n as f64);
        ln_p = ln_p + ((nf + shape) / (nf + T::one())).ln() + ln_step;
    }
    pmf
}

/// PMF of the number of *other* users at the tagged AP for a given ratio
/// `r`: `P(n) = 3.5^{3.5} Γ(n+4.5) / (n! Γ(3.5)) · r^n (3.5+r)^{−(n+4.5)}`.
pub fn tagged_load_pmf<T: Real>(ratio: T, n_max: usize) -> Vec<T> {
    gamma_poisson_pmf(T::lit(PV_AREA_SHAPE + 1.0), ratio, n_max)
}

/// PMF of the user count at a typical (not area-biased) AP with mean `ratio`.
pub fn typical_load_pmf_for_ratio<T: Real>(ratio: T, n_max: usize) -> Vec<T> {
    gamma_poisson_pmf(T::lit(PV_AREA_SHAPE), ratio, n_max)
}

/// Law of the other users `O_ij` sharing the tagged AP (total load
/// `K_ij = 1 + O_ij`). `n_max = None` picks [`default_n_max`].
pub fn tagged_load_distribution<T: Real>(
    config: &NetworkConfig<T>,
    serving: ClassId,
    n_max: Option<usize>,
) -> Result<LoadDistribution<T>> {
    let ratio = load_ratio(config, serving)?;
    let n_max = n_max.unwrap_or_else(|| default_n_max(ratio));
    if n_max < 1 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    Ok(LoadDistribution { serving, ratio, pmf: tagged_load_pmf(ratio, n_max), n_max })
}

/// `E[O_ij^n] = Σ_{k=1}^n r^k S(n,k) E[C^{k+1}(1)]`.
pub fn tagged_load_moment_for_ratio<T: Real>(ratio: T, n: usize) -> T {
    (1..=n)
        .fold(T::zero(), |s, k| s + ratio.powi(k as i32) * T::lit(stirling2(n, k) as f64) * pv_area_moment::<T>(k + 1))
}

pub fn tagged_load_moment<T: Real>(config: &NetworkConfig<T>, serving: ClassId, n: usize) -> Result<T> {
    if n < 1 {
        return Err(Error::InvalidArgument("moment order must be at least 1".into()));
    }
    Ok(tagged_load_moment_for_ratio(load_ratio(config, serving)?, n))
}

/// Users at a typical AP of `serving`: Poisson over the gamma(3.5) area law.
pub fn typical_load_pmf<T: Real>(
    config: &NetworkConfig<T>,
    serving: ClassId,
    n_max: usize,
) -> Result<LoadDistribution<T>> {
    let ratio = load_ratio(config, serving)?;
    Ok(LoadDistribution { serving, ratio, pmf: typical_load_pmf_for_ratio(ratio, n_max), n_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::{dbm_to_watts, ApClass};
    use proptest::prelude::*;

    const C11: ClassId = ClassId::open(1, 1);
    const C23: ClassId = ClassId::open(2, 3);

    #[test]
    fn density_shares_when_everything_equal() {
        let c = two_class(1.0, 10.0, 4.0, 4.0, 1.0, 1.0);
        assert!((association_probability(&c, C11).unwrap() - 1.0 / 11.0).abs() < 1e-15);
        assert!((association_probability(&c, C23).unwrap() - 10.0 / 11.0).abs() < 1e-15);
        assert!((rat_offload_fraction(&c, 2).unwrap() - 10.0 / 11.0).abs() < 1e-15);
        assert!(matches!(rat_offload_fraction(&c, 3), Err(Error::NoOpenClassInRat(3))));
    }

    #[test]
    fn single_class_is_always_served() {
        let c = single_class(2.0, 3.5);
        assert_eq!(association_probability(&c, C11).unwrap(), 1.0);
        assert!((association_probability_integral(&c, C11, &association_quadrature()).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(rat_offload_fraction(&c, 1).unwrap(), 1.0);
    }

    #[test]
    fn fast_path_agrees_with_integral() {
        let c = two_class(1.0, 7.0, 3.5, 3.5, dbm_to_watts(53.0), dbm_to_watts(23.0));
        for id in [C11, C23] {
            let fast = association_probability(&c, id).unwrap();
            let slow = association_probability_integral(&c, id, &association_quadrature()).unwrap();
            assert!((fast - slow).abs() < 1e-10, "{fast} vs {slow}");
        }
    }

    #[test]
    fn mixed_exponents_sum_to_one() {
        let c = two_class(1.0, 10.0, 3.5, 4.0, dbm_to_watts(53.0), dbm_to_watts(23.0));
        let s = association_probability(&c, C11).unwrap() + association_probability(&c, C23).unwrap();
        assert!((s - 1.0).abs() < 1e-10, "{s}");
    }

    #[test]
    fn served_distance_pdf_values() {
        let c = single_class(1.0, 4.0);
        let pi = std::f64::consts::PI;
        let f = served_distance_pdf(&c, C11, 0.5).unwrap();
        assert!((f - 2.0 * pi * 0.5 * (-pi * 0.25).exp()).abs() < 1e-14);
        assert!((f - 1.4324).abs() < 1e-4);
        assert_eq!(served_distance_pdf(&c, C11, -1.0).unwrap(), 0.0);
    }

    #[test]
    fn served_distance_pdf_normalises() {
        let c = two_class(1.0, 10.0, 3.5, 4.0, dbm_to_watts(53.0), dbm_to_watts(23.0));
        for id in [C11, C23] {
            let s = association_quadrature();
            let mass = semi_infinite_integral(|y: f64| served_distance_pdf(&c, id, y).unwrap(), 0.0, &s).unwrap();
            assert!((mass - 1.0).abs() < 1e-6, "{id}: {mass}");
            let cdf = served_distance_cdf(&c, id, 1e3).unwrap();
            assert!((cdf - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mean_areas() {
        let c = single_class(1.0, 3.5);
        assert!((mean_association_area(&c, C11).unwrap() - 1.0).abs() < 1e-15);
        let c = two_class(1.0, 10.0, 3.5, 3.5, 1.0, 1.0);
        for id in [C11, C23] {
            assert!((mean_association_area(&c, id).unwrap() - 1.0 / 11.0).abs() < 1e-15);
        }
    }

    #[test]
    fn tagged_pmf_values() {
        let empty = tagged_load_pmf(0.0f64, 10);
        assert_eq!(empty[0], 1.0);
        assert!(empty[1..].iter().all(|p| *p == 0.0));
        let p = tagged_load_pmf(3.5f64, 60);
        assert!((p[0] - 2f64.powf(-4.5)).abs() < 1e-15);
        assert!((p[0] - 0.044194).abs() < 1e-6);
    }

    #[test]
    fn tagged_pmf_matches_closed_expression() {
        use crate::numerics::ln_gamma;
        let r = 2.7f64;
        let p = tagged_load_pmf(r, 40);
        for (n, pn) in p.iter().enumerate() {
            let nf = n as f64;
            let ln = 3.5 * 3.5f64.ln() - ln_gamma(nf + 1.0) + ln_gamma(nf + 4.5) - ln_gamma(3.5) + nf * r.ln()
                - (nf + 4.5) * (3.5 + r).ln();
            assert!((pn - ln.exp()).abs() < 1e-13 * (1.0 + ln.exp()), "n = {n}");
        }
    }

    #[test]
    fn default_truncation_meets_budget() {
        for r in [0.0, 0.1, 1.0, 3.5, 14.0, 40.0, 250.0] {
            let n = default_n_max(r);
            assert!(n >= 50);
            let p = tagged_load_pmf(r, n);
            let mass: f64 = p.iter().sum();
            assert!(mass >= 1.0 - LOAD_TRUNCATION_BUDGET, "r = {r}: mass {mass}");
            let mean: f64 = p.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
            assert!((mean - 9.0 / 7.0 * r).abs() < 1e-6 * (1.0 + r), "r = {r}: {mean}");
        }
    }

    #[test]
    fn moments_via_stirling() {
        assert!((tagged_load_moment_for_ratio(2.0f64, 1) - 2.0 * 9.0 / 7.0).abs() < 1e-14);
        let m2 = tagged_load_moment_for_ratio(1.0f64, 2);
        assert!((m2 - (9.0 / 7.0 + 4.5 * 5.5 / 12.25)).abs() < 1e-14);
        assert!((m2 - 3.3061).abs() < 1e-4);
        assert_eq!(tagged_load_moment_for_ratio(0.0f64, 3), 0.0);
        // Cross-check against the PMF.
        for r in [0.5f64, 1.0, 6.0] {
            let d =
                LoadDistribution { serving: C11, ratio: r, pmf: tagged_load_pmf(r, default_n_max(r) * 3), n_max: 0 };
            for k in 1..=3 {
                let via_pmf = d.raw_moment(k);
                let via_stirling = tagged_load_moment_for_ratio(r, k as usize);
                assert!((via_pmf - via_stirling).abs() < 1e-8 * via_stirling, "r={r}, k={k}");
            }
        }
    }

    #[test]
    fn typical_pmf_mean_and_area_bias() {
        let c = NetworkConfig::new(5.0f64)
            .with_class(ApClass::new(C11, 1.0, 1.0, 1.0, 3.5, 1e7))
            .with_class(ApClass::new(C23, 4.0, 0.2, 2.0, 3.5, 1e7))
            .with_common_thresholds(1.0, 1.0);
        for id in [C11, C23] {
            let r = load_ratio(&c, id).unwrap();
            let typ = typical_load_pmf(&c, id, 400).unwrap();
            let tag = tagged_load_distribution(&c, id, None).unwrap();
            assert!((typ.mean() - r).abs() < 1e-9);
            assert!((tag.mean() / typ.mean() - 9.0 / 7.0).abs() < 1e-9);
        }
        let zero = typical_load_pmf(&NetworkConfig { user_density: 0.0, ..c.clone() }, C11, 5).unwrap();
        assert_eq!(zero.pmf, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn f32_instantiation_tracks_f64() {
        let c = two_class(1.0, 10.0, 3.5, 4.0, dbm_to_watts(53.0), dbm_to_watts(23.0));
        let c32 = c.cast::<f32>();
        let a64 = association_probability(&c, C11).unwrap();
        let a32 = association_probability(&c32, C11).unwrap();
        assert!((a32 as f64 - a64).abs() < 1e-4);
    }

    fn three_class(b2: f64, b3: f64, alphas: (f64, f64, f64)) -> NetworkConfig<f64> {
        NetworkConfig::new(10.0)
            .with_class(ApClass::new(C11, 1.0, 20.0, 1.0, alphas.0, 1e7))
            .with_class(ApClass::new(ClassId::open(1, 2), 4.0, 0.5, b2, alphas.1, 1e7))
            .with_class(ApClass::new(C23, 9.0, 0.1, b3, alphas.2, 1e7))
            .with_common_thresholds(1.0, 1.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn probabilities_sum_to_one(b2 in 0.1f64..30.0, b3 in 0.1f64..30.0, a1 in 2.5f64..5.0, a2 in 2.5f64..5.0, a3 in 2.5f64..5.0) {
            let c = three_class(b2, b3, (a1, a2, a3));
            let s: f64 = c.open_classes().iter().map(|k| association_probability(&c, k.id).unwrap()).sum();
            prop_assert!((s - 1.0).abs() < 1e-8, "sum = {}", s);
        }

        #[test]
        fn invariant_to_common_weight_scaling(scale in 0.01f64..100.0, b3 in 0.1f64..30.0, a3 in 2.5f64..5.0) {
            let c = three_class(1.0, b3, (3.5, 3.5, a3));
            let mut s = c.clone();
            for cl in &mut s.classes { cl.bias *= scale; }
            for id in [C11, C23] {
                let x = association_probability(&c, id).unwrap();
                let y = association_probability(&s, id).unwrap();
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn monotone_in_biases(b3 in 0.1f64..30.0, bump in 1.05f64..3.0, a3 in 2.5f64..5.0) {
            let c = three_class(1.0, b3, (3.5, 3.8, a3));
            let up = c.with_bias(C23, b3 * bump).unwrap();
            prop_assert!(association_probability(&up, C23).unwrap() > association_probability(&c, C23).unwrap());
            prop_assert!(association_probability(&up, C11).unwrap() < association_probability(&c, C11).unwrap());
        }
    }
}
