//! Stochastic-geometry analysis of downlink SINR and rate coverage in
//! multi-RAT, multi-tier heterogeneous wireless networks.
//!
//! The analytic modules ([`association`], [`coverage`], [`offload`]) are
//! generic over the floating-point scalar through [`Real`]. The Monte Carlo
//! simulator in [`montecarlo`] is the independent oracle for the analysis and
//! works in `f64`. Concrete `f64` aliases for the common types live at the
//! crate root.

// `!(x > 0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod association;
pub mod coverage;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod offload;
pub mod scalar;

pub use error::{Error, Result};
pub use model::{Access, ClassId};
pub use scalar::Real;

pub type ApClass = model::ApClass<f64>;
pub type NetworkConfig = model::NetworkConfig<f64>;
pub type NormalizedClassView = model::NormalizedClassView<f64>;
pub type QuadratureSettings = numerics::QuadratureSettings<f64>;
pub type LoadDistribution = association::LoadDistribution<f64>;
pub type CcdfCurve = coverage::CcdfCurve<f64>;
pub type Analyzer<'a> = coverage::Analyzer<'a, f64>;

pub type NetworkConfigF32 = model::NetworkConfig<f32>;
pub type AnalyzerF32<'a> = coverage::Analyzer<'a, f32>;
pub type TwoRatScenario = offload::TwoRatScenario<f64>;
pub type OptimizationResult = offload::OptimizationResult<f64>;
