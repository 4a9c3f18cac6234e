//! Distribution alignment for black-box categorical generators.
//!
//! A generator is anything that maps a weight vector `a` (one coefficient per
//! attribute group) to per-group output counts. The solvers search for the
//! `a` whose output frequencies are closest to uniform in KL divergence:
//!
//! - [`solver::ida_run`]: iterative distribution alignment, a residual
//!   feedback update `a_i += alpha (sbar_i - 1/n)`;
//! - [`solver::rs_run`]: a REINFORCE-style policy-gradient search.
//!
//! Generators live in [`oracle`]; [`engine`] is an analytic Gaussian-mixture
//! diffusion model with safety guidance used as a fully transparent testbed.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar type.

// `!(x > 0)` is deliberate throughout: NaN must fail every bound check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distribution;
pub mod engine;
pub mod error;
pub mod oracle;
mod scalar;
pub mod solver;

pub use distribution::{
    frequency_loss, kl_to_uniform, normalize_frequency, softmax, AttributeSet, FrequencyVector,
    NormalizedDistribution, WeightVector,
};
pub use error::{Error, Result};
pub use oracle::{BackendKind, Oracle, OracleConfig};
pub use scalar::Scalar;
pub use solver::{SolverError, SolverOutcome, SolverTrace, TraceRecord};

pub type WeightVectorF64 = WeightVector<f64>;
pub type WeightVectorF32 = WeightVector<f32>;
pub type DistributionF64 = NormalizedDistribution<f64>;
pub type DistributionF32 = NormalizedDistribution<f32>;
pub type AttributeSetF64 = AttributeSet<f64>;
pub type AttributeSetF32 = AttributeSet<f32>;
pub type MixtureModelF64 = engine::MixtureModel<f64>;
pub type MixtureModelF32 = engine::MixtureModel<f32>;
pub type ScheduleF64 = engine::DiffusionSchedule<f64>;
pub type ScheduleF32 = engine::DiffusionSchedule<f32>;
pub type GuidanceParamsF64 = engine::GuidanceParams<f64>;
pub type GuidanceParamsF32 = engine::GuidanceParams<f32>;
pub type ToyOracleF64 = oracle::ToyDiffusionOracle<f64>;
pub type ToyOracleF32 = oracle::ToyDiffusionOracle<f32>;
pub type SimOracleF64 = oracle::SimOracle<f64>;
pub type SimOracleF32 = oracle::SimOracle<f32>;
pub type TraceF64 = SolverTrace<f64>;
pub type TraceF32 = SolverTrace<f32>;
pub type OutcomeF64 = SolverOutcome<f64>;
pub type OutcomeF32 = SolverOutcome<f32>;
