//! Full-information estimation (FIE) for discrete-time nonlinear systems under
//! bounded disturbances.
//!
//! The crate provides:
//!
//! * parametric comparison-function families (class K / L / KL) and the
//!   certificate conditions under which an FIE cost choice yields a robustly
//!   globally asymptotically stable estimator ([`comparison`], [`cost`]),
//! * the system abstraction and a built-in scalar benchmark system
//!   ([`model`]),
//! * bounded-disturbance scenario generation with reproducible per-instance
//!   randomness ([`scenario`]),
//! * the FIE solver itself: single-shooting objective, analytic gradients,
//!   projected quasi-Newton descent with multi-start, and a brute-force grid
//!   oracle for short horizons ([`solver`]),
//! * an extended Kalman filter baseline ([`ekf`]).
//!
//! All numeric code is generic over the scalar type through [`Scalar`]
//! (implemented for `f32` and `f64`); the `*64` aliases at the crate root fix
//! the common choice.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub mod comparison;
pub mod cost;
pub mod ekf;
pub mod model;
pub mod scenario;
pub mod solver;

pub(crate) mod linalg;

pub use comparison::{
    check_exp_condition, check_poly_condition, check_sensitivity_condition, CertificateVerdict,
    ConditionId, KFunc, KLFunc, LFunc, SensitivityGrid,
};
pub use cost::{
    evaluate_cost, evaluate_smoothed_cost, validate_rgas, CostBreakdown, CostSpec, DiscountFamily,
};
pub use ekf::{ekf_init, ekf_predict, ekf_step, ekf_update, run_ekf, run_ekf_errors, EkfState};
pub use model::{example_poly_certificate, example_system, IossCertificate, SystemModel, Trajectory};
pub use scenario::{generate_scenario, DecayMode, Scenario, ScenarioConfig};
pub use solver::{
    brute_force_oracle, objective_and_gradient, rollout, run_fie_sequence, solve_fie,
    DecisionVector, EstimateResult, EstimationProblem, OracleGrid, SolveOptions,
};

/// Scalar field the library is generic over.
///
/// `f32` and `f64` implement it; the bound collects what the numerics need
/// (float ops, conversions from configuration constants, summation, and
/// thread-safety for parallel benchmark runs).
pub trait Scalar:
    Float + NumAssign + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` constant into the working scalar type.
#[inline]
pub fn real<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 constant must convert")
}

/// Errors reported by the estimation and certificate APIs.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument fell outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A sequence or vector had the wrong length for the operation.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    /// The comparison-function family combination is not representable.
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
    /// The model lacks a hook the operation needs (e.g. Jacobians).
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    /// A brute-force grid would exceed the enumeration budget.
    #[error("grid too large: {points} points exceeds the {limit}-point budget")]
    GridTooLarge { points: u128, limit: u128 },
    /// A numerically required quantity degenerated (e.g. singular innovation
    /// covariance).
    #[error("numerical error: {0}")]
    Numerical(String),
    /// Every solver start diverged; diagnostics describe the failed attempt.
    #[error("solver failure at t={t}: {reason}")]
    SolverFailure {
        t: usize,
        reason: String,
        diagnostics: solver::Diagnostics,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub type SystemModel64 = model::SystemModel<f64>;
pub type IossCertificate64 = model::IossCertificate<f64>;
pub type Trajectory64 = model::Trajectory<f64>;
pub type ScenarioConfig64 = scenario::ScenarioConfig<f64>;
pub type Scenario64 = scenario::Scenario<f64>;
pub type CostSpec64 = cost::CostSpec<f64>;
pub type EstimationProblem64 = solver::EstimationProblem<f64>;
pub type EstimateResult64 = solver::EstimateResult<f64>;
pub type EkfState64 = ekf::EkfState<f64>;
pub type DecayMode64 = scenario::DecayMode<f64>;
pub type SolveOptions64 = solver::SolveOptions<f64>;
pub type DecisionVector64 = solver::DecisionVector<f64>;
