//! Estimation of additive functionals `sum_i F(theta_i)` from observations
//! `y ~ N(theta, I_d)` where `theta` is sparse and bounded.
//!
//! The crate builds the two halves of the minimax picture:
//!
//! * **Upper bound:** a multi-scale estimator that replaces `F` on each scale
//!   by its best uniform polynomial approximation and evaluates the polynomial
//!   unbiasedly through Hermite polynomials ([`estimator`]), plus a simplified
//!   single-scale variant for the non-sparse regime.
//! * **Lower bound:** moment-matched prior pairs obtained by linear
//!   programming, chi-square divergence series, and an assembled two-prior
//!   certificate ([`lowerbound`]).
//!
//! Both sides are driven by the best-approximation machinery in
//! [`polyapprox`] (Remez exchange with an independent grid-LP oracle) and the
//! Hermite engine in [`hermite`]. The [`risk`] module is a reproducible Monte
//! Carlo harness that measures mean squared error against the theoretical
//! rates.

pub mod estimator;
pub mod funcspace;
pub mod hermite;
pub mod lowerbound;
pub mod polyapprox;
pub mod risk;

mod accum;
mod basis;
mod simplex;
mod streams;

pub use estimator::{
    build_schedule, duplicate_samples, fit, fit_simplified, FittedEstimator, Level, LevelSchedule,
    NoiseMode, SimplifiedEstimator,
};
pub use funcspace::{
    builtin_functional, functional_from_expression, make_theta, probe_assumptions,
    AssumptionReport, MarginalFunctional, ParameterSpace, Placement, SpikeValues,
};
pub use hermite::{
    hermite_all, hermite_moment_check, hermitize, variance_scaled_hermite, GaussHermite,
    HermiteEval, HermitePoly,
};
pub use lowerbound::{
    build_prior_pair, certificate, chi2_series, g_function, rate_expression,
    rate_expression_sampled, Chi2Series, DiscreteMeasure, LowerBoundCertificate, PriorPair,
    RateLowerBound,
};
pub use polyapprox::{delta_curve, grid_lp_approx, remez, remez_auto, PolyApprox};
pub use risk::{
    adversarial_sweep, default_candidates, measure_risk, rate_scaling_study, simulate,
    EstimatorRef, RiskReport, ScalingRow, SweepOutcome,
};
