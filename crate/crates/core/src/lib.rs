//! Poisson regression with a classically mismeasured covariate.
//!
//! Counts follow `Y | X ~ Poisson(exp(beta0 + beta1 X))` but only
//! `W = X + U` is observed. This crate provides
//!
//! * [`naive`]: the naive Poisson fit of `Y` on `W`,
//! * [`bias`]: the population limit of that fit and its asymptotic bias and MSE,
//! * [`corrected`]: the bias-corrected (consistent) estimator and moment
//!   estimation of the covariate law,
//! * [`sim`]: a seeded, parallel Monte Carlo harness comparing the two,
//!
//! for Gamma covariates with Normal or Gamma errors in closed form and for any
//! pair from the [`dist`] catalog numerically.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bias;
pub mod cli;
pub mod corrected;
pub mod dist;
pub mod error;
pub mod naive;
pub mod report;
pub mod roots;
pub mod scenario;
pub mod sim;

pub use bias::{big_g, forward_map_g, naive_limit, BiasReport, EivModel, MapPath, MapSolution};
pub use corrected::{
    correct_estimate, estimate_nuisance_gamma_error, estimate_nuisance_normal_error, inverse_map_h,
    CorrectedEstimate,
};
pub use dist::{DistSpec, IndependentSum, Law, MgfDomain};
pub use error::{EivError, Result};
pub use naive::{
    fit_naive, score, score_jacobian, Dataset, FitOptions, ModelParams, NaiveEstimate,
};
pub use sim::{run_monte_carlo, NuisanceMode, SimConfig, SimReport};
