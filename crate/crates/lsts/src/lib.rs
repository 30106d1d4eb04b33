//! Prediction for locally stationary time series.
//!
//! The crate provides one-step-ahead point predictors and bootstrap prediction
//! intervals for time series whose dependence structure and marginal
//! distribution drift slowly over time. Two routes are implemented:
//!
//! - **Model-based (MB)**: one-sided kernel smoothing of trend and scale,
//!   an autoregressive sieve fitted to the standardized residuals, and a
//!   forward residual bootstrap for interval construction.
//! - **Model-free (MF/LMF)**: a time-varying distribution estimate maps the
//!   observations to uniforms, a normal quantile map makes them Gaussian, and
//!   a Toeplitz covariance estimate whitens them to i.i.d. innovations. The
//!   inverse map carries predictors and bootstrap draws back to data scale.
//!
//! Supporting machinery: bandwidth selection by one-step-ahead cross
//! validation, transformation diagnostics (Kolmogorov-Smirnov, Shapiro-Wilk,
//! ACF), a weighted ramp regression baseline, and a simulation/evaluation
//! harness behind the `lsts` command line tool.

#![forbid(unsafe_code)]

pub mod bandwidth;
pub mod bootstrap;
pub mod covariance;
pub mod diagnostics;
pub mod dist_estimation;
mod error;
pub mod harness;
pub mod linear_prediction;
pub mod mf_transform;
pub mod predictors;
pub mod rampfit;
pub mod series;
pub mod smoothing;
pub(crate) mod stats;

pub use error::{Error, Result};
