//! Maximum-likelihood fitting of the current-duration model.
//!
//! A [`FitConfig`] and a [`Dataset`] determine a [`Parametrization`]: the
//! packed vector `(beta, log alpha_1..K, tail)` that the optimizer works on.
//! [`fit`] maximizes the censored log-likelihood by BFGS and reports Wald
//! standard errors from a finite-difference observed information.

mod config;
mod data;
mod engine;
mod fit;
mod optim;
mod param;

pub use config::{FitConfig, Model, TailFamily, STUDY_KNOTS};
pub use data::{Dataset, Observation};
pub use engine::LogLikelihood;
pub use fit::{
    covariate_shift_check, covariate_shift_report, fit, FitResult, ShiftReport,
    NEGLIGIBLE_INFORMATION, WALD_Z,
};
pub use optim::{maximize, BfgsOptions, Optimum};
pub use param::{
    build_parametrization, default_y_plus, BaselineLayout, Parametrization, TailLayout,
    LARGE_Y_PLUS, LOG_ALPHA_FLOOR,
};

use crate::error::Result;

/// Censored log-likelihood of `data` at packed parameters `params`, with the
/// layout implied by `config`.
pub fn log_likelihood(params: &[f64], data: &Dataset, config: &FitConfig) -> Result<f64> {
    let layout = build_parametrization(data, config)?;
    LogLikelihood::new(&layout, data)?.value(params)
}
