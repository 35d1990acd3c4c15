use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::config::{FitConfig, Model};
use super::data::Dataset;
use super::engine::LogLikelihood;
use super::optim::{maximize, BfgsOptions};
use super::param::{build_parametrization, Parametrization, LARGE_Y_PLUS, LOG_ALPHA_FLOOR};
use crate::error::{Error, Result};
use crate::hazard::{HazardSpec, TruncationPolicy};

/// Two-sided 95% normal quantile used for Wald intervals.
pub const WALD_Z: f64 = 1.96;

/// Observed information below which a log increment is treated as sitting on
/// the zero boundary when computing standard errors.
pub const NEGLIGIBLE_INFORMATION: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: Model,
    pub tau: Option<u32>,
    pub y_plus: u32,
    pub policy: TruncationPolicy,
    pub covariate_names: Vec<String>,
    pub beta_hat: Vec<f64>,
    /// `None` when the observed information is not positive definite.
    pub beta_se: Vec<Option<f64>>,
    pub beta_ci: Vec<Option<(f64, f64)>>,
    pub alpha_hat: HazardSpec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
    /// Packed optimum `(beta, log alpha, tail)`.
    pub params: Vec<f64>,
}

impl FitResult {
    pub fn standard_errors_available(&self) -> bool {
        self.beta_se.iter().all(Option::is_some)
    }
}

/// Central differences of the analytic gradient over the coordinates in `free`.
/// Returns the symmetrized Hessian block.
fn fd_hessian(
    engine: &LogLikelihood<'_>,
    x: &[f64],
    free: &[usize],
    step: f64,
) -> Result<DMatrix<f64>> {
    let k = free.len();
    let mut h = DMatrix::<f64>::zeros(k, k);
    let mut probe = x.to_vec();
    for (col, &i) in free.iter().enumerate() {
        let hi = step * x[i].abs().max(1.0);
        probe[i] = x[i] + hi;
        let (_, g_plus) = engine.value_and_gradient(&probe)?;
        probe[i] = x[i] - hi;
        let (_, g_minus) = engine.value_and_gradient(&probe)?;
        probe[i] = x[i];
        for (row, &j) in free.iter().enumerate() {
            h[(row, col)] = (g_plus[j] - g_minus[j]) / (2.0 * hi);
        }
    }
    Ok((&h + h.transpose()) * 0.5)
}

/// Maximizes the censored current-duration log-likelihood.
pub fn fit(data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    let layout = build_parametrization(data, config)?;
    fit_with_layout(data, config, &layout)
}

fn fit_with_layout(
    data: &Dataset,
    config: &FitConfig,
    layout: &Parametrization,
) -> Result<FitResult> {
    let engine = LogLikelihood::new(layout, data)?;
    let mut warnings = Vec::new();
    if layout.y_plus > LARGE_Y_PLUS
        && matches!(layout.policy, TruncationPolicy::FiniteUpperLimit { .. })
    {
        warnings.push(format!(
            "truncation point {} exceeds {LARGE_Y_PLUS}; large values can destabilize the estimates",
            layout.y_plus
        ));
    }

    let opts = BfgsOptions {
        rel_tol: config.rel_tol,
        grad_tol: config.grad_tol,
        max_iter: config.max_iter,
    };
    let opt = maximize(
        |x| engine.value_and_gradient(x).ok(),
        layout.initial(data),
        opts,
    );
    if !opt.value.is_finite() {
        return Err(Error::Input(
            "log-likelihood is not finite at the starting point".into(),
        ));
    }
    let mut x = opt.x;
    if !opt.converged {
        warnings.push(format!(
            "optimizer did not converge after {} iterations",
            opt.iterations
        ));
    }

    let mut clamped = Vec::new();
    for (i, v) in x.iter_mut().enumerate() {
        if layout.is_log_alpha(i) && *v < LOG_ALPHA_FLOOR {
            *v = LOG_ALPHA_FLOOR;
            clamped.push(i);
        }
    }
    let log_likelihood = if clamped.is_empty() {
        opt.value
    } else {
        engine.value(&x)?
    };
    if !clamped.is_empty() {
        let names = layout.param_names(&data.covariate_names);
        let list: Vec<&str> = clamped.iter().map(|&i| names[i].as_str()).collect();
        warnings.push(format!(
            "increments at the zero boundary clamped to exp({LOG_ALPHA_FLOOR}) and held fixed for standard errors: {}",
            list.join(", ")
        ));
    }

    let free: Vec<usize> = (0..x.len()).filter(|i| !clamped.contains(i)).collect();
    let p = layout.n_beta;
    let mut beta_se = vec![None; p];
    if p > 0 {
        let full = -fd_hessian(&engine, &x, &free, config.hessian_step)?;
        // increments that drifted toward zero without reaching the floor carry
        // no information; treat them like clamped ones
        let keep: Vec<usize> = (0..free.len())
            .filter(|&k| !(layout.is_log_alpha(free[k]) && full[(k, k)] < NEGLIGIBLE_INFORMATION))
            .collect();
        if keep.len() < free.len() {
            let names = layout.param_names(&data.covariate_names);
            let list: Vec<&str> = (0..free.len())
                .filter(|k| !keep.contains(k))
                .map(|k| names[free[k]].as_str())
                .collect();
            warnings.push(format!(
                "increments with negligible information held fixed for standard errors: {}",
                list.join(", ")
            ));
        }
        let info = full.select_rows(&keep).select_columns(&keep);
        match info.cholesky() {
            Some(chol) => {
                let cov = chol.inverse();
                for (k, se) in beta_se.iter_mut().enumerate() {
                    let var = cov[(k, k)];
                    if var.is_finite() && var > 0.0 {
                        *se = Some(var.sqrt());
                    }
                }
            }
            None => warnings.push(
                "observed information is not positive definite; standard errors unavailable".into(),
            ),
        }
    }
    let beta_hat = x[..p].to_vec();
    let beta_ci = beta_hat
        .iter()
        .zip(&beta_se)
        .map(|(b, se)| se.map(|s| (b - WALD_Z * s, b + WALD_Z * s)))
        .collect();

    Ok(FitResult {
        model: config.model.clone(),
        tau: layout.tau,
        y_plus: layout.y_plus,
        policy: layout.policy,
        covariate_names: data.covariate_names.clone(),
        alpha_hat: layout.hazard(&x)?,
        beta_hat,
        beta_se,
        beta_ci,
        log_likelihood,
        converged: opt.converged,
        iterations: opt.iterations,
        warnings,
        params: x,
    })
}

/// Outcome of refitting after shifting every covariate vector by `-c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftReport {
    pub beta_max_diff: f64,
    pub log_likelihood_diff: f64,
    /// Largest relative deviation of `alpha_shifted / alpha` from `exp(beta'c)`.
    pub alpha_ratio_max_err: f64,
}

impl ShiftReport {
    pub fn passes(&self, beta_tol: f64, loglik_tol: f64, ratio_tol: f64) -> bool {
        self.beta_max_diff <= beta_tol
            && self.log_likelihood_diff <= loglik_tol
            && self.alpha_ratio_max_err <= ratio_tol
    }
}

pub fn covariate_shift_report(
    data: &Dataset,
    config: &FitConfig,
    c: &[f64],
) -> Result<ShiftReport> {
    let base = fit(data, config)?;
    let shifted = fit(&data.shifted(c)?, config)?;
    if !base.converged || !shifted.converged {
        return Err(Error::Input(
            "covariate shift check needs both fits to converge".into(),
        ));
    }
    let beta_max_diff = base
        .beta_hat
        .iter()
        .zip(&shifted.beta_hat)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let log_likelihood_diff = (base.log_likelihood - shifted.log_likelihood).abs();
    let scale = crate::hazard::linear_predictor(&base.beta_hat, c).exp();
    let layout = build_parametrization(data, config)?;
    let mut alpha_ratio_max_err = 0.0_f64;
    for i in layout.n_beta..layout.n_params() {
        if !layout.is_log_alpha(i)
            || base.params[i] <= LOG_ALPHA_FLOOR
            || shifted.params[i] <= LOG_ALPHA_FLOOR
        {
            continue;
        }
        let ratio = (shifted.params[i] - base.params[i]).exp();
        alpha_ratio_max_err = alpha_ratio_max_err.max((ratio / scale - 1.0).abs());
    }
    Ok(ShiftReport {
        beta_max_diff,
        log_likelihood_diff,
        alpha_ratio_max_err,
    })
}

/// Checks that shifting covariates `z -> z - c` leaves the maximized
/// log-likelihood and `beta` unchanged and rescales every increment by
/// `exp(beta'c)`.
pub fn covariate_shift_check(data: &Dataset, config: &FitConfig, c: &[f64]) -> Result<bool> {
    Ok(covariate_shift_report(data, config, c)?.passes(1e-4, 1e-6, 1e-4))
}
