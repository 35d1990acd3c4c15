use serde::{Deserialize, Serialize};

/// Knots used throughout the simulation study.
pub const STUDY_KNOTS: [u32; 7] = [1, 2, 4, 5, 7, 10, 18];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Model {
    /// One free increment per distinct uncensored duration.
    Semiparametric,
    /// One free level per knot interval plus a constant level past the last knot.
    Piecewise { knots: Vec<u32> },
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Semiparametric => "semiparametric",
            Model::Piecewise { .. } => "piecewise",
        }
    }

    pub fn study_piecewise() -> Self {
        Model::Piecewise {
            knots: STUDY_KNOTS.to_vec(),
        }
    }
}

/// Tail family used past the boundary when the data are censored.
///
/// Only `Geometric` and `Polynomial` carry a free parameter; the other two
/// families are evaluated at caller-supplied values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum TailFamily {
    #[default]
    Geometric,
    Polynomial,
    PowerDecay {
        base: f64,
        gamma: f64,
        lag: f64,
    },
    Weibull {
        theta: f64,
        shape: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub model: Model,
    /// Type I censoring value; required when any observation is censored.
    pub tau: Option<u32>,
    /// Upper limit of the normalizing sum; defaults to twice the largest
    /// pre-censoring duration.
    pub y_plus: Option<u32>,
    pub tail: TailFamily,
    /// Use the closed-form geometric series instead of truncating at `y_plus`.
    pub exact_tail: bool,
    /// Under censoring, drop piecewise knots beyond `tau` so that the constant
    /// tail level starts at the last knot not exceeding `tau`.
    pub truncate_knots_at_tau: bool,
    /// Relative change in log-likelihood between accepted iterates.
    pub rel_tol: f64,
    /// Max-norm of the log-likelihood gradient.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Central-difference Hessian step is `hessian_step * max(1, |theta_i|)`.
    pub hessian_step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            model: Model::Semiparametric,
            tau: None,
            y_plus: None,
            tail: TailFamily::Geometric,
            exact_tail: false,
            truncate_knots_at_tau: true,
            rel_tol: 1e-9,
            grad_tol: 1e-6,
            max_iter: 500,
            hessian_step: f64::EPSILON.cbrt(),
        }
    }
}

impl FitConfig {
    pub fn semiparametric(tau: Option<u32>) -> Self {
        Self {
            tau,
            ..Self::default()
        }
    }

    pub fn piecewise(knots: Vec<u32>, tau: Option<u32>) -> Self {
        Self {
            model: Model::Piecewise { knots },
            tau,
            ..Self::default()
        }
    }
}
