use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hazard::{weibull_increment, Baseline, HazardSpec, TailSpec};
use crate::likelihood::STUDY_KNOTS;

fn study_knots() -> Vec<u32> {
    STUDY_KNOTS.to_vec()
}

fn half() -> f64 {
    0.5
}

/// Baseline hazard increments of a data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DgpHazard {
    /// `alpha_t = theta`.
    Geometric { theta: f64 },
    /// `alpha_t = theta * alpha0 * t_k^(alpha0 - 1)` for `t` in `(t_{k-1}, t_k]`,
    /// held at the last level past the final knot.
    PiecewiseGeometric {
        theta: f64,
        alpha0: f64,
        #[serde(default = "study_knots")]
        knots: Vec<u32>,
    },
    /// `alpha_t = theta * (t^alpha0 - (t-1)^alpha0)`, so `A_t = theta * t^alpha0`.
    DiscreteWeibull { theta: f64, alpha0: f64 },
}

/// A data-generating process: baseline increments, a binary covariate with
/// success probability `covariate_p`, and its log hazard ratio `beta1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub hazard: DgpHazard,
    #[serde(default = "half")]
    pub beta1: f64,
    #[serde(default = "half")]
    pub covariate_p: f64,
}

impl DgpSpec {
    pub fn new(hazard: DgpHazard, beta1: f64) -> Result<Self> {
        let spec = Self {
            hazard,
            beta1,
            covariate_p: 0.5,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn geometric(theta: f64, beta1: f64) -> Result<Self> {
        Self::new(DgpHazard::Geometric { theta }, beta1)
    }

    pub fn piecewise_geometric(theta: f64, alpha0: f64, beta1: f64) -> Result<Self> {
        Self::new(
            DgpHazard::PiecewiseGeometric {
                theta,
                alpha0,
                knots: study_knots(),
            },
            beta1,
        )
    }

    pub fn discrete_weibull(theta: f64, alpha0: f64, beta1: f64) -> Result<Self> {
        Self::new(DgpHazard::DiscreteWeibull { theta, alpha0 }, beta1)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!(
                    "{what} must be positive and finite, got {v}"
                )))
            }
        };
        positive(self.theta(), "theta")?;
        match &self.hazard {
            DgpHazard::Geometric { .. } => {}
            DgpHazard::PiecewiseGeometric { alpha0, knots, .. } => {
                positive(*alpha0, "alpha0")?;
                if knots.is_empty() || knots[0] == 0 || knots.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidSpec(
                        "knots must be strictly increasing positive integers".into(),
                    ));
                }
            }
            DgpHazard::DiscreteWeibull { alpha0, .. } => positive(*alpha0, "alpha0")?,
        }
        if !self.beta1.is_finite() {
            return Err(Error::InvalidSpec("beta1 must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.covariate_p) {
            return Err(Error::InvalidSpec(format!(
                "covariate probability {} outside [0, 1]",
                self.covariate_p
            )));
        }
        Ok(())
    }

    pub fn theta(&self) -> f64 {
        match self.hazard {
            DgpHazard::Geometric { theta }
            | DgpHazard::PiecewiseGeometric { theta, .. }
            | DgpHazard::DiscreteWeibull { theta, .. } => theta,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.hazard {
            DgpHazard::Geometric { .. } => "geometric",
            DgpHazard::PiecewiseGeometric { .. } => "piecewise-geometric",
            DgpHazard::DiscreteWeibull { .. } => "discrete-weibull",
        }
    }

    /// Baseline increment `alpha_t` for `t >= 1`.
    pub fn hazard_increment(&self, t: u32) -> f64 {
        if t == 0 {
            return 0.0;
        }
        match &self.hazard {
            DgpHazard::Geometric { theta } => *theta,
            DgpHazard::PiecewiseGeometric {
                theta,
                alpha0,
                knots,
            } => {
                let k = knots.partition_point(|&tk| tk < t).min(knots.len() - 1);
                theta * alpha0 * f64::from(knots[k]).powf(alpha0 - 1.0)
            }
            DgpHazard::DiscreteWeibull { theta, alpha0 } => weibull_increment(*theta, *alpha0, t),
        }
    }

    /// `exp(beta1 * x)`.
    pub fn eta(&self, x: f64) -> f64 {
        (self.beta1 * x).exp()
    }

    /// Discrete hazard `1 - exp(-alpha_t * eta)` for covariate value `x`.
    pub fn hazard_prob(&self, t: u32, x: f64) -> f64 {
        -(-self.hazard_increment(t) * self.eta(x)).exp_m1()
    }

    /// The same increments as a [`HazardSpec`].
    pub fn to_hazard_spec(&self) -> Result<HazardSpec<f64>> {
        match &self.hazard {
            DgpHazard::Geometric { theta } => HazardSpec::geometric(*theta),
            DgpHazard::PiecewiseGeometric { knots, .. } => {
                let levels: Vec<f64> = knots.iter().map(|&k| self.hazard_increment(k)).collect();
                let last = *levels.last().expect("validated knots");
                HazardSpec::piecewise(knots.clone(), levels, TailSpec::Geometric { alpha: last })
            }
            DgpHazard::DiscreteWeibull { theta, alpha0 } => HazardSpec::new(
                Baseline::Points {
                    support: Vec::new(),
                    alphas: Vec::new(),
                },
                TailSpec::Weibull {
                    theta: *theta,
                    shape: *alpha0,
                },
            ),
        }
    }
}

/// A named data-generating process from the reference simulation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub dgp: DgpSpec,
}

/// Censoring values of the reference grid; `None` is no censoring.
pub const TAU_GRID: [Option<u32>; 6] = [Some(3), Some(6), Some(12), Some(24), Some(36), None];

/// Shape parameter shared by the piecewise-geometric and Weibull scenarios.
pub const REFERENCE_ALPHA0: f64 = 0.8;
pub const REFERENCE_BETA1: f64 = 0.5;

/// The five reference scenarios. Lower `theta` means longer durations and so
/// more censoring at a given `tau`.
pub fn reference_scenarios() -> Vec<Scenario> {
    let (a0, b) = (REFERENCE_ALPHA0, REFERENCE_BETA1);
    let mk = |name: &str, dgp: Result<DgpSpec>| Scenario {
        name: name.into(),
        dgp: dgp.expect("valid constants"),
    };
    vec![
        mk("geometric", DgpSpec::geometric(0.2, b)),
        mk(
            "piecewise-geometric",
            DgpSpec::piecewise_geometric(3.0 / 8.0, a0, b),
        ),
        mk(
            "piecewise-geometric-high",
            DgpSpec::piecewise_geometric(3.0 / 16.0, a0, b),
        ),
        mk("discrete-weibull", DgpSpec::discrete_weibull(0.25, a0, b)),
        mk(
            "discrete-weibull-high",
            DgpSpec::discrete_weibull(0.125, a0, b),
        ),
    ]
}

pub fn reference_scenario(name: &str) -> Option<Scenario> {
    reference_scenarios().into_iter().find(|s| s.name == name)
}
