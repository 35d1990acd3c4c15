use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One recorded current duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Grouped current duration; equals the censoring value when censored.
    pub y: u32,
    /// `true` when `y` is the exact value, `false` when it is censored at `y`.
    pub uncensored: bool,
    pub z: Vec<f64>,
}

impl Observation {
    pub fn new(y: u32, uncensored: bool, z: Vec<f64>) -> Self {
        Self { y, uncensored, z }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub observations: Vec<Observation>,
    pub covariate_names: Vec<String>,
    /// Largest current duration before administrative censoring, when known.
    /// Drives the default truncation point.
    #[serde(default)]
    pub pre_censoring_max: Option<u32>,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>, covariate_names: Vec<String>) -> Result<Self> {
        let data = Self {
            observations,
            covariate_names,
            pre_censoring_max: None,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn with_pre_censoring_max(mut self, max: Option<u32>) -> Self {
        self.pre_censoring_max = max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.covariate_names.len();
        for (i, obs) in self.observations.iter().enumerate() {
            if obs.z.len() != p {
                return Err(Error::Input(format!(
                    "observation {i} has {} covariates, expected {p}",
                    obs.z.len()
                )));
            }
            if obs.z.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input(format!(
                    "observation {i} has a non-finite covariate"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn max_y(&self) -> Option<u32> {
        self.observations.iter().map(|o| o.y).max()
    }

    pub fn n_censored(&self) -> usize {
        self.observations.iter().filter(|o| !o.uncensored).count()
    }

    pub fn censored_fraction(&self) -> f64 {
        if self.observations.is_empty() {
            return 0.0;
        }
        self.n_censored() as f64 / self.observations.len() as f64
    }

    pub fn mean_y(&self) -> f64 {
        if self.observations.is_empty() {
            return 0.0;
        }
        self.observations.iter().map(|o| o.y as f64).sum::<f64>() / self.observations.len() as f64
    }

    /// Same data with every covariate vector replaced by `z - c`.
    pub fn shifted(&self, c: &[f64]) -> Result<Self> {
        if c.len() != self.dimension() {
            return Err(Error::Input(format!(
                "shift has length {}, expected {}",
                c.len(),
                self.dimension()
            )));
        }
        let mut out = self.clone();
        for obs in &mut out.observations {
            for (zi, ci) in obs.z.iter_mut().zip(c) {
                *zi -= ci;
            }
        }
        Ok(out)
    }
}
