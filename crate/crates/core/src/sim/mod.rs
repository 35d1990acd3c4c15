//! Current-duration data from an equilibrium renewal process.
//!
//! Each subject gets a binary covariate and a current duration read off a
//! renewal process at a large horizon `M`. Every subject draws from its own
//! ChaCha8 stream (`seed`, stream = subject index), so datasets do not depend
//! on thread scheduling.

mod dgp;
mod sampler;
pub mod seed;

pub use dgp::{
    reference_scenario, reference_scenarios, DgpHazard, DgpSpec, Scenario, REFERENCE_ALPHA0,
    REFERENCE_BETA1, TAU_GRID,
};
pub use sampler::{
    sample_current_duration_renewal, sample_total_duration, ConditionalHazard, DiscreteHazard,
    LengthBiased, Recurrence, MAX_DURATION,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{Dataset, Observation};

pub const DEFAULT_HORIZON: u64 = 10_000;

/// Hazard values precomputed per covariate level; longer durations fall back
/// to direct evaluation.
const HAZARD_TABLE_LEN: u32 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    #[default]
    Renewal,
    /// Direct inverse-CDF draws from the length-biased distribution.
    LengthBiasedOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub tau: Option<u32>,
    /// Renewal horizon `M`.
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    pub seed: u64,
    #[serde(default)]
    pub sampler: Sampler,
    #[serde(default)]
    pub recurrence: Recurrence,
}

fn default_horizon() -> u64 {
    DEFAULT_HORIZON
}

impl SimConfig {
    pub fn new(n: usize, tau: Option<u32>, seed: u64) -> Self {
        Self {
            n,
            tau,
            horizon: DEFAULT_HORIZON,
            seed,
            sampler: Sampler::Renewal,
            recurrence: Recurrence::Backward,
        }
    }

    /// Requires `n >= 1`, `tau >= 1` and `M >= 100 / theta`, a rough guard that
    /// the process has reached equilibrium by the horizon.
    pub fn validate(&self, dgp: &DgpSpec) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSpec("sample size must be at least 1".into()));
        }
        if self.tau == Some(0) {
            return Err(Error::InvalidSpec(
                "censoring value must be at least 1".into(),
            ));
        }
        if self.horizon > u64::from(u32::MAX) {
            return Err(Error::InvalidSpec(format!(
                "horizon {} does not fit a 32-bit duration",
                self.horizon
            )));
        }
        let min = 100.0 / dgp.theta();
        if (self.horizon as f64) < min {
            return Err(Error::InvalidSpec(format!(
                "horizon {} is below 100/theta = {min:.0}; the renewal process may not be in equilibrium",
                self.horizon
            )));
        }
        Ok(())
    }
}

/// Right-censors every duration above `tau` at `tau` and returns the censored
/// fraction. The pre-censoring maximum is carried over.
pub fn apply_type1_censoring(data: &Dataset, tau: u32) -> Result<(Dataset, f64)> {
    if tau == 0 {
        return Err(Error::InvalidSpec(
            "censoring value must be at least 1".into(),
        ));
    }
    let observations: Vec<Observation> = data
        .observations
        .iter()
        .map(|o| {
            if o.y > tau {
                Observation::new(tau, false, o.z.clone())
            } else {
                o.clone()
            }
        })
        .collect();
    let out = Dataset {
        observations,
        ..data.clone()
    };
    let fraction = out.censored_fraction();
    Ok((out, fraction))
}

/// Draws `n` uncensored subjects; `sim.tau` is ignored.
pub fn simulate_uncensored(dgp: &DgpSpec, sim: &SimConfig) -> Result<Dataset> {
    dgp.validate()?;
    sim.validate(dgp)?;
    let hazards = [
        ConditionalHazard::new(dgp, 0.0, HAZARD_TABLE_LEN),
        ConditionalHazard::new(dgp, 1.0, HAZARD_TABLE_LEN),
    ];
    let oracles = match sim.sampler {
        Sampler::Renewal => None,
        Sampler::LengthBiasedOracle => {
            let lb = [
                LengthBiased::new(&hazards[0])?,
                LengthBiased::new(&hazards[1])?,
            ];
            if sim.recurrence == Recurrence::Forward {
                return Err(Error::InvalidSpec(
                    "the length-biased sampler only draws backward recurrence times".into(),
                ));
            }
            Some(lb)
        }
    };

    let observations = (0..sim.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = subject_rng(sim.seed, i as u64);
            let x = usize::from(rng.random_bool(dgp.covariate_p));
            let y = match &oracles {
                Some(lb) => lb[x].sample(&mut rng),
                None => sample_current_duration_renewal(
                    &hazards[x],
                    sim.horizon,
                    sim.recurrence,
                    &mut rng,
                )?,
            };
            let y = u32::try_from(y).map_err(|_| Error::RunawayDuration(y))?;
            Ok(Observation::new(y, true, vec![x as f64]))
        })
        .collect::<Result<Vec<_>>>()?;

    let max = observations.iter().map(|o| o.y).max();
    Ok(Dataset {
        observations,
        covariate_names: vec!["x".into()],
        pre_censoring_max: max,
    })
}

/// Simulates `sim.n` subjects and applies censoring at `sim.tau` if set.
pub fn generate_dataset(dgp: &DgpSpec, sim: &SimConfig) -> Result<Dataset> {
    let data = simulate_uncensored(dgp, sim)?;
    match sim.tau {
        Some(tau) => Ok(apply_type1_censoring(&data, tau)?.0),
        None => Ok(data),
    }
}

/// Generator for subject `index`: ChaCha8 keyed by `seed`, on stream `index`.
pub fn subject_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
