use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dgp::DgpSpec;
use crate::error::{Error, Result};

/// Durations longer than this are treated as a runaway hazard.
pub const MAX_DURATION: u64 = 10_000_000;

/// Survivor values below this end the mean-duration sum.
const SURVIVOR_CUTOFF: f64 = 1e-12;

/// A discrete hazard `P(T = t | T >= t)` for `t >= 1`.
pub trait DiscreteHazard {
    fn hazard(&self, t: u32) -> f64;
}

impl<F: Fn(u32) -> f64> DiscreteHazard for F {
    fn hazard(&self, t: u32) -> f64 {
        self(t)
    }
}

/// Hazard of a DGP at a fixed covariate value, tabulated up to a length and
/// computed on demand beyond it.
#[derive(Debug, Clone)]
pub struct ConditionalHazard<'a> {
    dgp: &'a DgpSpec,
    x: f64,
    table: Vec<f64>,
}

impl<'a> ConditionalHazard<'a> {
    pub fn new(dgp: &'a DgpSpec, x: f64, len: u32) -> Self {
        let table = (0..=len).map(|t| dgp.hazard_prob(t, x)).collect();
        Self { dgp, x, table }
    }
}

impl DiscreteHazard for ConditionalHazard<'_> {
    #[inline]
    fn hazard(&self, t: u32) -> f64 {
        match self.table.get(t as usize) {
            Some(&h) => h,
            None => self.dgp.hazard_prob(t, self.x),
        }
    }
}

/// Draws a total duration `T >= 1` by sequential Bernoulli trials.
pub fn sample_total_duration<H: DiscreteHazard + ?Sized, R: Rng + ?Sized>(
    h: &H,
    rng: &mut R,
) -> Result<u64> {
    let mut t: u64 = 1;
    loop {
        if rng.random::<f64>() < h.hazard(t as u32) {
            return Ok(t);
        }
        t += 1;
        if t > MAX_DURATION {
            return Err(Error::RunawayDuration(t));
        }
    }
}

/// Which recurrence time of the renewal process is recorded at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recurrence {
    /// Time since the last renewal, `M - S_{K-1}`; supports 0.
    #[default]
    Backward,
    /// Time until the next renewal, `S_K - M`; supports 1, 2, ...
    Forward,
}

/// Runs a renewal process until its partial sum first exceeds `horizon` and
/// returns the recurrence time at the horizon.
pub fn sample_current_duration_renewal<H: DiscreteHazard + ?Sized, R: Rng + ?Sized>(
    h: &H,
    horizon: u64,
    recurrence: Recurrence,
    rng: &mut R,
) -> Result<u64> {
    let mut s: u64 = 0;
    loop {
        let t = sample_total_duration(h, rng)?;
        if s + t > horizon {
            return Ok(match recurrence {
                Recurrence::Backward => horizon - s,
                Recurrence::Forward => s + t - horizon,
            });
        }
        s += t;
    }
}

/// Inverse-CDF sampler for the length-biased current duration
/// `g(y) = P(T > y) / E[T]`.
#[derive(Debug, Clone)]
pub struct LengthBiased {
    /// `P(Y <= y)` for `y = 0..`.
    cdf: Vec<f64>,
    mean: f64,
}

impl LengthBiased {
    pub fn new<H: DiscreteHazard + ?Sized>(h: &H) -> Result<Self> {
        let mut survivors = vec![1.0];
        let mut log_surv = 0.0_f64;
        let mut t: u64 = 1;
        loop {
            log_surv += (-h.hazard(t as u32)).ln_1p();
            let s = log_surv.exp();
            if s < SURVIVOR_CUTOFF {
                break;
            }
            survivors.push(s);
            t += 1;
            if t > MAX_DURATION {
                return Err(Error::NonConvergentMean(survivors.len()));
            }
        }
        let mean: f64 = survivors.iter().sum();
        let mut acc = 0.0;
        let cdf = survivors
            .iter()
            .map(|s| {
                acc += s / mean;
                acc
            })
            .collect();
        Ok(Self { cdf, mean })
    }

    /// `E[T] = sum_{y >= 0} P(T > y)`.
    pub fn mean_total(&self) -> f64 {
        self.mean
    }

    pub fn pmf(&self, y: u64) -> f64 {
        let y = y as usize;
        match y {
            0 => self.cdf.first().copied().unwrap_or(0.0),
            _ if y < self.cdf.len() => self.cdf[y] - self.cdf[y - 1],
            _ => 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c <= u);
        i.min(self.cdf.len() - 1) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_duration_gives_uniform_current_duration() {
        let c = 6u32;
        let h = move |t: u32| if t >= c { 1.0 } else { 0.0 };
        let lb = LengthBiased::new(&h).unwrap();
        assert!((lb.mean_total() - 6.0).abs() < 1e-12);
        for y in 0..6 {
            assert!((lb.pmf(y) - 1.0 / 6.0).abs() < 1e-12);
        }
        assert_eq!(lb.pmf(6), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(sample_total_duration(&h, &mut rng).unwrap(), 6);
            let y =
                sample_current_duration_renewal(&h, 1000, Recurrence::Backward, &mut rng).unwrap();
            assert_eq!(y, 1000 % 6);
            assert!(lb.sample(&mut rng) < 6);
        }
    }

    #[test]
    fn geometric_length_biased_closed_form() {
        let dgp = DgpSpec::geometric(0.2, 0.5).unwrap();
        for x in [0.0, 1.0] {
            let lam = dgp.hazard_prob(1, x);
            let lb = LengthBiased::new(&ConditionalHazard::new(&dgp, x, 64)).unwrap();
            assert!((lb.pmf(0) - 1.0 / lb.mean_total()).abs() < 1e-12);
            for y in 0..40 {
                let want = lam * (1.0 - lam).powi(y as i32);
                assert!((lb.pmf(y) - want).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn runaway_hazard_errors() {
        let h = |_: u32| 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_total_duration(&h, &mut rng),
            Err(Error::RunawayDuration(_))
        ));
        assert!(matches!(
            LengthBiased::new(&h),
            Err(Error::NonConvergentMean(_))
        ));
    }

    #[test]
    fn forward_recurrence_is_positive() {
        let dgp = DgpSpec::geometric(0.2, 0.5).unwrap();
        let h = ConditionalHazard::new(&dgp, 0.0, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            assert!(
                sample_current_duration_renewal(&h, 2000, Recurrence::Forward, &mut rng).unwrap()
                    >= 1
            );
        }
    }
}
