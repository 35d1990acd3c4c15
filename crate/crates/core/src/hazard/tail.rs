use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::count;

/// Hazard increments beyond the tail boundary `b`.
///
/// Tail families are evaluated at the offset `o = y - b >= 1` (or at the
/// absolute duration `y` for the Weibull family, whose increments are defined
/// on the original time scale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum TailSpec<T = f64> {
    /// Constant increment `alpha` for every `y > b`: a geometric tail.
    Geometric { alpha: T },
    /// `alpha_y = base^(gamma * (o - lag))`. `lag = 1` puts a zero exponent
    /// at the first tail point; `lag = 0` starts the decay immediately.
    PowerDecay { base: T, gamma: T, lag: T },
    /// Discrete Weibull increments `theta * (y^shape - (y-1)^shape)`.
    Weibull { theta: T, shape: T },
    /// `alpha_y = o^gamma`, so the first tail point always has increment 1.
    Polynomial { gamma: T },
    /// `alpha_y = +inf` beyond `b`: no mass past the last observed value.
    Infinite,
}

impl<T: Float> TailSpec<T> {
    pub fn name(&self) -> &'static str {
        match self {
            TailSpec::Geometric { .. } => "geometric",
            TailSpec::PowerDecay { .. } => "power-decay",
            TailSpec::Weibull { .. } => "weibull",
            TailSpec::Polynomial { .. } => "polynomial",
            TailSpec::Infinite => "infinite",
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidSpec(format!("{} tail: {msg}", self.name())));
        match *self {
            TailSpec::Geometric { alpha } => {
                if !(alpha >= T::zero() && alpha.is_finite()) {
                    return bad("alpha must be finite and nonnegative");
                }
            }
            TailSpec::PowerDecay { base, gamma, lag } => {
                if !(base >= T::zero() && base.is_finite() && gamma.is_finite() && lag.is_finite())
                {
                    return bad("base must be nonnegative, gamma and lag finite");
                }
            }
            TailSpec::Weibull { theta, shape } => {
                if !(theta > T::zero()
                    && shape > T::zero()
                    && theta.is_finite()
                    && shape.is_finite())
                {
                    return bad("theta and shape must be positive");
                }
            }
            TailSpec::Polynomial { gamma } => {
                if !gamma.is_finite() {
                    return bad("gamma must be finite");
                }
            }
            TailSpec::Infinite => {}
        }
        Ok(())
    }

    /// Increment at absolute duration `y`, which lies `offset >= 1` past the boundary.
    pub fn alpha(&self, y: u32, offset: u32) -> T {
        debug_assert!(offset >= 1);
        match *self {
            TailSpec::Geometric { alpha } => alpha,
            TailSpec::PowerDecay { base, gamma, lag } => {
                base.powf(gamma * (count::<T>(offset) - lag))
            }
            TailSpec::Weibull { theta, shape } => weibull_increment(theta, shape, y),
            TailSpec::Polynomial { gamma } => count::<T>(offset).powf(gamma),
            TailSpec::Infinite => T::infinity(),
        }
    }

    /// Sum of tail increments for offsets `1..=offset` ending at absolute `y`.
    pub(crate) fn cumulative(&self, y: u32, offset: u32) -> T {
        if offset == 0 {
            return T::zero();
        }
        match *self {
            TailSpec::Geometric { alpha } => alpha * count(offset),
            TailSpec::Weibull { theta, shape } => {
                let start = y - offset;
                theta * (count::<T>(y).powf(shape) - count::<T>(start).powf(shape))
            }
            TailSpec::Infinite => T::infinity(),
            _ => (1..=offset).fold(T::zero(), |acc, o| acc + self.alpha(y - offset + o, o)),
        }
    }
}

/// `theta * (t^shape - (t-1)^shape)` for `t >= 1`.
pub fn weibull_increment<T: Float>(theta: T, shape: T, t: u32) -> T {
    if t == 0 {
        return T::zero();
    }
    let hi = count::<T>(t).powf(shape);
    let lo = count::<T>(t - 1).powf(shape);
    theta * (hi - lo).max(T::zero())
}
