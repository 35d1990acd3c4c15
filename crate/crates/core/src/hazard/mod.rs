//! Discrete baseline hazards and the current-duration distribution they imply.
//!
//! The total duration `T` has discrete hazard
//! `P(T = y | T >= y, z) = 1 - exp(-alpha_y * exp(beta'z))` with `alpha_0 = 0`.
//! A cross-sectionally sampled current duration `Y` has pmf proportional to
//! the survivor function of `T`:
//!
//! ```text
//! g(y | z) = exp(-eta * A_y) / sum_{k >= 0} exp(-eta * A_k),   eta = exp(beta'z),
//! A_y = alpha_0 + ... + alpha_y
//! ```
//!
//! Increments up to the *tail boundary* come from a [`Baseline`]; past it they
//! come from a [`TailSpec`]. Everything here is generic over the float type.

mod dist;
mod tail;

pub use dist::{cd_pmf, cd_survivor, log_denominator, CurrentDuration, TruncationPolicy};
pub use tail::{weibull_increment, TailSpec};

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::count;

/// Increments up to and including the tail boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Baseline<T = f64> {
    /// Free increments at isolated support points; zero elsewhere.
    Points { support: Vec<u32>, alphas: Vec<T> },
    /// One level per knot interval `(t_{k-1}, t_k]` with `t_0 = 0`.
    Piecewise { knots: Vec<u32>, levels: Vec<T> },
}

/// Baseline increments plus a tail family: the nonparametric part of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardSpec<T = f64> {
    baseline: Baseline<T>,
    tail: TailSpec<T>,
}

fn check_increasing(xs: &[u32], what: &str) -> Result<()> {
    if xs.first() == Some(&0) {
        return Err(Error::InvalidSpec(format!(
            "{what} must be positive (alpha_0 is fixed at 0)"
        )));
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSpec(format!(
            "{what} must be strictly increasing"
        )));
    }
    Ok(())
}

fn check_alphas<T: Float>(xs: &[T]) -> Result<()> {
    if xs.iter().any(|a| !(*a >= T::zero() && a.is_finite())) {
        return Err(Error::InvalidSpec(
            "hazard increments must be finite and nonnegative".into(),
        ));
    }
    Ok(())
}

impl<T: Float> HazardSpec<T> {
    pub fn new(baseline: Baseline<T>, tail: TailSpec<T>) -> Result<Self> {
        match &baseline {
            Baseline::Points { support, alphas } => {
                check_increasing(support, "support points")?;
                if support.len() != alphas.len() {
                    return Err(Error::InvalidSpec(format!(
                        "{} support points but {} increments",
                        support.len(),
                        alphas.len()
                    )));
                }
                check_alphas(alphas)?;
            }
            Baseline::Piecewise { knots, levels } => {
                check_increasing(knots, "knots")?;
                if knots.is_empty() {
                    return Err(Error::InvalidSpec(
                        "piecewise baseline needs at least one knot".into(),
                    ));
                }
                if knots.len() != levels.len() {
                    return Err(Error::InvalidSpec(format!(
                        "{} knots but {} levels",
                        knots.len(),
                        levels.len()
                    )));
                }
                check_alphas(levels)?;
            }
        }
        tail.validate()?;
        Ok(Self { baseline, tail })
    }

    pub fn points(support: Vec<u32>, alphas: Vec<T>, tail: TailSpec<T>) -> Result<Self> {
        Self::new(Baseline::Points { support, alphas }, tail)
    }

    pub fn piecewise(knots: Vec<u32>, levels: Vec<T>, tail: TailSpec<T>) -> Result<Self> {
        Self::new(Baseline::Piecewise { knots, levels }, tail)
    }

    /// Constant increment `alpha` for every `y >= 1`.
    pub fn geometric(alpha: T) -> Result<Self> {
        Self::points(Vec::new(), Vec::new(), TailSpec::Geometric { alpha })
    }

    pub fn baseline(&self) -> &Baseline<T> {
        &self.baseline
    }

    pub fn tail(&self) -> &TailSpec<T> {
        &self.tail
    }

    /// Largest support point or knot; the tail family governs `y > boundary`.
    pub fn boundary(&self) -> u32 {
        match &self.baseline {
            Baseline::Points { support, .. } => support.last().copied().unwrap_or(0),
            Baseline::Piecewise { knots, .. } => knots.last().copied().unwrap_or(0),
        }
    }

    /// `alpha_y`; `alpha_0 = 0`, `+inf` past the boundary under an infinite tail.
    pub fn alpha_at(&self, y: u32) -> T {
        if y == 0 {
            return T::zero();
        }
        let b = self.boundary();
        if y > b {
            return self.tail.alpha(y, y - b);
        }
        match &self.baseline {
            Baseline::Points { support, alphas } => match support.binary_search(&y) {
                Ok(i) => alphas[i],
                Err(_) => T::zero(),
            },
            Baseline::Piecewise { knots, levels } => {
                let k = knots.partition_point(|&t| t < y);
                levels[k]
            }
        }
    }

    /// `A_y = alpha_0 + ... + alpha_y`.
    pub fn cumulative_hazard(&self, y: u32) -> T {
        let b = self.boundary();
        let upto = y.min(b);
        let base = match &self.baseline {
            Baseline::Points { support, alphas } => support
                .iter()
                .zip(alphas)
                .take_while(|(s, _)| **s <= upto)
                .fold(T::zero(), |acc, (_, a)| acc + *a),
            Baseline::Piecewise { knots, levels } => {
                let mut acc = T::zero();
                let mut prev = 0;
                for (&t, &level) in knots.iter().zip(levels) {
                    if upto <= prev {
                        break;
                    }
                    acc = acc + level * count(upto.min(t) - prev);
                    prev = t;
                }
                acc
            }
        };
        if y > b {
            base + self.tail.cumulative(y, y - b)
        } else {
            base
        }
    }

    /// Same baseline with a different tail.
    pub fn with_tail(&self, tail: TailSpec<T>) -> Result<Self> {
        Self::new(self.baseline.clone(), tail)
    }

    /// Every increment (baseline and tail) multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        let baseline = match &self.baseline {
            Baseline::Points { support, alphas } => Baseline::Points {
                support: support.clone(),
                alphas: alphas.iter().map(|a| *a * factor).collect(),
            },
            Baseline::Piecewise { knots, levels } => Baseline::Piecewise {
                knots: knots.clone(),
                levels: levels.iter().map(|a| *a * factor).collect(),
            },
        };
        let tail = match self.tail {
            TailSpec::Geometric { alpha } => TailSpec::Geometric {
                alpha: alpha * factor,
            },
            TailSpec::Weibull { theta, shape } => TailSpec::Weibull {
                theta: theta * factor,
                shape,
            },
            TailSpec::Infinite => TailSpec::Infinite,
            other => {
                return Err(Error::InvalidSpec(format!(
                    "{} tail cannot be rescaled",
                    other.name()
                )));
            }
        };
        Self::new(baseline, tail)
    }
}

/// `beta'z`.
pub fn linear_predictor<T: Float>(beta: &[T], z: &[T]) -> T {
    debug_assert_eq!(beta.len(), z.len());
    beta.iter()
        .zip(z)
        .fold(T::zero(), |acc, (b, x)| acc + *b * *x)
}

/// Survivor function of the total duration, `P(T > y | z) = exp(-eta * A_y)`.
pub fn survival_t<T: Float>(spec: &HazardSpec<T>, beta: &[T], z: &[T], y: u32) -> T {
    let eta = linear_predictor(beta, z).exp();
    let a = spec.cumulative_hazard(y);
    if a == T::zero() {
        return T::one();
    }
    (-(eta * a)).exp()
}

/// Discrete hazard `P(T = y | T >= y, z) = 1 - exp(-alpha_y * eta)`.
pub fn hazard_prob<T: Float>(spec: &HazardSpec<T>, beta: &[T], z: &[T], y: u32) -> T {
    let alpha = spec.alpha_at(y);
    if alpha == T::zero() {
        return T::zero();
    }
    let eta = linear_predictor(beta, z).exp();
    -(-(alpha * eta)).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::LN_2;

    const KNOTS: [u32; 7] = [1, 2, 4, 5, 7, 10, 18];

    fn piecewise_b(theta: f64, shape: f64) -> HazardSpec {
        let levels: Vec<f64> = KNOTS
            .iter()
            .map(|&t| theta * shape * (t as f64).powf(shape - 1.0))
            .collect();
        let last = *levels.last().unwrap();
        HazardSpec::piecewise(KNOTS.to_vec(), levels, TailSpec::Geometric { alpha: last }).unwrap()
    }

    #[test]
    fn alpha_zero_is_always_zero() {
        let specs = [
            HazardSpec::geometric(0.3).unwrap(),
            piecewise_b(0.375, 0.8),
            HazardSpec::points(vec![1, 3], vec![0.2, 0.4], TailSpec::Infinite).unwrap(),
        ];
        for s in &specs {
            assert_eq!(s.alpha_at(0), 0.0);
            assert_eq!(s.cumulative_hazard(0), 0.0);
        }
    }

    #[test]
    fn geometric_tail_is_constant_past_boundary() {
        let s = HazardSpec::points(
            vec![1, 2, 6],
            vec![0.1, 0.2, 0.5],
            TailSpec::Geometric { alpha: 0.3 },
        )
        .unwrap();
        assert_eq!(s.boundary(), 6);
        assert_eq!(s.alpha_at(6 + 5), 0.3);
        assert_eq!(s.alpha_at(4), 0.0);
        assert_eq!(s.alpha_at(2), 0.2);
    }

    #[test]
    fn polynomial_tail_uses_offset_from_boundary() {
        // boundary 4, y = 7 sits at offset 3: 3^2
        let s =
            HazardSpec::points(vec![4], vec![0.2], TailSpec::Polynomial { gamma: 2.0 }).unwrap();
        assert_eq!(s.alpha_at(5), 1.0);
        assert_relative_eq!(s.alpha_at(7), 9.0);
        assert_relative_eq!(s.cumulative_hazard(7), 0.2 + 1.0 + 4.0 + 9.0);
    }

    #[test]
    fn power_decay_lag_convention() {
        let lag1 = TailSpec::PowerDecay {
            base: 0.5,
            gamma: 2.0,
            lag: 1.0,
        };
        let lag0 = TailSpec::PowerDecay {
            base: 0.5,
            gamma: 2.0,
            lag: 0.0,
        };
        assert_relative_eq!(lag1.alpha(11, 1), 1.0);
        assert_relative_eq!(lag1.alpha(12, 2), 0.25);
        assert_relative_eq!(lag0.alpha(11, 1), 0.25);
    }

    #[test]
    fn infinite_tail() {
        let s = HazardSpec::points(vec![1, 3], vec![0.2, 0.4], TailSpec::Infinite).unwrap();
        assert_eq!(s.alpha_at(4), f64::INFINITY);
        assert_eq!(s.cumulative_hazard(4), f64::INFINITY);
        assert_eq!(survival_t(&s, &[], &[], 4), 0.0);
    }

    #[test]
    fn cumulative_constant_ln2() {
        let s = HazardSpec::geometric(LN_2).unwrap();
        assert_relative_eq!(s.cumulative_hazard(3), 3.0 * LN_2, epsilon = 1e-15);
    }

    #[test]
    fn cumulative_weibull_telescopes() {
        let s = HazardSpec::points(
            vec![],
            vec![],
            TailSpec::Weibull {
                theta: 0.25,
                shape: 0.8,
            },
        )
        .unwrap();
        for t in [1_u32, 2, 7, 30, 500] {
            assert_relative_eq!(
                s.cumulative_hazard(t),
                0.25 * (t as f64).powf(0.8),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn cumulative_piecewise_matches_loop() {
        let s = piecewise_b(0.375, 0.8);
        for y in 0..60 {
            let brute: f64 = (1..=y).map(|j| s.alpha_at(j)).sum();
            assert_relative_eq!(s.cumulative_hazard(y), brute, max_relative = 1e-13);
        }
        // y = 4 by hand: levels of (0,1], (1,2] and two points of (2,4]
        let l = |t: f64| 0.375 * 0.8 * t.powf(-0.2);
        assert_relative_eq!(
            s.cumulative_hazard(4),
            l(1.0) + l(2.0) + 2.0 * l(4.0),
            max_relative = 1e-14
        );
    }

    #[test]
    fn survival_examples() {
        let w = HazardSpec::points(
            vec![],
            vec![],
            TailSpec::Weibull {
                theta: 0.25,
                shape: 0.8,
            },
        )
        .unwrap();
        assert_eq!(survival_t(&w, &[0.5], &[1.0], 0), 1.0);
        assert_relative_eq!(
            survival_t(&w, &[0.5], &[0.0], 1),
            (-0.25_f64).exp(),
            max_relative = 1e-14
        );
        let g = HazardSpec::geometric(LN_2).unwrap();
        let v = survival_t(&g, &[0.5], &[1.0], 1);
        assert_relative_eq!(v, (-LN_2 * 0.5_f64.exp()).exp(), max_relative = 1e-14);
        assert!((v - 0.3189).abs() < 5e-5);
    }

    #[test]
    fn hazard_examples() {
        let g = HazardSpec::geometric(LN_2).unwrap();
        assert_relative_eq!(
            hazard_prob(&g, &[0.0], &[1.0], 3),
            0.5,
            max_relative = 1e-15
        );
        let z = HazardSpec::points(vec![2], vec![0.0], TailSpec::Geometric { alpha: 0.2 }).unwrap();
        assert_eq!(hazard_prob(&z, &[0.5], &[1.0], 2), 0.0);
        let v = hazard_prob(&z, &[0.5], &[1.0], 3);
        assert_relative_eq!(v, 1.0 - (-0.2 * 0.5_f64.exp()).exp(), max_relative = 1e-14);
        assert!((v - 0.2809).abs() < 5e-5);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(HazardSpec::points(vec![0, 1], vec![0.1, 0.1], TailSpec::Infinite).is_err());
        assert!(HazardSpec::points(vec![2, 1], vec![0.1, 0.1], TailSpec::Infinite).is_err());
        assert!(HazardSpec::points(vec![1], vec![-0.1], TailSpec::Infinite).is_err());
        assert!(HazardSpec::piecewise(vec![1, 1], vec![0.1, 0.1], TailSpec::Infinite).is_err());
        assert!(HazardSpec::geometric(-1.0).is_err());
        assert!(HazardSpec::<f64>::points(
            vec![],
            vec![],
            TailSpec::Weibull {
                theta: 0.0,
                shape: 1.0
            }
        )
        .is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let g = HazardSpec::<f32>::geometric(core::f32::consts::LN_2).unwrap();
        assert!((hazard_prob(&g, &[0.0f32], &[1.0], 3) - 0.5).abs() < 1e-6);
        assert!((survival_t(&g, &[0.0f32], &[1.0], 2) - 0.25).abs() < 1e-6);
    }
}
