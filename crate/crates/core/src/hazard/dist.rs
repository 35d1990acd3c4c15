use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{linear_predictor, HazardSpec, TailSpec};
use crate::error::{Error, Result};
use crate::math::{log1mexp, log_add_exp, log_sum_exp};

/// How the infinite normalizing sum of the current-duration pmf is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TruncationPolicy {
    /// Sum `y = 0..=y_plus`; mass beyond `y_plus` is taken to be zero.
    FiniteUpperLimit { y_plus: u32 },
    /// Enumerate up to the boundary and add the closed-form geometric series.
    /// Valid only with a geometric tail.
    ExactGeometricTail,
}

/// Current-duration distribution `g(. | z)` for a fixed spec, covariate and policy.
///
/// Log survivor terms `-eta * A_y` are enumerated once for `y = 0..=last` and
/// suffix log-masses are cached, so pmf and survivor lookups are O(1).
#[derive(Debug, Clone)]
pub struct CurrentDuration<'a, T: Float> {
    spec: &'a HazardSpec<T>,
    eta: T,
    /// Last explicitly enumerated duration.
    last: u32,
    log_terms: Vec<T>,
    /// `log sum_{k > y} exp(-eta A_k)` for `y = 0..=last`; the entry at `last`
    /// is the closed-form tail (or `-inf`).
    log_upper: Vec<T>,
    /// Geometric tail `(eta * alpha, log q, log(1-q))` under the exact policy.
    geometric: Option<(T, T, T)>,
    log_denominator: T,
}

impl<'a, T: Float> CurrentDuration<'a, T> {
    pub fn new(
        spec: &'a HazardSpec<T>,
        beta: &[T],
        z: &[T],
        policy: TruncationPolicy,
    ) -> Result<Self> {
        if beta.len() != z.len() {
            return Err(Error::Input(format!(
                "covariate dimension {} does not match coefficient dimension {}",
                z.len(),
                beta.len()
            )));
        }
        let eta = linear_predictor(beta, z).exp();
        Self::with_eta(spec, eta, policy)
    }

    pub fn with_eta(spec: &'a HazardSpec<T>, eta: T, policy: TruncationPolicy) -> Result<Self> {
        let b = spec.boundary();
        let (last, geometric) = match policy {
            TruncationPolicy::FiniteUpperLimit { y_plus } => {
                if y_plus <= b {
                    return Err(Error::Truncation { y_plus, bound: b });
                }
                let last = if matches!(spec.tail(), TailSpec::Infinite) {
                    b
                } else {
                    y_plus
                };
                (last, None)
            }
            TruncationPolicy::ExactGeometricTail => match *spec.tail() {
                TailSpec::Geometric { alpha } => {
                    let rate = eta * alpha;
                    if !(rate > T::zero()) {
                        return Err(Error::DivergentSeries(alpha.to_f64().unwrap_or(f64::NAN)));
                    }
                    (b, Some((rate, -rate, log1mexp(rate))))
                }
                other => {
                    return Err(Error::InvalidSpec(format!(
                        "exact tail summation needs a geometric tail, got {}",
                        other.name()
                    )))
                }
            },
        };

        let mut log_terms = Vec::with_capacity(last as usize + 1);
        let mut cum = T::zero();
        for y in 0..=last {
            cum = cum + spec.alpha_at(y);
            log_terms.push(if cum == T::zero() {
                T::zero()
            } else {
                -(eta * cum)
            });
        }

        let tail_log = match geometric {
            Some((_, log_q, log_1mq)) => log_terms[last as usize] + log_q - log_1mq,
            None => T::neg_infinity(),
        };
        let mut log_upper = vec![T::neg_infinity(); last as usize + 1];
        log_upper[last as usize] = tail_log;
        for y in (0..last as usize).rev() {
            log_upper[y] = log_add_exp(log_terms[y + 1], log_upper[y + 1]);
        }
        let log_denominator = log_add_exp(log_terms[0], log_upper[0]);

        Ok(Self {
            spec,
            eta,
            last,
            log_terms,
            log_upper,
            geometric,
            log_denominator,
        })
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn log_denominator(&self) -> T {
        self.log_denominator
    }

    /// Last duration enumerated explicitly (the truncation point or the boundary).
    pub fn last_enumerated(&self) -> u32 {
        self.last
    }

    /// Unnormalized log survivor term `-eta * A_y`.
    fn log_term(&self, y: u32) -> T {
        if y <= self.last {
            return self.log_terms[y as usize];
        }
        match self.geometric {
            Some((rate, _, _)) => {
                self.log_terms[self.last as usize] - rate * T::from(y - self.last).unwrap()
            }
            None => T::neg_infinity(),
        }
    }

    pub fn log_pmf(&self, y: u32) -> T {
        self.log_term(y) - self.log_denominator
    }

    pub fn pmf(&self, y: u32) -> T {
        self.log_pmf(y).exp()
    }

    /// `log P(Y > y | z)`.
    pub fn log_survivor(&self, y: u32) -> T {
        if y < self.last {
            return self.log_upper[y as usize] - self.log_denominator;
        }
        match self.geometric {
            Some((_, log_q, log_1mq)) => self.log_term(y) + log_q - log_1mq - self.log_denominator,
            None => T::neg_infinity(),
        }
    }

    /// `G(y | z) = 1 - sum_{k <= y} g(k | z)`, computed from the upper tail.
    pub fn survivor(&self, y: u32) -> T {
        self.log_survivor(y).exp()
    }

    /// Discrete hazard of `T` at `y` under this distribution's `eta`.
    pub fn hazard(&self, y: u32) -> T {
        let a = self.spec.alpha_at(y);
        if a == T::zero() {
            return T::zero();
        }
        -(-(a * self.eta)).exp_m1()
    }

    /// Sum of the pmf over `0..=y`, accumulated term by term.
    pub fn cumulative_mass(&self, y: u32) -> T {
        let terms: Vec<T> = (0..=y).map(|k| self.log_pmf(k)).collect();
        log_sum_exp(&terms).exp()
    }
}

/// `log sum_{y >= 0} exp(-eta * A_y)` under `policy`.
pub fn log_denominator<T: Float>(
    spec: &HazardSpec<T>,
    beta: &[T],
    z: &[T],
    policy: TruncationPolicy,
) -> Result<T> {
    Ok(CurrentDuration::new(spec, beta, z, policy)?.log_denominator())
}

/// Current-duration pmf `g(y | z)`.
pub fn cd_pmf<T: Float>(
    spec: &HazardSpec<T>,
    beta: &[T],
    z: &[T],
    y: u32,
    policy: TruncationPolicy,
) -> Result<T> {
    Ok(CurrentDuration::new(spec, beta, z, policy)?.pmf(y))
}

/// Current-duration survivor `G(y | z) = P(Y > y | z)`.
pub fn cd_survivor<T: Float>(
    spec: &HazardSpec<T>,
    beta: &[T],
    z: &[T],
    y: u32,
    policy: TruncationPolicy,
) -> Result<T> {
    Ok(CurrentDuration::new(spec, beta, z, policy)?.survivor(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::LN_2;

    const EXACT: TruncationPolicy = TruncationPolicy::ExactGeometricTail;

    fn finite(y_plus: u32) -> TruncationPolicy {
        TruncationPolicy::FiniteUpperLimit { y_plus }
    }

    #[test]
    fn ln2_geometric_closed_forms() {
        let s = HazardSpec::geometric(LN_2).unwrap();
        let d = log_denominator(&s, &[0.0], &[1.0], EXACT).unwrap();
        assert_relative_eq!(d, LN_2, max_relative = 1e-14);
        let d = log_denominator(&s, &[0.0], &[1.0], finite(10_000)).unwrap();
        assert!((d - LN_2).abs() < 1e-10);
        for (y, want) in [(0, 0.5), (1, 0.25), (2, 0.125)] {
            assert_relative_eq!(
                cd_pmf(&s, &[0.0], &[1.0], y, EXACT).unwrap(),
                want,
                max_relative = 1e-14
            );
        }
        assert_relative_eq!(
            cd_survivor(&s, &[0.0], &[1.0], 0, EXACT).unwrap(),
            0.5,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            cd_survivor(&s, &[0.0], &[1.0], 30, EXACT).unwrap(),
            0.5f64.powi(31),
            max_relative = 1e-12
        );
    }

    #[test]
    fn infinite_tail_sums_to_boundary_only() {
        let s = HazardSpec::points(vec![1, 2, 5], vec![0.3, 0.2, 0.4], TailSpec::Infinite).unwrap();
        let d = CurrentDuration::new(&s, &[0.1], &[1.0], finite(1000)).unwrap();
        assert_eq!(d.last_enumerated(), 5);
        let eta = 0.1_f64.exp();
        let brute: f64 = (0..=5).map(|y| (-eta * s.cumulative_hazard(y)).exp()).sum();
        assert_relative_eq!(d.log_denominator(), brute.ln(), max_relative = 1e-14);
        assert_eq!(d.survivor(5), 0.0);
        assert_eq!(d.pmf(6), 0.0);
        assert!(d.survivor(4) > 0.0);
    }

    #[test]
    fn survivor_at_truncation_point_is_zero() {
        let s = HazardSpec::geometric(0.2).unwrap();
        let d = CurrentDuration::new(&s, &[0.5], &[1.0], finite(50)).unwrap();
        assert!(d.survivor(50).abs() < 1e-12);
        assert_relative_eq!(d.cumulative_mass(50), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn covariate_free_when_beta_zero() {
        let s = HazardSpec::points(
            vec![1, 3],
            vec![0.2, 0.5],
            TailSpec::Geometric { alpha: 0.3 },
        )
        .unwrap();
        for y in 0..10 {
            let a = cd_pmf(&s, &[0.0], &[0.0], y, finite(80)).unwrap();
            let b = cd_pmf(&s, &[0.0], &[7.5], y, finite(80)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn exact_tail_errors() {
        let zero = HazardSpec::geometric(0.0).unwrap();
        assert!(matches!(
            log_denominator(&zero, &[], &[], EXACT),
            Err(Error::DivergentSeries(_))
        ));
        let poly =
            HazardSpec::points(vec![1], vec![0.1], TailSpec::Polynomial { gamma: 1.0 }).unwrap();
        assert!(log_denominator(&poly, &[], &[], EXACT).is_err());
        let s = HazardSpec::points(
            vec![1, 9],
            vec![0.1, 0.1],
            TailSpec::Geometric { alpha: 0.1 },
        )
        .unwrap();
        assert!(matches!(
            log_denominator(&s, &[], &[], finite(9)),
            Err(Error::Truncation { .. })
        ));
        assert!(CurrentDuration::new(&s, &[1.0], &[], EXACT).is_err());
    }

    #[test]
    fn finite_for_extreme_linear_predictors() {
        let s = HazardSpec::points(
            vec![1, 2, 3],
            vec![0.2, 0.1, 0.3],
            TailSpec::Geometric { alpha: 0.15 },
        )
        .unwrap();
        for lp in [-30.0, -5.0, 0.0, 5.0, 30.0] {
            for policy in [finite(200), EXACT] {
                let d = CurrentDuration::new(&s, &[1.0], &[lp], policy).unwrap();
                assert!(d.log_denominator().is_finite());
                for y in [0, 1, 3, 10, 100] {
                    assert!(d.log_pmf(y).is_finite() || d.pmf(y) == 0.0);
                    let g = d.survivor(y);
                    assert!((0.0..=1.0).contains(&g), "lp={lp} y={y} g={g}");
                }
            }
        }
    }
}
