//! Censored current-duration log-likelihood and its analytic gradient.
//!
//! Observations sharing a covariate vector share a normalizing sum, so data
//! are grouped by `z` and reduced to per-group histograms. With `L_y = -eta A_y`,
//! `w_y` the normalized weights of the full sum and `v_y` those of the censored
//! sum over `y > tau`, the score for any increment `alpha_j` is
//!
//! ```text
//! d loglik / d alpha_j = -eta * (N(>= j) + n_cens * V(>= j) - n * W(>= j))
//! ```
//!
//! where capital letters are suffix sums. The closed-form geometric tail is an
//! extra bin past the last enumerated duration.

use std::collections::BTreeMap;

use super::data::Dataset;
use super::param::Parametrization;
use crate::error::{Error, Result};
use crate::hazard::{linear_predictor, TailSpec, TruncationPolicy};
use crate::math::{log1mexp, log_sum_exp};

#[derive(Debug, Clone)]
struct Group {
    z: Vec<f64>,
    n: f64,
    n_censored: f64,
    /// Uncensored counts by duration, `0..=last`.
    hist: Vec<f64>,
    /// Uncensored counts with duration `>= j`.
    at_least: Vec<f64>,
}

/// Log-likelihood of a dataset under a fixed parametrization.
#[derive(Debug, Clone)]
pub struct LogLikelihood<'a> {
    layout: &'a Parametrization,
    groups: Vec<Group>,
    last: u32,
    exact: bool,
}

impl<'a> LogLikelihood<'a> {
    pub fn new(layout: &'a Parametrization, data: &Dataset) -> Result<Self> {
        data.validate()?;
        if data.dimension() != layout.n_beta {
            return Err(Error::Input(
                "dataset dimension does not match the parametrization".into(),
            ));
        }
        let max_uncensored = data
            .observations
            .iter()
            .filter(|o| o.uncensored)
            .map(|o| o.y)
            .max()
            .unwrap_or(0);
        let exact = layout.policy == TruncationPolicy::ExactGeometricTail;
        let last = match (layout.policy, layout.tail) {
            (_, super::param::TailLayout::Infinite) => layout.boundary(),
            (TruncationPolicy::FiniteUpperLimit { y_plus }, _) => y_plus,
            (TruncationPolicy::ExactGeometricTail, _) => layout
                .boundary()
                .max(max_uncensored)
                .max(layout.tau.unwrap_or(0)),
        };
        if max_uncensored > last {
            return Err(Error::Truncation {
                y_plus: last,
                bound: max_uncensored,
            });
        }

        let width = last as usize + 1;
        let mut by_z: BTreeMap<Vec<u64>, Group> = BTreeMap::new();
        for obs in &data.observations {
            let key: Vec<u64> = obs.z.iter().map(|v| v.to_bits()).collect();
            let g = by_z.entry(key).or_insert_with(|| Group {
                z: obs.z.clone(),
                n: 0.0,
                n_censored: 0.0,
                hist: vec![0.0; width],
                at_least: vec![0.0; width],
            });
            g.n += 1.0;
            if obs.uncensored {
                g.hist[obs.y as usize] += 1.0;
            } else {
                g.n_censored += 1.0;
            }
        }
        let mut groups: Vec<Group> = by_z.into_values().collect();
        for g in &mut groups {
            let mut acc = 0.0;
            for j in (0..width).rev() {
                acc += g.hist[j];
                g.at_least[j] = acc;
            }
        }
        Ok(Self {
            layout,
            groups,
            last,
            exact,
        })
    }

    pub fn layout(&self) -> &Parametrization {
        self.layout
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn value(&self, params: &[f64]) -> Result<f64> {
        self.evaluate(params, false).map(|(v, _)| v)
    }

    pub fn value_and_gradient(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evaluate(params, true)
    }

    fn evaluate(&self, params: &[f64], with_gradient: bool) -> Result<(f64, Vec<f64>)> {
        let layout = self.layout;
        let spec = layout.hazard(params)?;
        let beta = layout.beta(params);
        let inc = layout.increments(&spec, self.last);
        let width = self.last as usize + 1;
        let mut cum = vec![0.0; width];
        for j in 1..width {
            cum[j] = cum[j - 1] + inc[j].0;
        }
        let tail_alpha = match (self.exact, spec.tail()) {
            (true, TailSpec::Geometric { alpha }) => Some(*alpha),
            (true, _) => {
                return Err(Error::Input(
                    "exact tail summation requires a geometric tail".into(),
                ))
            }
            _ => None,
        };
        let cens_from = layout.tau.map(|t| t as usize + 1);

        let mut value = 0.0;
        let mut grad = vec![0.0; if with_gradient { params.len() } else { 0 }];
        let mut logs = vec![0.0; width + 1];
        let mut w = vec![0.0; width];
        let mut v = vec![0.0; width];

        for g in &self.groups {
            let eta = linear_predictor(beta, &g.z).exp();
            for y in 0..width {
                logs[y] = if cum[y] == 0.0 { 0.0 } else { -eta * cum[y] };
            }
            // closed-form tail bin: log sum_{y > last} exp(-eta A_y)
            let tail = tail_alpha.map(|a| {
                let rate = eta * a;
                (logs[width - 1] - rate - log1mexp(rate), rate)
            });
            let n_terms = width + usize::from(tail.is_some());
            if let Some((lt, _)) = tail {
                logs[width] = lt;
            }
            let log_den = log_sum_exp(&logs[..n_terms]);

            let mut contrib = -g.n * log_den;
            for y in 0..width {
                if g.hist[y] > 0.0 {
                    contrib += g.hist[y] * logs[y];
                }
            }
            let mut log_cens = f64::NEG_INFINITY;
            if g.n_censored > 0.0 {
                let from = cens_from.expect("censored rows imply a censoring value");
                log_cens = log_sum_exp(&logs[from..n_terms]);
                contrib += g.n_censored * log_cens;
            }
            value += contrib;
            if !with_gradient {
                continue;
            }

            for y in 0..width {
                w[y] = (logs[y] - log_den).exp();
                v[y] = match cens_from {
                    Some(from) if g.n_censored > 0.0 && y >= from => (logs[y] - log_cens).exp(),
                    _ => 0.0,
                };
            }
            let (w_tail, v_tail) = match tail {
                Some((lt, _)) => {
                    let vt = if g.n_censored > 0.0 {
                        (lt - log_cens).exp()
                    } else {
                        0.0
                    };
                    ((lt - log_den).exp(), vt)
                }
                None => (0.0, 0.0),
            };

            // suffix sums from the top, tail bin included
            let mut w_ge = w_tail;
            let mut v_ge = v_tail;
            let mut beta_acc = 0.0;
            for j in (1..width).rev() {
                w_ge += w[j];
                v_ge += v[j];
                let r = g.at_least[j] + g.n_censored * v_ge - g.n * w_ge;
                let (alpha, idx, dalpha) = inc[j];
                if let Some(k) = idx {
                    grad[k] -= eta * dalpha * r;
                }
                beta_acc += alpha * r;
            }
            let mut d_eta = -beta_acc;
            if let (Some((_, rate)), Some(a)) = (tail, tail_alpha) {
                // extra dependence of the tail bin on (eta, alpha) beyond A_last
                let coef = g.n_censored * v_tail - g.n * w_tail;
                let inv = -1.0 / (-rate).exp_m1();
                d_eta -= coef * a * inv;
                if let Some(k) = layout.tail_index() {
                    grad[k] -= coef * eta * inv * a;
                }
            }
            for (gk, zk) in grad[..layout.n_beta].iter_mut().zip(&g.z) {
                *gk += eta * d_eta * zk;
            }
        }
        if !value.is_finite() && !value.is_nan() {
            value = f64::NEG_INFINITY;
        }
        Ok((value, grad))
    }
}
