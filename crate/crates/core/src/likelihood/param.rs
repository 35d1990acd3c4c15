use serde::{Deserialize, Serialize};

use super::config::{FitConfig, Model, TailFamily};
use super::data::Dataset;
use crate::error::{Error, Result};
use crate::hazard::{Baseline, HazardSpec, TailSpec, TruncationPolicy};

/// Lower clamp for log increments at the optimum.
pub const LOG_ALPHA_FLOOR: f64 = -20.0;

/// Fitted threshold above which the truncation point is reported as suspicious.
pub const LARGE_Y_PLUS: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaselineLayout {
    Points(Vec<u32>),
    Piecewise(Vec<u32>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailLayout {
    /// Free `log alpha` for a geometric tail.
    Geometric,
    /// Free exponent `gamma` of a polynomial tail.
    Polynomial,
    Fixed(TailSpec<f64>),
    Infinite,
}

/// How a packed parameter vector `(beta, log alpha_1..K, tail?)` maps to a
/// hazard specification, together with the truncation policy and censoring
/// value it was built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parametrization {
    pub n_beta: usize,
    pub baseline: BaselineLayout,
    pub tail: TailLayout,
    pub policy: TruncationPolicy,
    pub tau: Option<u32>,
    pub y_plus: u32,
}

/// Twice the largest pre-censoring duration, falling back to the largest
/// recorded duration when the pre-censoring maximum is unknown. Never below 1.
pub fn default_y_plus(data: &Dataset) -> u32 {
    let max = data.pre_censoring_max.or_else(|| data.max_y()).unwrap_or(0);
    max.saturating_mul(2).max(1)
}

/// Checks the Type I censoring contract and returns whether any row is censored.
fn check_censoring(data: &Dataset, tau: Option<u32>) -> Result<bool> {
    let mut any_censored = false;
    for (i, obs) in data.observations.iter().enumerate() {
        match (obs.uncensored, tau) {
            (false, None) => {
                return Err(Error::Input(format!(
                    "observation {i} is censored but no censoring value was given"
                )))
            }
            (false, Some(t)) if obs.y != t => {
                return Err(Error::Input(format!(
                    "observation {i} is censored at {} but the censoring value is {t}",
                    obs.y
                )))
            }
            (true, Some(t)) if obs.y > t => {
                return Err(Error::Input(format!(
                    "observation {i} is uncensored at {} beyond the censoring value {t}",
                    obs.y
                )))
            }
            (false, _) => any_censored = true,
            _ => {}
        }
    }
    Ok(any_censored)
}

/// Lays out the free parameters for `data` under `config`.
///
/// Semiparametric: one increment per distinct uncensored `y >= 1`, plus a tail
/// parameter when anything is censored (otherwise the tail is infinite).
/// Piecewise: one level per knot interval plus a tail level past the last knot.
pub fn build_parametrization(data: &Dataset, config: &FitConfig) -> Result<Parametrization> {
    data.validate()?;
    if let Some(0) = config.tau {
        return Err(Error::Input("censoring value must be at least 1".into()));
    }
    let any_censored = check_censoring(data, config.tau)?;
    let uncensored_max = data
        .observations
        .iter()
        .filter(|o| o.uncensored)
        .map(|o| o.y)
        .max()
        .ok_or(Error::Unfittable)?;

    let configured_tail = match config.tail {
        TailFamily::Geometric => TailLayout::Geometric,
        TailFamily::Polynomial => TailLayout::Polynomial,
        TailFamily::PowerDecay { base, gamma, lag } => {
            TailLayout::Fixed(TailSpec::PowerDecay { base, gamma, lag })
        }
        TailFamily::Weibull { theta, shape } => {
            TailLayout::Fixed(TailSpec::Weibull { theta, shape })
        }
    };

    let (baseline, tail) = match &config.model {
        Model::Semiparametric => {
            let mut support: Vec<u32> = data
                .observations
                .iter()
                .filter(|o| o.uncensored && o.y > 0)
                .map(|o| o.y)
                .collect();
            support.sort_unstable();
            support.dedup();
            let tail = if any_censored {
                configured_tail
            } else {
                TailLayout::Infinite
            };
            (BaselineLayout::Points(support), tail)
        }
        Model::Piecewise { knots } => {
            if knots.is_empty() || knots[0] == 0 || knots.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Input(
                    "knots must be strictly increasing positive integers".into(),
                ));
            }
            let mut kept = knots.clone();
            if any_censored && config.truncate_knots_at_tau {
                let tau = config.tau.expect("checked with censoring");
                kept.retain(|&k| k <= tau);
            }
            let baseline = if kept.is_empty() {
                BaselineLayout::Points(Vec::new())
            } else {
                BaselineLayout::Piecewise(kept)
            };
            (baseline, configured_tail)
        }
    };

    let boundary = match &baseline {
        BaselineLayout::Points(s) => s.last().copied().unwrap_or(0),
        BaselineLayout::Piecewise(k) => *k.last().unwrap(),
    };
    let y_plus = config.y_plus.unwrap_or_else(|| default_y_plus(data));
    let must_exceed = boundary
        .max(uncensored_max)
        .max(config.tau.filter(|_| any_censored).unwrap_or(0));
    if !matches!(tail, TailLayout::Infinite) && y_plus <= must_exceed {
        return Err(Error::Truncation {
            y_plus,
            bound: must_exceed,
        });
    }

    let policy = if config.exact_tail && !matches!(tail, TailLayout::Infinite) {
        if tail != TailLayout::Geometric {
            return Err(Error::Input(
                "exact tail summation requires the geometric tail family".into(),
            ));
        }
        TruncationPolicy::ExactGeometricTail
    } else {
        TruncationPolicy::FiniteUpperLimit { y_plus }
    };

    Ok(Parametrization {
        n_beta: data.dimension(),
        baseline,
        tail,
        policy,
        tau: config.tau.filter(|_| any_censored),
        y_plus,
    })
}

impl Parametrization {
    pub fn n_alpha(&self) -> usize {
        match &self.baseline {
            BaselineLayout::Points(s) => s.len(),
            BaselineLayout::Piecewise(k) => k.len(),
        }
    }

    pub fn tail_index(&self) -> Option<usize> {
        match self.tail {
            TailLayout::Geometric | TailLayout::Polynomial => Some(self.n_beta + self.n_alpha()),
            _ => None,
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_beta + self.n_alpha() + usize::from(self.tail_index().is_some())
    }

    pub fn boundary(&self) -> u32 {
        match &self.baseline {
            BaselineLayout::Points(s) => s.last().copied().unwrap_or(0),
            BaselineLayout::Piecewise(k) => *k.last().unwrap(),
        }
    }

    /// Whether parameter `i` is a log increment (and so subject to the floor clamp).
    pub fn is_log_alpha(&self, i: usize) -> bool {
        let end = self.n_beta + self.n_alpha();
        (self.n_beta..end).contains(&i)
            || (Some(i) == self.tail_index() && self.tail == TailLayout::Geometric)
    }

    /// Support points (or knots) that carry a free increment.
    pub fn alpha_points(&self) -> &[u32] {
        match &self.baseline {
            BaselineLayout::Points(s) => s,
            BaselineLayout::Piecewise(k) => k,
        }
    }

    pub fn param_names(&self, covariate_names: &[String]) -> Vec<String> {
        let mut names: Vec<String> = covariate_names
            .iter()
            .map(|n| format!("beta[{n}]"))
            .collect();
        names.extend(
            self.alpha_points()
                .iter()
                .map(|p| format!("log_alpha[{p}]")),
        );
        match self.tail {
            TailLayout::Geometric => names.push("log_alpha[tail]".into()),
            TailLayout::Polynomial => names.push("gamma[tail]".into()),
            _ => {}
        }
        names
    }

    /// `beta = 0`, every increment `1 / (1 + mean y)`, polynomial exponent 0.
    pub fn initial(&self, data: &Dataset) -> Vec<f64> {
        let log_alpha = -(1.0 + data.mean_y()).ln();
        let mut x = vec![0.0; self.n_params()];
        for v in &mut x[self.n_beta..self.n_beta + self.n_alpha()] {
            *v = log_alpha;
        }
        if let Some(i) = self.tail_index() {
            x[i] = if self.tail == TailLayout::Geometric {
                log_alpha
            } else {
                0.0
            };
        }
        x
    }

    pub fn beta<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[..self.n_beta]
    }

    pub fn tail_spec(&self, params: &[f64]) -> TailSpec<f64> {
        match self.tail {
            TailLayout::Geometric => TailSpec::Geometric {
                alpha: params[self.tail_index().unwrap()].exp(),
            },
            TailLayout::Polynomial => TailSpec::Polynomial {
                gamma: params[self.tail_index().unwrap()],
            },
            TailLayout::Fixed(spec) => spec,
            TailLayout::Infinite => TailSpec::Infinite,
        }
    }

    pub fn hazard(&self, params: &[f64]) -> Result<HazardSpec<f64>> {
        if params.len() != self.n_params() {
            return Err(Error::Input(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        let alphas: Vec<f64> = params[self.n_beta..self.n_beta + self.n_alpha()]
            .iter()
            .map(|g| g.exp())
            .collect();
        let baseline = match &self.baseline {
            BaselineLayout::Points(s) => Baseline::Points {
                support: s.clone(),
                alphas,
            },
            BaselineLayout::Piecewise(k) => Baseline::Piecewise {
                knots: k.clone(),
                levels: alphas,
            },
        };
        HazardSpec::new(baseline, self.tail_spec(params))
    }

    /// Packs `beta` and a hazard with this layout's shape back into a vector.
    pub fn pack(&self, beta: &[f64], spec: &HazardSpec<f64>) -> Result<Vec<f64>> {
        let alphas = match spec.baseline() {
            Baseline::Points { support, alphas }
                if BaselineLayout::Points(support.clone()) == self.baseline =>
            {
                alphas
            }
            Baseline::Piecewise { knots, levels }
                if BaselineLayout::Piecewise(knots.clone()) == self.baseline =>
            {
                levels
            }
            _ => {
                return Err(Error::Input(
                    "hazard baseline does not match the parametrization".into(),
                ))
            }
        };
        let mut x: Vec<f64> = beta.to_vec();
        x.extend(alphas.iter().map(|a| a.ln()));
        match (self.tail, *spec.tail()) {
            (TailLayout::Geometric, TailSpec::Geometric { alpha }) => x.push(alpha.ln()),
            (TailLayout::Polynomial, TailSpec::Polynomial { gamma }) => x.push(gamma),
            (TailLayout::Fixed(_), _) | (TailLayout::Infinite, TailSpec::Infinite) => {}
            _ => {
                return Err(Error::Input(
                    "hazard tail does not match the parametrization".into(),
                ))
            }
        }
        Ok(x)
    }

    /// For `j = 1..=last`: the increment, the parameter it depends on, and
    /// its derivative with respect to that parameter.
    pub(crate) fn increments(
        &self,
        spec: &HazardSpec<f64>,
        last: u32,
    ) -> Vec<(f64, Option<usize>, f64)> {
        let b = self.boundary();
        let mut out = Vec::with_capacity(last as usize + 1);
        out.push((0.0, None, 0.0));
        let points = self.alpha_points();
        let mut k = 0usize;
        for j in 1..=last {
            let alpha = spec.alpha_at(j);
            let entry = if j <= b {
                match &self.baseline {
                    BaselineLayout::Points(s) => match s.binary_search(&j) {
                        Ok(i) => (alpha, Some(self.n_beta + i), alpha),
                        Err(_) => (0.0, None, 0.0),
                    },
                    BaselineLayout::Piecewise(_) => {
                        while points[k] < j {
                            k += 1;
                        }
                        (alpha, Some(self.n_beta + k), alpha)
                    }
                }
            } else {
                match self.tail {
                    TailLayout::Geometric => (alpha, self.tail_index(), alpha),
                    TailLayout::Polynomial => {
                        (alpha, self.tail_index(), alpha * f64::from(j - b).ln())
                    }
                    _ => (alpha, None, 0.0),
                }
            };
            out.push(entry);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::data::Observation;

    fn data(rows: &[(u32, bool)]) -> Dataset {
        let obs = rows
            .iter()
            .map(|&(y, u)| Observation::new(y, u, vec![0.0]))
            .collect();
        Dataset::new(obs, vec!["x".into()]).unwrap()
    }

    #[test]
    fn semiparametric_uncensored() {
        let d = data(&[(0, true), (1, true), (1, true), (3, true)]);
        let p = build_parametrization(&d, &FitConfig::default()).unwrap();
        assert_eq!(p.baseline, BaselineLayout::Points(vec![1, 3]));
        assert_eq!(p.n_alpha(), 2);
        assert_eq!(p.tail, TailLayout::Infinite);
        assert_eq!(p.n_params(), 1 + 2);
    }

    #[test]
    fn semiparametric_censored_adds_tail() {
        let d = data(&[(0, true), (1, true), (1, true), (3, true), (6, false)]);
        let p = build_parametrization(&d, &FitConfig::semiparametric(Some(6))).unwrap();
        assert_eq!(p.n_alpha() + usize::from(p.tail_index().is_some()), 3);
        assert_eq!(p.tail, TailLayout::Geometric);
    }

    #[test]
    fn piecewise_counts() {
        let knots = crate::likelihood::config::STUDY_KNOTS.to_vec();
        let d = data(&[(0, true), (5, true), (20, true), (24, false)]);
        let p = build_parametrization(&d, &FitConfig::piecewise(knots.clone(), Some(24))).unwrap();
        assert_eq!(p.n_alpha() + 1, 8);
        let d = data(&[(0, true), (5, true), (20, true)]);
        let p = build_parametrization(&d, &FitConfig::piecewise(knots.clone(), None)).unwrap();
        assert_eq!(p.n_alpha() + 1, 8);

        // censoring at 3 keeps knots 1 and 2 only
        let d = data(&[(0, true), (2, true), (3, true), (3, false)]);
        let p = build_parametrization(&d, &FitConfig::piecewise(knots.clone(), Some(3))).unwrap();
        assert_eq!(p.alpha_points(), &[1, 2]);
        let cfg = FitConfig {
            truncate_knots_at_tau: false,
            y_plus: Some(40),
            ..FitConfig::piecewise(knots, Some(3))
        };
        let p = build_parametrization(&d, &cfg).unwrap();
        assert_eq!(p.n_alpha() + 1, 8);
    }

    #[test]
    fn rejects_bad_data() {
        let d = data(&[(4, false)]);
        assert!(matches!(
            build_parametrization(&d, &FitConfig::semiparametric(Some(4))),
            Err(Error::Unfittable)
        ));
        let d = data(&[(1, true), (4, false)]);
        assert!(build_parametrization(&d, &FitConfig::semiparametric(None)).is_err());
        assert!(build_parametrization(&d, &FitConfig::semiparametric(Some(6))).is_err());
        let d = data(&[(7, true), (4, false)]);
        assert!(build_parametrization(&d, &FitConfig::semiparametric(Some(4))).is_err());
    }

    #[test]
    fn default_y_plus_rule() {
        let d = data(&[(3, true)]).with_pre_censoring_max(Some(40));
        assert_eq!(default_y_plus(&d), 80);
        let d = data(&[(18, true)]);
        assert_eq!(default_y_plus(&d), 36);
        let d = data(&[(0, true)]);
        assert_eq!(default_y_plus(&d), 1);
    }

    #[test]
    fn pack_round_trips() {
        let d = data(&[(0, true), (1, true), (3, true), (6, false)]);
        let p = build_parametrization(&d, &FitConfig::semiparametric(Some(6))).unwrap();
        let x = vec![0.3, -1.0, -2.0, -0.7];
        let spec = p.hazard(&x).unwrap();
        let back = p.pack(&x[..1], &spec).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
