//! Replicated simulation studies over a grid of scenarios, censoring values
//! and models.
//!
//! One uncensored dataset is drawn per `(scenario, replication)` and then
//! censored at every `tau` and fitted with every model, so cells that differ
//! only in `tau` or model are compared on the same draws. Replication seeds are
//! a pure function of `(base_seed, scenario name, replication index)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{fit, Dataset, FitConfig, Model};
use crate::sim::{
    apply_type1_censoring, reference_scenarios, seed::derive_seed, simulate_uncensored, Scenario,
    SimConfig, DEFAULT_HORIZON, TAU_GRID,
};

fn default_horizon() -> u64 {
    DEFAULT_HORIZON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub scenarios: Vec<Scenario>,
    /// Censoring values; `null` means no censoring.
    pub taus: Vec<Option<u32>>,
    pub models: Vec<Model>,
    pub replications: usize,
    pub n: usize,
    pub base_seed: u64,
    /// Worker threads; defaults to the number of logical CPUs.
    #[serde(default)]
    pub parallelism: Option<usize>,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
}

impl StudyConfig {
    /// The reference grid: five scenarios, six censoring levels, both models,
    /// 200 replications of 1000 subjects.
    pub fn reference_grid() -> Self {
        Self {
            scenarios: reference_scenarios(),
            taus: TAU_GRID.to_vec(),
            models: vec![Model::study_piecewise(), Model::Semiparametric],
            replications: 200,
            n: 1000,
            base_seed: 20_240_601,
            parallelism: None,
            horizon: DEFAULT_HORIZON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::InvalidSpec(
                "a study needs at least 2 replications".into(),
            ));
        }
        if self.parallelism == Some(0) {
            return Err(Error::InvalidSpec("parallelism must be at least 1".into()));
        }
        let mut names: Vec<&str> = self.scenarios.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSpec("scenario names must be unique".into()));
        }
        for s in &self.scenarios {
            s.dgp.validate()?;
            SimConfig {
                horizon: self.horizon,
                ..SimConfig::new(self.n, None, 0)
            }
            .validate(&s.dgp)?;
        }
        if self.taus.contains(&Some(0)) {
            return Err(Error::InvalidSpec(
                "censoring values must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Cells in output order: scenario, then `tau`, then model.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for s in &self.scenarios {
            for &tau in &self.taus {
                for m in &self.models {
                    out.push(Cell {
                        scenario: s.clone(),
                        tau,
                        model: m.clone(),
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub scenario: Scenario,
    pub tau: Option<u32>,
    pub model: Model,
}

impl Cell {
    pub fn id(&self) -> String {
        format!(
            "{}/{}/{}",
            self.scenario.name,
            tau_label(self.tau),
            self.model.name()
        )
    }
}

pub fn tau_label(tau: Option<u32>) -> String {
    tau.map_or_else(|| "none".to_string(), |t| t.to_string())
}

/// Outcome of one fit in one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub scenario: String,
    pub tau: Option<u32>,
    pub model: String,
    pub rep: usize,
    pub seed: u64,
    pub beta_hat: Option<f64>,
    pub se: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub censored_fraction: f64,
    pub converged: bool,
    /// Fit error or warnings, if any.
    pub message: Option<String>,
}

impl ReplicationRecord {
    /// Converged with a usable standard error.
    pub fn usable(&self) -> bool {
        self.converged && self.ci.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub scenario: String,
    pub theta: f64,
    pub tau: Option<u32>,
    pub model: String,
    pub true_beta: f64,
    pub mean: f64,
    pub bias: f64,
    pub sd: f64,
    pub ecp: f64,
    pub prop_cen: f64,
    pub n_converged: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyOutput {
    pub summaries: Vec<CellSummary>,
    pub records: Vec<ReplicationRecord>,
    pub warnings: Vec<String>,
}

/// Uncensored dataset of replication `rep` for `scenario`.
pub fn simulate_replicate(
    scenario: &Scenario,
    rep: usize,
    base_seed: u64,
    n: usize,
    horizon: u64,
) -> Result<(Dataset, u64)> {
    let seed = derive_seed(base_seed, &scenario.name, rep as u64);
    let sim = SimConfig {
        horizon,
        ..SimConfig::new(n, None, seed)
    };
    Ok((simulate_uncensored(&scenario.dgp, &sim)?, seed))
}

/// Censors `uncensored` at `tau`, fits `model` and records the covariate effect.
/// Fit failures are recorded, not returned.
pub fn fit_replicate(
    uncensored: &Dataset,
    scenario: &str,
    tau: Option<u32>,
    model: &Model,
    rep: usize,
    seed: u64,
) -> Result<ReplicationRecord> {
    let (data, censored_fraction) = match tau {
        Some(t) => apply_type1_censoring(uncensored, t)?,
        None => (uncensored.clone(), 0.0),
    };
    let config = FitConfig {
        model: model.clone(),
        tau,
        ..FitConfig::default()
    };
    let mut rec = ReplicationRecord {
        scenario: scenario.to_string(),
        tau,
        model: model.name().to_string(),
        rep,
        seed,
        beta_hat: None,
        se: None,
        ci: None,
        censored_fraction,
        converged: false,
        message: None,
    };
    match fit(&data, &config) {
        Ok(r) => {
            rec.beta_hat = r.beta_hat.first().copied();
            rec.se = r.beta_se.first().copied().flatten();
            rec.ci = r.beta_ci.first().copied().flatten();
            rec.converged = r.converged;
            if !r.warnings.is_empty() {
                rec.message = Some(r.warnings.join("; "));
            }
        }
        Err(e) => rec.message = Some(e.to_string()),
    }
    Ok(rec)
}

/// One replication of one cell, simulated from scratch.
pub fn run_replication(
    cell: &Cell,
    rep: usize,
    base_seed: u64,
    n: usize,
    horizon: u64,
) -> Result<ReplicationRecord> {
    let (data, seed) = simulate_replicate(&cell.scenario, rep, base_seed, n, horizon)?;
    fit_replicate(&data, &cell.scenario.name, cell.tau, &cell.model, rep, seed)
}

/// Summary statistics over the usable replications of one cell.
///
/// Replications that failed, did not converge or have no standard error are
/// excluded from `mean`, `sd` and `ecp` and counted in `n_failed`; `prop_cen`
/// averages over every replication.
pub fn summarize(cell: &Cell, records: &[ReplicationRecord]) -> Result<CellSummary> {
    let truth = cell.scenario.dgp.beta1;
    let usable: Vec<&ReplicationRecord> = records.iter().filter(|r| r.usable()).collect();
    if usable.len() < 2 {
        return Err(Error::TooFewConverged(usable.len()));
    }
    let k = usable.len() as f64;
    let estimates: Vec<f64> = usable.iter().map(|r| r.beta_hat.expect("usable")).collect();
    let mean = estimates.iter().sum::<f64>() / k;
    let sd = (estimates.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    let covered = usable
        .iter()
        .filter(|r| r.ci.is_some_and(|(lo, hi)| lo <= truth && truth <= hi))
        .count();
    let prop_cen = if records.is_empty() {
        0.0
    } else {
        records.iter().map(|r| r.censored_fraction).sum::<f64>() / records.len() as f64
    };
    Ok(CellSummary {
        scenario: cell.scenario.name.clone(),
        theta: cell.scenario.dgp.theta(),
        tau: cell.tau,
        model: cell.model.name().to_string(),
        true_beta: truth,
        mean,
        bias: mean - truth,
        sd,
        ecp: covered as f64 / k,
        prop_cen,
        n_converged: usable.len(),
        n_failed: records.len() - usable.len(),
    })
}

/// Runs every cell and replication of `config`.
///
/// Output depends only on the configuration, not on `parallelism` or the
/// order in which work items finish.
pub fn run_study(config: &StudyConfig) -> Result<StudyOutput> {
    config.validate()?;
    let cells = config.cells();
    if cells.is_empty() {
        return Ok(StudyOutput::default());
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(p) = config.parallelism {
        builder = builder.num_threads(p);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?;

    let items: Vec<(usize, usize)> = (0..config.scenarios.len())
        .flat_map(|s| (0..config.replications).map(move |r| (s, r)))
        .collect();
    let per_item: Vec<Vec<ReplicationRecord>> = pool.install(|| {
        items
            .par_iter()
            .map(|&(s, rep)| {
                let scenario = &config.scenarios[s];
                let (data, seed) =
                    simulate_replicate(scenario, rep, config.base_seed, config.n, config.horizon)?;
                let mut out = Vec::with_capacity(config.taus.len() * config.models.len());
                for &tau in &config.taus {
                    for model in &config.models {
                        out.push(fit_replicate(&data, &scenario.name, tau, model, rep, seed)?);
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    // regroup into cell-major order
    let per_scenario = config.taus.len() * config.models.len();
    let mut by_cell: Vec<Vec<ReplicationRecord>> =
        vec![Vec::with_capacity(config.replications); cells.len()];
    for ((s, _), recs) in items.iter().zip(per_item) {
        for (j, rec) in recs.into_iter().enumerate() {
            by_cell[s * per_scenario + j].push(rec);
        }
    }

    let mut out = StudyOutput::default();
    for (cell, recs) in cells.iter().zip(by_cell) {
        match summarize(cell, &recs) {
            Ok(s) => {
                if s.n_failed > 0 {
                    out.warnings.push(format!(
                        "{}: {} of {} replications excluded",
                        cell.id(),
                        s.n_failed,
                        recs.len()
                    ));
                }
                out.summaries.push(s);
            }
            Err(e) => {
                out.warnings.push(format!("{}: {e}", cell.id()));
                out.summaries.push(CellSummary {
                    scenario: cell.scenario.name.clone(),
                    theta: cell.scenario.dgp.theta(),
                    tau: cell.tau,
                    model: cell.model.name().to_string(),
                    true_beta: cell.scenario.dgp.beta1,
                    mean: f64::NAN,
                    bias: f64::NAN,
                    sd: f64::NAN,
                    ecp: f64::NAN,
                    prop_cen: recs.iter().map(|r| r.censored_fraction).sum::<f64>()
                        / recs.len().max(1) as f64,
                    n_converged: recs.iter().filter(|r| r.usable()).count(),
                    n_failed: recs.iter().filter(|r| !r.usable()).count(),
                });
            }
        }
        out.records.extend(recs);
    }
    Ok(out)
}
