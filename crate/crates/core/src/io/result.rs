use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::dataset::from_json_reader;
use crate::error::{Error, Result};
use crate::hazard::{Baseline, CurrentDuration, HazardSpec, TailSpec, TruncationPolicy};
use crate::likelihood::FitResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEntry {
    pub name: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaEntry {
    /// Support point, or the right end of a piecewise interval. The open
    /// interval past the last knot is reported at `last knot + 1`.
    pub point: u32,
    pub estimate: f64,
}

/// JSON form of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub model: String,
    /// Knots actually fitted (piecewise model only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<u32>>,
    pub tau: Option<u32>,
    pub y_plus: u32,
    pub truncation: TruncationPolicy,
    pub beta: Vec<BetaEntry>,
    pub alpha: Vec<AlphaEntry>,
    pub tail: TailSpec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl ResultDocument {
    pub fn from_fit(fit: &FitResult) -> Self {
        let beta = fit
            .covariate_names
            .iter()
            .enumerate()
            .map(|(k, name)| BetaEntry {
                name: name.clone(),
                estimate: fit.beta_hat[k],
                se: fit.beta_se[k],
                ci_lo: fit.beta_ci[k].map(|c| c.0),
                ci_hi: fit.beta_ci[k].map(|c| c.1),
            })
            .collect();
        let (knots, points, values) = match fit.alpha_hat.baseline() {
            Baseline::Points { support, alphas } => (None, support, alphas),
            Baseline::Piecewise { knots, levels } => (Some(knots.clone()), knots, levels),
        };
        let mut alpha: Vec<AlphaEntry> = points
            .iter()
            .zip(values)
            .map(|(&point, &estimate)| AlphaEntry { point, estimate })
            .collect();
        // The constant level past the last knot is one more interval.
        if let (Some(k), TailSpec::Geometric { alpha: level }) = (&knots, fit.alpha_hat.tail()) {
            let point = k.last().map_or(1, |&last| last + 1);
            alpha.push(AlphaEntry {
                point,
                estimate: *level,
            });
        }
        Self {
            model: fit.model.name().to_string(),
            knots,
            tau: fit.tau,
            y_plus: fit.y_plus,
            truncation: fit.policy,
            beta,
            alpha,
            tail: *fit.alpha_hat.tail(),
            log_likelihood: fit.log_likelihood,
            converged: fit.converged,
            iterations: fit.iterations,
            warnings: fit.warnings.clone(),
        }
    }

    pub fn hazard_spec(&self) -> Result<HazardSpec<f64>> {
        let entries = match &self.knots {
            Some(k) => &self.alpha[..k.len().min(self.alpha.len())],
            None => &self.alpha[..],
        };
        let points: Vec<u32> = entries.iter().map(|a| a.point).collect();
        let values: Vec<f64> = entries.iter().map(|a| a.estimate).collect();
        match self.knots {
            Some(_) if !points.is_empty() => HazardSpec::piecewise(points, values, self.tail),
            _ => HazardSpec::points(points, values, self.tail),
        }
    }

    pub fn beta(&self) -> Vec<f64> {
        self.beta.iter().map(|b| b.estimate).collect()
    }
}

pub fn write_result<W: Write>(writer: W, doc: &ResultDocument) -> Result<()> {
    serde_json::to_writer_pretty(writer, doc)?;
    Ok(())
}

pub fn read_result<R: Read>(reader: R) -> Result<ResultDocument> {
    from_json_reader(reader)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PmfRow {
    pub y: u32,
    /// `g(y | z)`.
    pub pmf: f64,
    /// `P(Y > y | z)`.
    pub survivor: f64,
    /// `P(T = y | T >= y, z)`.
    pub hazard: f64,
}

/// Fitted pmf, survivor and hazard at `z` over `ys`.
pub fn pmf_table(
    doc: &ResultDocument,
    z: &[f64],
    ys: std::ops::RangeInclusive<u32>,
) -> Result<Vec<PmfRow>> {
    let beta = doc.beta();
    if z.len() != beta.len() {
        return Err(Error::Input(format!(
            "expected {} covariate values, got {}",
            beta.len(),
            z.len()
        )));
    }
    let spec = doc.hazard_spec()?;
    let dist = CurrentDuration::new(&spec, &beta, z, doc.truncation)?;
    Ok(ys
        .map(|y| PmfRow {
            y,
            pmf: dist.pmf(y),
            survivor: dist.survivor(y),
            hazard: dist.hazard(y),
        })
        .collect())
}

pub fn write_pmf_table<W: Write>(writer: W, rows: &[PmfRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}
