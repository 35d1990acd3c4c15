use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{Dataset, Observation};
use crate::sim::{DgpSpec, Recurrence, Sampler};

/// Reads a dataset CSV: header `y,delta,<covariates...>`, one row per subject.
/// `delta` is 1 for an exact duration and 0 for a censored one.
pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 || &header[0] != "y" || &header[1] != "delta" {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with `y,delta`".into(),
        });
    }
    let names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
    let mut observations = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Parse { line, message };
        if record.len() != header.len() {
            return Err(bad(format!(
                "expected {} fields, found {}",
                header.len(),
                record.len()
            )));
        }
        let y: u32 = record[0].parse().map_err(|_| {
            bad(format!(
                "y must be a nonnegative integer, got `{}`",
                &record[0]
            ))
        })?;
        let uncensored = match &record[1] {
            "1" => true,
            "0" => false,
            other => return Err(bad(format!("delta must be 0 or 1, got `{other}`"))),
        };
        let z = record
            .iter()
            .skip(2)
            .zip(&names)
            .map(|(field, name)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(bad(format!(
                    "covariate `{name}` must be a finite number, got `{field}`"
                ))),
            })
            .collect::<Result<Vec<f64>>>()?;
        observations.push(Observation::new(y, uncensored, z));
    }
    Dataset::new(observations, names)
}

pub fn write_dataset<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["y".to_string(), "delta".to_string()];
    header.extend(data.covariate_names.iter().cloned());
    wtr.write_record(&header)?;
    for obs in &data.observations {
        let mut row = vec![
            obs.y.to_string(),
            if obs.uncensored { "1" } else { "0" }.to_string(),
        ];
        row.extend(obs.z.iter().map(|v| v.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Generation parameters written next to a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationMeta {
    pub dgp: DgpSpec,
    pub n: usize,
    pub tau: Option<u32>,
    pub horizon: u64,
    pub seed: u64,
    pub sampler: Sampler,
    pub recurrence: Recurrence,
    pub pre_censoring_max: Option<u32>,
    pub censored_fraction: f64,
}

/// `data.csv` -> `data.meta.json`.
pub fn sidecar_path(dataset: &Path) -> PathBuf {
    dataset.with_extension("meta.json")
}

pub fn write_meta<W: Write>(writer: W, meta: &SimulationMeta) -> Result<()> {
    serde_json::to_writer_pretty(writer, meta)?;
    Ok(())
}

pub fn read_meta<R: Read>(reader: R) -> Result<SimulationMeta> {
    from_json_reader(reader)
}

/// Reads a dataset and, if a sidecar file exists, its pre-censoring maximum.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let data = read_dataset(std::fs::File::open(path)?)?;
    let meta = sidecar_path(path);
    if meta.exists() {
        let meta = read_meta(std::fs::File::open(meta)?)?;
        return Ok(data.with_pre_censoring_max(meta.pre_censoring_max));
    }
    Ok(data)
}

/// JSON deserialization that reports the path of the offending field.
pub(crate) fn from_json_reader<R: Read, T: serde::de::DeserializeOwned>(reader: R) -> Result<T> {
    let mut de = serde_json::Deserializer::from_reader(reader);
    serde_path_to_error::deserialize(&mut de).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}
