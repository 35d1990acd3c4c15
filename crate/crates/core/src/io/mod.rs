//! File formats: dataset CSV, simulation sidecars, fit results, study grids
//! and summary tables.

mod dataset;
mod result;
mod study;

pub use dataset::{
    load_dataset, read_dataset, read_meta, sidecar_path, write_dataset, write_meta, SimulationMeta,
};
pub use result::{
    pmf_table, read_result, write_pmf_table, write_result, AlphaEntry, BetaEntry, PmfRow,
    ResultDocument,
};
pub use study::{read_study_config, write_records_csv, write_summary_csv};
