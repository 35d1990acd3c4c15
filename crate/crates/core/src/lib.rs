//! Grouped current-duration survival models with a proportional-hazards
//! covariate effect and Type I censoring.
//!
//! * [`hazard`] evaluates discrete hazards and the current-duration pmf.
//! * [`likelihood`] fits the semiparametric and piecewise-constant models.
//! * [`sim`] simulates current durations from an equilibrium renewal process.
//! * [`study`] runs replicated simulation studies and summarizes them.
//! * [`io`] holds the CSV/JSON file formats used by the command-line tool.

pub mod error;
pub mod hazard;
pub mod io;
pub mod likelihood;
pub mod math;
pub mod sim;
pub mod study;

pub use error::{Error, Result};

/// Double-precision hazard specification.
pub type HazardSpecF64 = hazard::HazardSpec<f64>;
/// Single-precision hazard specification.
pub type HazardSpecF32 = hazard::HazardSpec<f32>;
pub type TailSpecF64 = hazard::TailSpec<f64>;
pub type CurrentDurationF64<'a> = hazard::CurrentDuration<'a, f64>;
