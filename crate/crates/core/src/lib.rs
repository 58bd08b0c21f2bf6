//! Synthetic 12-lead ECG generation with myocardial-infarction morphology,
//! plus the statistics used to check a synthetic cohort against real data.
//!
//! The generator is a pipeline of pure stages driven by explicit seeds:
//! beat kernels ([`signal`]) on an RR rhythm ([`rhythm`]), projected to twelve
//! leads ([`leads`]), optionally altered by MI effects ([`mi`]), then corrupted
//! by artifacts and normalized ([`noise`]). [`pipeline`] ties the stages
//! together; [`fidelity`] and [`probe`] measure the result.

pub mod config;
pub mod error;
pub mod fidelity;
pub mod grid;
pub mod io;
pub mod leads;
pub mod mi;
pub mod noise;
pub mod pipeline;
pub mod probe;
pub mod record;
pub mod rhythm;
pub mod rng;
pub mod signal;
mod spectrum;

pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use record::{Label, Lead, MultiLeadRecord, Provenance, Source};
pub use rng::SeededRng;
