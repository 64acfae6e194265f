//! Common-example discovery for language variety identification.
//!
//! The pipeline: load a corpus ([`corpus`]), normalize its text
//! ([`preprocess`]), train a classifier while logging per-epoch label
//! probabilities ([`trainer`]), turn those logs into per-instance scores and
//! rankings ([`dynamics`]), measure how well the rankings surface the known
//! common examples ([`evaluation`]), and inspect what the top of the ranking
//! looks like ([`analysis`]).

pub mod analysis;
pub mod corpus;
pub mod dynamics;
pub mod evaluation;
pub mod features;
pub mod preprocess;
pub mod rng;
pub mod synthetic;
pub mod trainer;

pub use corpus::{Dataset, DatasetFormat, Instance, LabelSet, VarietyLabel};
pub use dynamics::{EpochProbabilityLog, RankedList, ScoreRecord, Scorer};
pub use evaluation::EvalReport;
pub use preprocess::NormalizationConfig;
pub use trainer::{LinearModel, TrainConfig};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
