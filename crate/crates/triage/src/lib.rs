//! Review queue for ranked common-example candidates.
//!
//! [`TriageState`] is a pure state machine over [`LabelDecision`]s; the
//! decision log file is its only persistence, so replaying the log rebuilds
//! the state exactly. [`api::router`] exposes it over HTTP.

pub mod api;
pub mod decisions;
pub mod state;

pub use decisions::{DecidedLabel, DecisionLog, LabelDecision};
pub use state::{CandidateView, ExportReport, Resolution, TriageError, TriageState, TriageStats};
