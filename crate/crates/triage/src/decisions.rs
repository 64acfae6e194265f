use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::state::TriageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecidedLabel {
    VarietyA,
    VarietyB,
    Common,
    Irrelevant,
}

impl DecidedLabel {
    pub const ALL: [DecidedLabel; 4] = [Self::VarietyA, Self::VarietyB, Self::Common, Self::Irrelevant];

    pub fn name(self) -> &'static str {
        match self {
            Self::VarietyA => "variety_a",
            Self::VarietyB => "variety_b",
            Self::Common => "common",
            Self::Irrelevant => "irrelevant",
        }
    }
}

impl fmt::Display for DecidedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecidedLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| format!("unknown label `{s}`"))
    }
}

/// A reviewer's verdict on one instance. A later decision by the same
/// annotator on the same instance supersedes the earlier one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelDecision {
    pub instance_id: String,
    pub decided_label: DecidedLabel,
    pub annotator_id: String,
    pub timestamp: DateTime<Utc>,
}

/// Append-only JSONL file of decisions, one per line.
#[derive(Debug)]
pub struct DecisionLog {
    path: PathBuf,
    file: File,
}

impl DecisionLog {
    /// Opens (creating if needed) the log and returns it with the decisions
    /// it already holds, in file order.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<LabelDecision>), TriageError> {
        let path = path.as_ref().to_path_buf();
        let existing = if path.exists() {
            read_decisions(BufReader::new(File::open(&path)?))?
        } else {
            Vec::new()
        };
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok((Self { path, file }, existing))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes one line and syncs it to disk before returning.
    pub fn append(&mut self, decision: &LabelDecision) -> Result<(), TriageError> {
        let mut line = serde_json::to_string(decision).map_err(|e| TriageError::Log(e.to_string()))?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.sync_data()?;
        Ok(())
    }
}

pub fn read_decisions<R: BufRead>(reader: R) -> Result<Vec<LabelDecision>, TriageError> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let decision = serde_json::from_str(&line)
            .map_err(|e| TriageError::Log(format!("line {}: {e}", n + 1)))?;
        out.push(decision);
    }
    Ok(out)
}
