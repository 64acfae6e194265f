use thiserror::Error;

/// Top-level failure, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or config file (exit 2).
    #[error("config error: {0}")]
    Config(String),
    /// Unreadable or inconsistent input data (exit 3).
    #[error("data error: {0}")]
    Data(String),
    /// Anything else, including output I/O (exit 4).
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    /// Prefixes the message with the pipeline stage and, if any, the seed.
    pub fn at(self, stage: &str, seed: Option<u64>) -> Self {
        let ctx = match seed {
            Some(s) => format!("[{stage}, seed {s}] "),
            None => format!("[{stage}] "),
        };
        match self {
            CliError::Config(m) => CliError::Config(ctx + &m),
            CliError::Data(m) => CliError::Data(ctx + &m),
            CliError::Internal(m) => CliError::Internal(ctx + &m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<varmap_core::corpus::CorpusError> for CliError {
    fn from(e: varmap_core::corpus::CorpusError) -> Self {
        match e {
            varmap_core::corpus::CorpusError::Io(io) => CliError::Data(io.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<varmap_core::dynamics::LogError> for CliError {
    fn from(e: varmap_core::dynamics::LogError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<varmap_core::dynamics::ScoreError> for CliError {
    fn from(e: varmap_core::dynamics::ScoreError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<varmap_core::evaluation::EvalError> for CliError {
    fn from(e: varmap_core::evaluation::EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<varmap_core::trainer::TrainError> for CliError {
    fn from(e: varmap_core::trainer::TrainError) -> Self {
        use varmap_core::trainer::TrainError;
        match e {
            TrainError::Config(m) => CliError::Config(m),
            TrainError::Io(io) => CliError::Internal(io.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<varmap_core::analysis::AnalysisError> for CliError {
    fn from(e: varmap_core::analysis::AnalysisError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<varmap_triage::TriageError> for CliError {
    fn from(e: varmap_triage::TriageError) -> Self {
        use varmap_triage::TriageError;
        match e {
            TriageError::Io(io) => CliError::Internal(io.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}
