use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SbrpError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SbrpError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid instance: {0}")]
    Validation(String),

    #[error("node {node} cannot reach {target}")]
    Unreachable { node: u64, target: &'static str },

    #[error("no candidate stop within walking range of students {students:?}")]
    UncoveredStudents { students: Vec<u32> },

    #[error("trip enumeration exceeded the cap of {cap} trips; lower beta or gamma")]
    TripCapExceeded { cap: usize },

    #[error("exact path-TSP limited to {limit} nodes, got {size}; use the insertion evaluator")]
    ExactLimit { size: usize, limit: usize },

    #[error("brute-force oracle is limited to {limit} students, instance has {size}")]
    OracleGuard { size: usize, limit: usize },

    #[error("no feasible assignment: student {student} has no bus trip or enabled alternate mode")]
    Infeasible { student: u32 },

    #[error("no solution: {0}")]
    Unsolved(String),

    #[error("external solver: {0}")]
    ExternalSolver(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SbrpError {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        SbrpError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
