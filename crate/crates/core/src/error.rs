//! Crate-wide error type with pipeline stage labels.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("network `{region}` is disconnected: reduced susceptance matrix is singular")]
    DisconnectedNetwork { region: String },

    #[error("network validation failed with {} violation(s):\n{}", .0.len(), format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("LP solver failure: {0}")]
    SolverFailure(String),

    #[error("LP is malformed: {0}")]
    MalformedLp(String),

    #[error("infeasible: {context}")]
    Infeasible { context: String },

    #[error("unbounded: {context}")]
    Unbounded { context: String },

    #[error("empty region: the reduced operating set is infeasible ({context})")]
    EmptyRegion { context: String },

    #[error("aggregation too coarse on branch row {row}: error bound {eps:.6} closes the flow window; use finer tie-line groups")]
    AggregationTooCoarse { row: usize, eps: f64 },

    #[error("tie-line endpoint mismatch: {0}")]
    EndpointMismatch(String),

    #[error("dispatch envelope infeasible: {context}")]
    EnvelopeInfeasible { context: String },

    #[error("recovery LP infeasible for region `{region}`: {context}")]
    RecoveryInfeasible { region: String, context: String },

    #[error("Fourier-Motzkin blowup guard exceeded: {0}")]
    FmeBlowup(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("case file error at {path}: {message}")]
    CaseField { path: String, message: String },

    #[error("unknown region `{0}`")]
    UnknownRegion(String),

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wrap an error with a pipeline stage label.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

/// One validation finding, addressed by a JSON-pointer-style path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}
