use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field length {found} does not match grid point count {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    /// Stages 1-4 are the rate evaluations, stage 5 the combined update.
    #[error("RK4 produced a non-finite state at stage {stage}")]
    Rk4NonFinite { stage: usize },

    #[error("degenerate frame at grid index {index}: k = {k:e} is below k_min")]
    DegenerateFrame { index: usize, k: f64 },

    #[error("negative radicand {radicand:e} under the square root at grid index {index}")]
    SqrtDomain { index: usize, radicand: f64 },

    #[error("unsupported beta {0}: only beta = +1 has a real unit-vector representation")]
    UnsupportedBeta(i32),

    #[error("time step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("Gram deviation {deviation:e} exceeds {limit:e} at step {index}")]
    GramDrift { index: usize, deviation: f64, limit: f64 },

    #[error("{relation} violated: relative max deviation {deviation:e} exceeds tolerance {tolerance:e}")]
    MapInconsistent {
        relation: &'static str,
        deviation: f64,
        tolerance: f64,
    },

    #[error("non-positive metric determinant {det:e} at index {index}")]
    DegenerateMetric { index: usize, det: f64 },

    #[error("metric root {which} is not positive at index {index}")]
    NonPositiveMetricRoot { which: &'static str, index: usize },

    #[error("path leaves the grid at move {step}")]
    PathOutOfGrid { step: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_step(step: usize, source: Error) -> Self {
        Error::AtStep {
            step,
            source: Box::new(source),
        }
    }

    /// True for failures of the numerics themselves, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFinite { .. }
            | Error::Rk4NonFinite { .. }
            | Error::DegenerateFrame { .. }
            | Error::SqrtDomain { .. }
            | Error::GramDrift { .. }
            | Error::MapInconsistent { .. }
            | Error::DegenerateMetric { .. }
            | Error::NonPositiveMetricRoot { .. } => true,
            Error::AtStep { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
