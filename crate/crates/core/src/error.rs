use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Fock order {n} exceeds the supported maximum {cap}")]
    UnsupportedOrder { n: usize, cap: usize },

    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("truncation at n_max = {n_max} discards population {tail:.3e}")]
    TailPopulation { n_max: usize, tail: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not a valid density matrix: {0}")]
    NotPhysical(String),

    #[error("no samples supplied")]
    EmptyData,

    #[error(
        "sample {index} (theta = {theta}, q = {q}) has zero probability under the current state"
    )]
    SingularData { index: usize, theta: f64, q: f64 },

    #[error("POVM sum is ill-conditioned (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("field leaves the computational window: {retained:.6} of the norm stays on-grid")]
    Aliasing { retained: f64 },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            expected,
        }
    }

    /// Whether the failure is a problem with the caller's input rather than
    /// with the computation or the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io(_)
                | Error::SingularData { .. }
                | Error::IllConditioned { .. }
                | Error::Aliasing { .. }
        )
    }
}
