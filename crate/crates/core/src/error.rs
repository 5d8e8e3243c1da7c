use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed chain spec: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid chain spec: {0}")]
    Validation(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("overflow guard: exponent bound {bound:.3} exceeds {limit}")]
    Overflow { bound: f64, limit: f64 },
    #[error("matrix function needs a positive definite argument (smallest eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("non-a.c. point at E = {0}")]
    NonAcPoint(f64),
    #[error("energy {0} is not interior to the common band")]
    OutsideBand(f64),
    #[error("energy {0} lies on a band edge")]
    BandEdge(f64),
    #[error("the common band is empty")]
    EmptyBand,
    #[error("spin system too large: {0} sites (at most 11)")]
    TooManySites(usize),
    #[error("no convergence: {0}")]
    NoConvergence(String),
}
