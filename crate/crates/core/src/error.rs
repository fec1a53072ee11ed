use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("address out of range: {0}")]
    AddressRange(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resource cap exceeded: {what} needs {count}, cap is {cap}")]
    Resource { what: String, count: u64, cap: u64 },
    #[error("no cube in that direction: {0}")]
    Boundary(String),
    #[error("exceptional parameter t = {t} (midpoint at level {level})")]
    ExceptionalParameter { t: f64, level: u32 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("classification failed: {0}")]
    Classification(String),
    #[error("graph is disconnected: {0}")]
    Connectivity(String),
    #[error("no convergence after {iterations} sweeps (gap {gap:.3e}, min constraint {min_constraint:.6})")]
    Convergence {
        iterations: usize,
        gap: f64,
        min_constraint: f64,
    },
    #[error("truncation too shallow: {0}")]
    Truncation(String),
    #[error("below graph resolution: {0}")]
    Resolution(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
