use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of a map or routine.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural invariant of a Lorenz map or branch failed.
    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("fit residual {residual:.3e} exceeds tolerance {tolerance:.3e} at degree {degree}")]
    Fit {
        residual: f64,
        tolerance: f64,
        degree: usize,
    },

    /// The map is trivial (or only weakly nontrivial) where nontriviality is required.
    #[error("map is not nontrivial: {0}")]
    Trivial(String),

    #[error("renormalizable only {achieved} times, {requested} requested")]
    Depth { achieved: usize, requested: usize },

    /// Overlapping orbit intervals, or an orbit that leaves the expected branch.
    #[error("orbit error: {0}")]
    Orbit(String),

    #[error("t-recursion broke down at index {index}: t = {t}, half-length = {half_length}")]
    Recursion {
        index: usize,
        t: f64,
        half_length: f64,
    },

    #[error("continuation failed at path parameter {s:.6}: {reason}")]
    Continuation { s: f64, reason: String },

    #[error("certificate failed for condition {condition}: {detail}")]
    Certification { condition: String, detail: String },

    #[error("fixed-point search diverged: {0}")]
    Divergence(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that say "this map is not in the class", as opposed to
    /// a numerical breakdown. The CLI maps these to a distinct exit code.
    pub fn is_classification(&self) -> bool {
        matches!(self, Error::Trivial(_) | Error::Depth { .. })
    }
}
