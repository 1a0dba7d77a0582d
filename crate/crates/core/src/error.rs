use crate::geometry::Point;

/// Errors raised across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty body: {0}")]
    EmptyBody(&'static str),

    #[error("unbounded polytope")]
    Unbounded,

    #[error("infeasible constraint system")]
    Infeasible,

    #[error("projection did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        best: Point,
        residual: f64,
    },

    #[error("matrix game solver failed after {iterations} pivots (value {value}, gap {gap:e})")]
    SolverFailed {
        iterations: usize,
        value: f64,
        gap: f64,
    },

    #[error("zero direction")]
    ZeroDirection,

    #[error("invalid mixed action: {0}")]
    InvalidMixedAction(String),

    #[error("point lies outside the feasible set (distance {distance:e})")]
    OutsideFeasible { distance: f64 },

    #[error("action {action} in the support is not safe")]
    UnsafeSupport { action: usize },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("incompatible game: {0}")]
    IncompatibleGame(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown scenario `{name}` (valid: {})", valid.join(", "))]
    UnknownScenario { name: String, valid: Vec<String> },

    #[error("rate fit needs at least 10 points, found {found}")]
    InsufficientFitPoints { found: usize },

    #[error("trace carries no safe-count curve")]
    MissingSafeCounts,

    #[error("run with seed {seed} failed: {source}")]
    RunFailed {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
