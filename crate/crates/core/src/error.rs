use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-contract input.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    Stability { dt: f64, bound: f64 },

    #[error("step produced a degenerate triangle (face {face}); remesh before continuing")]
    Degenerate { face: usize },

    #[error("graph slope |Du| = {slope} exceeds the cap {cap}; the surface is no longer a graph")]
    GraphSlope { slope: f64, cap: f64 },

    #[error("inconsistent intersection frame: residual {residual:e}")]
    InconsistentFrame { residual: f64 },

    #[error("no singularity detected: {0}")]
    NoSingularity(String),

    #[error("shooting failed: {0}")]
    Shooting(String),

    #[error("flow failed at t = {t}: {reason}")]
    Flow { t: f64, reason: String },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// Input-class errors map to CLI exit code 2.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::Input(_)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::InconsistentFrame { .. }
        )
    }
}
