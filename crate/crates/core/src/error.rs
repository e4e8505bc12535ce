use thiserror::Error;

/// Errors raised by the breather toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("radial functions live on different grids")]
    GridMismatch,

    #[error("far-field window too short: {periods:.2} periods in [{start:.3}, {end:.3}] (need at least {required})")]
    WindowTooShort {
        periods: f64,
        start: f64,
        end: f64,
        required: f64,
    },

    #[error("far-field fit residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    FitResidual { residual: f64, tolerance: f64 },

    #[error("no shooting bracket found for the ground state: {0}")]
    NoBracket(String),

    #[error("ground state residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    GroundStateResidual { residual: f64, tolerance: f64 },

    #[error("ODE integration failed: {0}")]
    Integration(String),

    #[error("ill-conditioned tail fit: {0}")]
    IllConditionedTail(String),

    #[error("far-field amplitude {0:.3e} vanishes numerically")]
    VanishingAmplitude(f64),

    #[error("kernel defect {defect:.3e} exceeds tolerance {tolerance:.3e}")]
    KernelDefect { defect: f64, tolerance: f64 },

    #[error("kernel not simple: singular value gap ratio {ratio:.3e} below {required:.3e}")]
    KernelNotSimple { ratio: f64, required: f64 },

    #[error("ill-conditioned least-squares problem: {0}")]
    IllConditioned(String),

    #[error("the map G requires the sigma_s = 0 case")]
    NotGCase,

    #[error("Newton did not converge at alpha = {alpha:.3e} after {iterations} iterations (residual {residual:.3e})")]
    NewtonDiverged {
        alpha: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("Newton stagnated at alpha = {alpha:.3e}: residual {residual:.3e}")]
    NewtonStagnated { alpha: f64, residual: f64 },

    #[error("linear solver failed: {0}")]
    LinearSolver(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
