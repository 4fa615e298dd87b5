use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model parameter: {0}")]
    InvalidModel(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge on [{a}, {b}]: estimate {value:e}, error {error:e} after {evals} evaluations")]
    Quadrature {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
        evals: usize,
    },

    #[error("ODE integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("near-collision: orbit reached radius {closest_approach:e}")]
    NearCollision { closest_approach: f64 },

    #[error("convergence failure: {what} (ladder: {ladder:?})")]
    Convergence { what: String, ladder: Vec<f64> },

    #[error("root finding failed: {0}")]
    Root(String),

    #[error("ambiguous turning point: sign changes in brackets {brackets:?}")]
    AmbiguousTurningPoint { brackets: Vec<(f64, f64)> },

    #[error("angle {theta} lies outside the outgoing cone (max reachable {max_reachable})")]
    OutOfCone { theta: f64, max_reachable: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
