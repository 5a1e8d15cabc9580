use thiserror::Error;

/// Failures raised anywhere in the shooting / validation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("slope {slope:.6} does not exceed the integrability threshold {threshold:.6}; tail mass diverges")]
    TailDivergence { slope: f64, threshold: f64 },

    #[error("adaptive integrator underflowed its minimum step at t = {t:.6e} (h = {h:.3e})")]
    StepFailure { t: f64, h: f64 },

    #[error("tail of the trajectory is not in the asymptotic regime (slope varies by {spread:.3e} over the fit window)")]
    NonAsymptoticTail { spread: f64 },

    #[error("profile scan window contains no samples")]
    EmptyScan,

    #[error("profile has {0} failed samples and cannot certify roots")]
    IncompleteProfile(usize),

    #[error("grid node at r = {r:.6e} lies beyond the trajectory end r = {r_end:.6e}")]
    GridExceedsTrajectory { r: f64, r_end: f64 },

    #[error("Newton iteration did not converge in {} iterations (last residual {:.3e})", .history.len().saturating_sub(1), .history.last().copied().unwrap_or(f64::NAN))]
    NoConvergence { history: Vec<f64> },

    #[error("collocation Jacobian is singular at lambda = {lambda} (degenerate mode j = {mode:?})")]
    SingularJacobian { lambda: f64, mode: Option<u32> },

    #[error("trajectory was shot from s = {trajectory:.12} but the root sits at s = {root:.12}")]
    TrajectoryMismatch { trajectory: f64, root: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
