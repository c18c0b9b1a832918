//! Crate-wide error type. Every fallible operation returns [`Result`]; invariant
//! violations that indicate programmer error (not bad input) use assertions
//! instead.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A constructor or operation received an argument outside its domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two grids that must be identical (same half-width and cell count) differ.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// An equal-mass metric was asked to compare densities whose masses differ
    /// by more than 1e-9 relative.
    #[error("mass mismatch: {lhs} vs {rhs} (relative difference {rel:.3e})")]
    UnequalMass { lhs: f64, rhs: f64, rel: f64 },

    /// A density with zero total mass was passed where mass is required.
    #[error("density has zero mass: {0}")]
    ZeroMass(&'static str),

    /// Particle positions (or their reconstruction flanks) left the grid's
    /// domain; the truncation half-width is too small for this run.
    #[error("particle support [{lo:.6}, {hi:.6}] exceeds the domain [-{half_width}, {half_width}]")]
    DomainOverflow { lo: f64, hi: f64, half_width: f64 },

    /// An explicitly requested finite-volume time step exceeds the stability
    /// bound; `admissible` is the largest currently safe step.
    #[error("time step {requested:.6e} violates the CFL bound; admissible step is {admissible:.6e}")]
    CflViolation { requested: f64, admissible: f64 },

    /// The transport optimizer failed to meet its tolerance and the run was
    /// configured to abort on stall.
    #[error("transport step {step} stalled: gradient norm {grad_norm:.3e} after {iterations} iterations")]
    Stalled { step: usize, grad_norm: f64, iterations: usize },

    /// The final time is not an integer multiple of the step size.
    #[error("t_final {t_final} is not an integer multiple of tau {tau}")]
    TimeMisaligned { tau: f64, t_final: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
