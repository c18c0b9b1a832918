//! One-dimensional solver for a constrained aggregation-diffusion-reaction
//! equation. Transport is discretized by a minimizing-movement (JKO) step in
//! Lagrangian quantile coordinates, where the quadratic Wasserstein term is exact;
//! reaction is handled by Lie operator splitting. An independent finite-volume
//! solver and a closed-form self-similar solution serve as oracles, and every
//! discrete estimate the scheme is supposed to satisfy (energy dissipation,
//! summed transport cost, per-step growth bounds, constraint residual, weak-form
//! residual) is checked, not assumed.

pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod reaction;
pub mod testfns;
pub mod transport;
pub mod validation;

pub use error::{Error, Result};
pub use grid::{Grid, GridDensity, ParticleDensity, ScalarField};
pub use model::{ModelSpec, SupportIndicator};

/// Crate version, re-exported so front ends can stamp artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
