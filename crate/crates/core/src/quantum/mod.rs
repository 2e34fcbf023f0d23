//! States, measurements and the divergences between their outcome statistics.
//!
//! All logarithms are natural, so every divergence is reported in nats.

mod divergence;
mod povm;
mod state;
pub mod wire;

pub use divergence::{d_max, kl_divergence, trace_distance};
pub(crate) use divergence::{kl_slices, trace_norm};
pub use povm::{born_distribution, OutcomeDistribution, Povm};
pub use state::{min_eigenvalue, validate_state, DensityMatrix};

/// Element-wise Hermiticity tolerance for states and effects.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Allowed |Tr - 1| for states.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues above `-EIGEN_TOL` are clamped to zero, below are rejected.
pub const EIGEN_TOL: f64 = 1e-10;
/// Completeness tolerance of a POVM and normalization tolerance of distributions.
pub const COMPLETENESS_TOL: f64 = 1e-9;
