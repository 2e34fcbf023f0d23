//! Measured relative entropy: the largest classical relative entropy between
//! the outcome statistics of two states over all measurements, and its
//! minimization over the alternative set.
//!
//! The search runs over rank-one projective measurements with d outcomes.
//! Qubits use an exact reduction to a one-dimensional search over
//! measurement axes in the plane of the two Bloch vectors; larger dimensions
//! use multi-start ascent over unitary bases.

mod cache;
mod oracle;
mod pair;
mod set;

use serde::{Deserialize, Serialize};

pub use cache::{CacheStats, PovmCache};
pub use oracle::oracle_mre_qubit;
pub use pair::{induced_kl, mre_pair};
pub use set::{mre_from_set, mre_to_set, SetMreResult};

use crate::quantum::Povm;

/// Which relative entropy a measurement should maximize, relative to the null state rho.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Maximize D(P_rho || P_sigma): the drift of the statistic under the null.
    NullDrift,
    /// Maximize D(P_sigma || P_rho): the drift under the alternative.
    AltDrift,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Exact axis search for qubits, unitary ascent otherwise.
    Auto,
    /// Multi-start unitary ascent for every dimension.
    Unitary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub tol: f64,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Trace-distance radius within which a cached measurement seeds a warm start.
    pub cache_radius: f64,
    pub method: SolverMethod,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, restarts: 8, max_iterations: 500, cache_radius: 0.05, method: SolverMethod::Auto }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MreResult {
    /// Induced relative entropy of `povm`, in nats.
    pub value: f64,
    pub povm: Povm,
    pub iterations: usize,
    pub converged: bool,
}

/// Full-rank floor used by the solvers' preconditions.
pub(crate) const SOLVER_RANK_FLOOR: f64 = 1e-12;
