use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::wire::{check_version, from_rows, to_rows, StateWire, SCHEMA_VERSION};
use super::{EIGEN_TOL, HERMITIAN_TOL, TRACE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};

/// A validated d x d density matrix: Hermitian, positive semi-definite, unit trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "StateWire", into = "StateWire")]
pub struct DensityMatrix {
    matrix: CMatrix,
    min_eig: OnceLock<f64>,
}

/// Checks the state invariants and repairs float noise.
///
/// Deviations within tolerance are fixed (Hermitian part taken, small
/// negative eigenvalues clamped to zero, trace renormalized); anything
/// beyond tolerance is rejected with the offending magnitude.
pub fn validate_state(raw: &CMatrix) -> Result<DensityMatrix> {
    if raw.nrows() != raw.ncols() {
        return Err(Error::DimensionMismatch { expected: raw.nrows(), found: raw.ncols() });
    }
    if raw.nrows() == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    let deviation = linalg::hermitian_deviation(raw);
    if deviation > HERMITIAN_TOL {
        return Err(Error::HermitianViolation { deviation });
    }
    let mut matrix = linalg::symmetrize(raw);
    let tr = linalg::trace(&matrix).re;
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(Error::TraceViolation { deviation: (tr - 1.0).abs() });
    }
    let eigenvalues = linalg::hermitian_eigenvalues(&matrix);
    let min_eig = eigenvalues[0];
    if min_eig < -EIGEN_TOL {
        return Err(Error::NegativeEigenvalue { min_eigenvalue: min_eig });
    }
    if min_eig < 0.0 {
        matrix = linalg::hermitian_function(&matrix, |x| x.max(0.0));
    }
    let tr = linalg::trace(&matrix).re;
    if tr != 1.0 {
        matrix /= c(tr, 0.0);
    }
    Ok(DensityMatrix::from_matrix_unchecked(matrix))
}

pub fn min_eigenvalue(state: &DensityMatrix) -> f64 {
    state.min_eigenvalue()
}

impl DensityMatrix {
    pub fn new(raw: CMatrix) -> Result<Self> {
        validate_state(&raw)
    }

    /// Wraps a matrix that is a state by construction (e.g. a convex mixture of states).
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        DensityMatrix { matrix, min_eig: OnceLock::new() }
    }

    /// From real row-major entries.
    pub fn from_real(d: usize, entries: &[f64]) -> Result<Self> {
        validate_state(&linalg::real_matrix(d, entries))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        validate_state(&linalg::diag(values))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self::from_matrix_unchecked(linalg::diag(&vec![1.0 / d as f64; d]))
    }

    /// Qubit state (I + r . sigma) / 2 for a Bloch vector r with |r| <= 1.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                c(0.5 * (1.0 + r[2]), 0.0),
                c(0.5 * r[0], -0.5 * r[1]),
                c(0.5 * r[0], 0.5 * r[1]),
                c(0.5 * (1.0 - r[2]), 0.0),
            ],
        );
        validate_state(&m)
    }

    /// Bloch vector of a qubit state.
    pub fn bloch(&self) -> Option<[f64; 3]> {
        (self.dim() == 2).then(|| bloch_of(&self.matrix))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.min_eig.get_or_init(|| linalg::hermitian_eigenvalues(&self.matrix)[0])
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    pub fn is_full_rank(&self, floor: f64) -> bool {
        self.min_eigenvalue() > floor
    }

    /// Sum_i w_i states_i. The weights must be a probability vector.
    pub fn mixture(states: &[DensityMatrix], weights: &[f64]) -> Self {
        assert_eq!(states.len(), weights.len());
        assert!(!states.is_empty());
        let d = states[0].dim();
        let mut m = CMatrix::zeros(d, d);
        for (s, &w) in states.iter().zip(weights) {
            m += &s.matrix * c(w, 0.0);
        }
        Self::from_matrix_unchecked(m)
    }

    /// Commutator norm max|[A, B]|.
    pub fn commutator_norm(&self, other: &DensityMatrix) -> f64 {
        let ab = &self.matrix * &other.matrix;
        let ba = &other.matrix * &self.matrix;
        linalg::max_abs_entry(&(ab - ba))
    }
}

pub(crate) fn bloch_of(m: &CMatrix) -> [f64; 3] {
    let off = m[(1, 0)];
    [2.0 * off.re, 2.0 * off.im, m[(0, 0)].re - m[(1, 1)].re]
}

impl PartialEq for DensityMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl TryFrom<StateWire> for DensityMatrix {
    type Error = Error;

    fn try_from(w: StateWire) -> Result<Self> {
        check_version(&w.v).map_err(Error::Config)?;
        let m = from_rows(&w.entries).map_err(Error::Config)?;
        if let Some(d) = w.dim {
            if d != m.nrows() {
                return Err(Error::DimensionMismatch { expected: d, found: m.nrows() });
            }
        }
        validate_state(&m)
    }
}

impl From<DensityMatrix> for StateWire {
    fn from(s: DensityMatrix) -> Self {
        StateWire { v: Some(SCHEMA_VERSION.into()), dim: Some(s.dim()), entries: to_rows(&s.matrix) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximally_mixed_is_valid() {
        let s = DensityMatrix::diagonal(&[0.5, 0.5]).unwrap();
        assert!((s.min_eigenvalue() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn diagonal_state_eigenvalues() {
        let s = DensityMatrix::diagonal(&[0.9, 0.1]).unwrap();
        let e = s.eigenvalues();
        assert!((e[0] - 0.1).abs() < 1e-15 && (e[1] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn rejects_negative_eigenvalue() {
        // eigenvalues 0.5 +- sqrt(0.26), the lower one ~ -0.0099
        let err = DensityMatrix::from_real(2, &[0.6, 0.5, 0.5, 0.4]).unwrap_err();
        match err {
            Error::NegativeEigenvalue { min_eigenvalue } => {
                assert!((min_eigenvalue - (0.5 - 0.26f64.sqrt())).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_hermitian_and_bad_trace() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert!(matches!(validate_state(&m), Err(Error::HermitianViolation { .. })));
        assert!(matches!(DensityMatrix::diagonal(&[0.5, 0.6]), Err(Error::TraceViolation { .. })));
        let rect = CMatrix::zeros(2, 3);
        assert!(matches!(validate_state(&rect), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn clamps_tiny_negative_eigenvalue() {
        let s = DensityMatrix::diagonal(&[1.0 + 5e-11, -5e-11]).unwrap();
        assert!(s.min_eigenvalue() >= 0.0);
        assert!((linalg::trace(s.matrix()).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bloch_round_trip() {
        let r = [0.3, -0.2, 0.5];
        let s = DensityMatrix::from_bloch(r).unwrap();
        let back = s.bloch().unwrap();
        for k in 0..3 {
            assert!((r[k] - back[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn json_schema_round_trip() {
        let s = DensityMatrix::from_bloch([0.1, 0.2, 0.3]).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"v\":\"v1\""));
        let back: DensityMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"v":"v1","entries":[[[0.6,0],[0.5,0]],[[0.5,0],[0.4,0]]]}"#;
        assert!(serde_json::from_str::<DensityMatrix>(bad).is_err());
    }
}
