use serde::{Deserialize, Serialize};

use super::state::DensityMatrix;
use super::wire::{check_version, from_rows, to_rows, PovmWire, SCHEMA_VERSION};
use super::{COMPLETENESS_TOL, EIGEN_TOL, HERMITIAN_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};

/// A finite, outcome-labelled measurement: PSD effects summing to the identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "PovmWire", into = "PovmWire")]
pub struct Povm {
    outcomes: Vec<String>,
    effects: Vec<CMatrix>,
    /// Orthonormal basis whose rank-one projectors are the effects, when known.
    #[serde(skip)]
    basis: Option<CMatrix>,
}

impl Povm {
    pub fn new(outcomes: Vec<String>, effects: Vec<CMatrix>) -> Result<Self> {
        if outcomes.len() != effects.len() {
            return Err(Error::InvalidPovm(format!(
                "{} labels for {} effects",
                outcomes.len(),
                effects.len()
            )));
        }
        let Some(first) = effects.first() else {
            return Err(Error::InvalidPovm("no effects".into()));
        };
        let d = first.nrows();
        let mut total = CMatrix::zeros(d, d);
        for (label, e) in outcomes.iter().zip(&effects) {
            if e.nrows() != d || e.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: e.nrows() });
            }
            let dev = linalg::hermitian_deviation(e);
            if dev > HERMITIAN_TOL {
                return Err(Error::InvalidPovm(format!("effect {label:?} not Hermitian ({dev:e})")));
            }
            let min = linalg::hermitian_eigenvalues(e)[0];
            if min < -EIGEN_TOL {
                return Err(Error::InvalidPovm(format!("effect {label:?} has eigenvalue {min:e}")));
            }
            total += e;
        }
        for i in 0..d {
            total[(i, i)] -= c(1.0, 0.0);
        }
        let gap = linalg::max_abs_entry(&total);
        if gap > COMPLETENESS_TOL {
            return Err(Error::InvalidPovm(format!("effects sum to identity only within {gap:e}")));
        }
        Ok(Povm { outcomes, effects, basis: None })
    }

    /// Projective measurement onto the columns of a unitary matrix.
    pub fn from_basis(u: &CMatrix) -> Self {
        let d = u.nrows();
        let effects = (0..d)
            .map(|j| {
                let col = u.column(j);
                col * col.adjoint()
            })
            .collect();
        Povm { outcomes: default_labels(d), effects, basis: Some(u.clone()) }
    }

    /// Qubit measurement along the Bloch direction `n` (normalized here).
    /// Outcome "0" is the +n projector.
    pub fn qubit_axis(n: [f64; 3]) -> Self {
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        let [x, y, z] = n.map(|v| v / norm);
        let plus = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.5 * (1.0 + z), 0.0), c(0.5 * x, -0.5 * y), c(0.5 * x, 0.5 * y), c(0.5 * (1.0 - z), 0.0)],
        );
        let minus = CMatrix::identity(2, 2) - &plus;
        Povm { outcomes: default_labels(2), effects: vec![plus, minus], basis: None }
    }

    pub fn computational(d: usize) -> Self {
        Self::from_basis(&CMatrix::identity(d, d))
    }

    /// The single-outcome measurement {I}.
    pub fn trivial(d: usize) -> Self {
        Povm { outcomes: vec!["1".into()], effects: vec![CMatrix::identity(d, d)], basis: None }
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn effect(&self, outcome: usize) -> &CMatrix {
        &self.effects[outcome]
    }

    pub fn basis(&self) -> Option<&CMatrix> {
        self.basis.as_ref()
    }

    /// Bloch direction of outcome "0" for a two-outcome qubit measurement.
    pub(crate) fn qubit_direction(&self) -> Option<[f64; 3]> {
        if self.dim() != 2 || self.len() != 2 {
            return None;
        }
        let b = super::state::bloch_of(&self.effects[0]);
        let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
        (norm > 0.5).then(|| b.map(|v| v / norm))
    }

    /// Tr[M(x) state]
    pub fn probability(&self, outcome: usize, state: &DensityMatrix) -> f64 {
        linalg::trace_product(&self.effects[outcome], state.matrix())
    }
}

fn default_labels(d: usize) -> Vec<String> {
    (0..d).map(|i| i.to_string()).collect()
}

impl TryFrom<PovmWire> for Povm {
    type Error = Error;

    fn try_from(w: PovmWire) -> Result<Self> {
        check_version(&w.v).map_err(Error::Config)?;
        let effects = w
            .effects
            .iter()
            .map(from_rows)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(Error::Config)?;
        if let (Some(d), Some(e)) = (w.dim, effects.first()) {
            if e.nrows() != d {
                return Err(Error::DimensionMismatch { expected: d, found: e.nrows() });
            }
        }
        Povm::new(w.outcomes, effects)
    }
}

impl From<Povm> for PovmWire {
    fn from(p: Povm) -> Self {
        PovmWire {
            v: Some(SCHEMA_VERSION.into()),
            dim: Some(p.dim()),
            outcomes: p.outcomes,
            effects: p.effects.iter().map(to_rows).collect(),
        }
    }
}

/// Probability vector over a POVM's outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < -1e-12) {
            return Err(Error::InvalidDistribution(format!("entry {p}")));
        }
        for p in probs.iter_mut() {
            *p = p.max(0.0);
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > COMPLETENESS_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        if total != 1.0 {
            for p in probs.iter_mut() {
                *p /= total;
            }
        }
        Ok(OutcomeDistribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Born's rule: outcome x occurs with probability Tr[M(x) state].
pub fn born_distribution(state: &DensityMatrix, povm: &Povm) -> Result<OutcomeDistribution> {
    if state.dim() != povm.dim() {
        return Err(Error::DimensionMismatch { expected: povm.dim(), found: state.dim() });
    }
    OutcomeDistribution::new((0..povm.len()).map(|x| povm.probability(x, state)).collect())
}
