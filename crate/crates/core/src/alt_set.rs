//! The composite alternative as a polytope of full-rank states.
//!
//! The set is the convex hull of finitely many vertex states. Membership is
//! decided by a linear program over the real coordinates of the Hermitian
//! matrices, and priors are discrete clouds of hull points.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::logsumexp;
use crate::quantum::wire::{check_version, SCHEMA_VERSION};
use crate::quantum::DensityMatrix;

/// Vertices must have min eigenvalue at least this large.
pub const FULL_RANK_FLOOR: f64 = 1e-6;
/// Default trace-norm tolerance for membership.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "AltSetWire", into = "AltSetWire")]
pub struct AltSet {
    vertices: Vec<DensityMatrix>,
    delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AltSetWire {
    #[serde(default)]
    v: Option<String>,
    #[serde(default)]
    dim: Option<usize>,
    vertices: Vec<DensityMatrix>,
    #[serde(default)]
    delta: Option<f64>,
}

impl AltSet {
    pub fn new(vertices: Vec<DensityMatrix>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(Error::EmptySet);
        };
        let d = first.dim();
        let mut delta = f64::INFINITY;
        for v in &vertices {
            if v.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: v.dim() });
            }
            let m = v.min_eigenvalue();
            if m < FULL_RANK_FLOOR {
                return Err(Error::NotFullRank { min_eigenvalue: m });
            }
            delta = delta.min(m);
        }
        Ok(AltSet { vertices, delta })
    }

    /// Builds the set and checks that the null state lies outside it.
    pub fn with_null(vertices: Vec<DensityMatrix>, rho: &DensityMatrix) -> Result<Self> {
        let set = Self::new(vertices)?;
        if set.contains(rho, MEMBERSHIP_TOL)? {
            return Err(Error::NullInsideSet);
        }
        Ok(set)
    }

    pub fn vertices(&self) -> &[DensityMatrix] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }

    /// Uniform lower bound on the minimum eigenvalue over the hull.
    ///
    /// lambda_min is concave, so its minimum over a polytope sits at a vertex.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The hull point with the given vertex weights.
    pub fn point(&self, weights: &[f64]) -> DensityMatrix {
        DensityMatrix::mixture(&self.vertices, weights)
    }

    pub fn contains(&self, state: &DensityMatrix, tol: f64) -> Result<bool> {
        Ok(self.hull_weights(state)?.1 <= tol)
    }

    /// Best vertex weights for `state` and the trace-norm residual they leave.
    ///
    /// Minimizes the entry-wise l1 residual over the d^2 real coordinates by
    /// linear programming, then measures the witness in trace norm.
    pub fn hull_weights(&self, state: &DensityMatrix) -> Result<(Vec<f64>, f64)> {
        let d = self.dim();
        if state.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: state.dim() });
        }
        if self.vertices.len() == 1 {
            let r = crate::quantum::trace_distance(&self.vertices[0], state)?;
            return Ok((vec![1.0], r));
        }
        let coords: Vec<Vec<f64>> = self.vertices.iter().map(real_coordinates).collect();
        let target = real_coordinates(state);
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let weights: Vec<_> = self.vertices.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
        for (c, &t) in target.iter().enumerate() {
            let up = lp.add_var(1.0, (0.0, f64::INFINITY));
            let down = lp.add_var(1.0, (0.0, f64::INFINITY));
            let mut expr: Vec<_> = weights.iter().zip(&coords).map(|(&w, v)| (w, v[c])).collect();
            expr.push((up, -1.0));
            expr.push((down, 1.0));
            lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, t);
        }
        let ones: Vec<_> = weights.iter().map(|&w| (w, 1.0)).collect();
        lp.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
        let solution = lp.solve().map_err(|e| Error::Lp(e.to_string()))?;
        let mut w: Vec<f64> = weights.iter().map(|&v| solution[v].max(0.0)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let residual = crate::quantum::trace_distance(&self.point(&w), state)?;
        Ok((w, residual))
    }
}

/// Real coordinates of a Hermitian matrix: Re of the upper triangle, Im of the strict upper triangle.
fn real_coordinates(s: &DensityMatrix) -> Vec<f64> {
    let m = s.matrix();
    let d = m.nrows();
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in i..d {
            out.push(m[(i, j)].re);
            if j > i {
                out.push(m[(i, j)].im);
            }
        }
    }
    out
}

impl TryFrom<AltSetWire> for AltSet {
    type Error = Error;

    fn try_from(w: AltSetWire) -> Result<Self> {
        check_version(&w.v).map_err(Error::Config)?;
        let set = AltSet::new(w.vertices)?;
        if let Some(d) = w.dim {
            if d != set.dim() {
                return Err(Error::DimensionMismatch { expected: d, found: set.dim() });
            }
        }
        Ok(set)
    }
}

impl From<AltSet> for AltSetWire {
    fn from(s: AltSet) -> Self {
        AltSetWire { v: Some(SCHEMA_VERSION.into()), dim: Some(s.dim()), delta: Some(s.delta), vertices: s.vertices }
    }
}

pub fn membership(state: &DensityMatrix, set: &AltSet, tol: f64) -> Result<bool> {
    set.contains(state, tol)
}

pub fn delta(set: &AltSet) -> f64 {
    set.delta()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    /// Hull points with vertex weights uniform on the simplex.
    Dirichlet,
    /// All points of a regular simplex grid over the vertex weights.
    VertexGrid,
}

/// A discrete prior over hull points, weights kept in log domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParticlePrior {
    atoms: Vec<DensityMatrix>,
    log_weights: Vec<f64>,
    /// Vertex weights of each atom, when the atom was generated from an `AltSet`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    vertex_weights: Vec<Vec<f64>>,
}

impl ParticlePrior {
    /// From linear weights, which are normalized here.
    pub fn new(atoms: Vec<DensityMatrix>, weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("prior weights must be finite and nonnegative".into()));
        }
        Self::from_log_weights(atoms, weights.iter().map(|w| w.ln()).collect())
    }

    pub fn from_log_weights(atoms: Vec<DensityMatrix>, mut log_weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != log_weights.len() {
            return Err(Error::Config(format!("{} atoms with {} weights", atoms.len(), log_weights.len())));
        }
        let d = atoms[0].dim();
        if let Some(a) = atoms.iter().find(|a| a.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: a.dim() });
        }
        let z = logsumexp(&log_weights);
        if !z.is_finite() {
            return Err(Error::Config("prior has no mass".into()));
        }
        if z != 0.0 {
            log_weights.iter_mut().for_each(|w| *w -= z);
        }
        Ok(ParticlePrior { atoms, log_weights, vertex_weights: Vec::new() })
    }

    pub fn singleton(state: DensityMatrix) -> Self {
        ParticlePrior { atoms: vec![state], log_weights: vec![0.0], vertex_weights: vec![vec![1.0]] }
    }

    fn from_hull(set: &AltSet, vertex_weights: Vec<Vec<f64>>) -> Self {
        let n = vertex_weights.len();
        let atoms = vertex_weights.iter().map(|w| set.point(w)).collect();
        ParticlePrior { atoms, log_weights: vec![-(n as f64).ln(); n], vertex_weights }
    }

    /// Checks every atom against the set; fills in vertex weights if missing.
    pub fn attach(mut self, set: &AltSet, tol: f64) -> Result<Self> {
        if self.vertex_weights.len() == self.atoms.len() {
            return Ok(self);
        }
        let mut all = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            let (w, residual) = set.hull_weights(a)?;
            if residual > tol {
                return Err(Error::OutsideSet);
            }
            all.push(w);
        }
        self.vertex_weights = all;
        Ok(self)
    }

    pub fn atoms(&self) -> &[DensityMatrix] {
        &self.atoms
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn vertex_weights(&self) -> &[Vec<f64>] {
        &self.vertex_weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Prior mean state.
    pub fn barycentre(&self) -> DensityMatrix {
        DensityMatrix::mixture(&self.atoms, &self.weights())
    }
}

pub fn sample_prior(set: &AltSet, n_atoms: usize, seed: u64, mode: PriorMode) -> Result<ParticlePrior> {
    if n_atoms == 0 {
        return Err(Error::Config("n_atoms must be at least 1".into()));
    }
    let v = set.vertices().len();
    let weights = match mode {
        PriorMode::Dirichlet => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n_atoms)
                .map(|_| {
                    let mut w: Vec<f64> = (0..v).map(|_| Exp1.sample(&mut rng)).collect();
                    let total: f64 = w.iter().sum();
                    w.iter_mut().for_each(|x| *x /= total);
                    w
                })
                .collect()
        }
        PriorMode::VertexGrid => vertex_grid(v, n_atoms)?,
    };
    Ok(ParticlePrior::from_hull(set, weights))
}

/// Simplex grid at the coarsest resolution holding at least `n_atoms` points,
/// in descending lexicographic order of the weight vectors.
fn vertex_grid(vertices: usize, n_atoms: usize) -> Result<Vec<Vec<f64>>> {
    if n_atoms == 1 {
        return Ok(vec![vec![1.0 / vertices as f64; vertices]]);
    }
    if vertices == 1 {
        return Err(Error::GridTooCoarse { requested: n_atoms, vertices });
    }
    let mut resolution = 1;
    while grid_size(resolution, vertices) < n_atoms {
        resolution += 1;
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(vertices);
    compositions(resolution, vertices, &mut current, &mut out);
    Ok(out
        .into_iter()
        .map(|parts| parts.into_iter().map(|p| p as f64 / resolution as f64).collect())
        .collect())
}

fn grid_size(resolution: usize, vertices: usize) -> usize {
    // C(resolution + vertices - 1, vertices - 1)
    let mut acc: usize = 1;
    for k in 1..vertices {
        acc = acc * (resolution + k) / k;
    }
    acc
}

fn compositions(total: usize, parts: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        current.push(total);
        out.push(current.clone());
        current.pop();
        return;
    }
    for first in (0..=total).rev() {
        current.push(first);
        compositions(total - first, parts - 1, current, out);
        current.pop();
    }
}
