use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use super::{mre_pair, Direction, MreResult, SolverOptions};
use crate::alt_set::{AltSet, MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::quantum::{DensityMatrix, Povm};

#[derive(Clone, Debug, Serialize)]
pub struct SetMreResult {
    pub value: f64,
    pub minimizer_weights: Vec<f64>,
    pub minimizer_state: DensityMatrix,
    pub povm: Povm,
    pub iterations: usize,
    /// Whether the inner measurement solve at the minimizer converged.
    pub converged: bool,
}

/// D_M(rho || D) = min over the hull of D_M(rho || sigma).
pub fn mre_to_set(rho: &DensityMatrix, set: &AltSet, opts: &SolverOptions, seed: u64) -> Result<SetMreResult> {
    minimize_over_hull(rho, set, Direction::NullDrift, opts, seed)
}

/// D_M(D || rho) = min over the hull of D_M(sigma || rho).
pub fn mre_from_set(set: &AltSet, rho: &DensityMatrix, opts: &SolverOptions, seed: u64) -> Result<SetMreResult> {
    minimize_over_hull(rho, set, Direction::AltDrift, opts, seed)
}

fn pair_value(rho: &DensityMatrix, sigma: &DensityMatrix, direction: Direction, opts: &SolverOptions, seed: u64) -> Result<MreResult> {
    match direction {
        Direction::NullDrift => mre_pair(rho, sigma, opts, seed),
        Direction::AltDrift => mre_pair(sigma, rho, opts, seed),
    }
}

struct Evaluation {
    value: f64,
    povm: Povm,
    gradient: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Objective at hull weights `w` with a Danskin gradient taken at the inner maximizer.
fn evaluate(
    rho: &DensityMatrix,
    set: &AltSet,
    w: &[f64],
    direction: Direction,
    opts: &SolverOptions,
    seed: u64,
) -> Result<Evaluation> {
    let sigma = set.point(w);
    let inner = pair_value(rho, &sigma, direction, opts, seed)?;
    let povm = inner.povm;
    let outcomes = povm.len();
    let p: Vec<f64> = (0..outcomes).map(|x| povm.probability(x, rho)).collect();
    let q: Vec<f64> = (0..outcomes).map(|x| povm.probability(x, &sigma)).collect();
    let gradient = set
        .vertices()
        .iter()
        .map(|v| {
            (0..outcomes)
                .map(|x| {
                    let t = povm.probability(x, v);
                    match direction {
                        // d/dw sum p log(p/q) = -sum p/q t
                        Direction::NullDrift => -p[x] / q[x] * t,
                        // d/dw sum q log(q/p) = sum t (log(q/p) + 1)
                        Direction::AltDrift => t * ((q[x] / p[x]).ln() + 1.0),
                    }
                })
                .sum()
        })
        .collect();
    Ok(Evaluation { value: inner.value, povm, gradient, iterations: inner.iterations, converged: inner.converged })
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumulative += x;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if x - candidate > 0.0 {
            shift = candidate;
        }
    }
    v.iter().map(|x| (x - shift).max(0.0)).collect()
}

fn minimize_over_hull(
    rho: &DensityMatrix,
    set: &AltSet,
    direction: Direction,
    opts: &SolverOptions,
    seed: u64,
) -> Result<SetMreResult> {
    if rho.dim() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), found: rho.dim() });
    }
    if set.contains(rho, MEMBERSHIP_TOL)? {
        return Err(Error::NullInsideSet);
    }
    let n = set.vertices().len();
    let mut starts: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    if n > 1 {
        starts.push(vec![1.0 / n as f64; n]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..2 {
            let mut w: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            starts.push(w);
        }
    }

    let mut best: Option<(Vec<f64>, Evaluation)> = None;
    let mut iterations = 0;
    for w0 in starts {
        let (w, eval, its) = descend(rho, set, w0, direction, opts, seed)?;
        iterations += its;
        if best.as_ref().is_none_or(|(_, b)| eval.value < b.value) {
            best = Some((w, eval));
        }
    }
    let (w, eval) = best.unwrap();
    Ok(SetMreResult {
        value: eval.value,
        minimizer_state: set.point(&w),
        minimizer_weights: w,
        povm: eval.povm,
        iterations,
        converged: eval.converged,
    })
}

fn descend(
    rho: &DensityMatrix,
    set: &AltSet,
    mut w: Vec<f64>,
    direction: Direction,
    opts: &SolverOptions,
    seed: u64,
) -> Result<(Vec<f64>, Evaluation, usize)> {
    let mut current = evaluate(rho, set, &w, direction, opts, seed)?;
    let mut iterations = current.iterations;
    if w.len() == 1 {
        return Ok((w, current, iterations));
    }
    let mut eta = 0.1;
    for _ in 0..opts.max_iterations {
        let trial = project_simplex(&w.iter().zip(&current.gradient).map(|(x, g)| x - eta * g).collect::<Vec<_>>());
        let moved: f64 = trial.iter().zip(&w).map(|(a, b)| (a - b).abs()).sum();
        if moved < 1e-13 {
            // stationary under projection: no feasible descent direction
            break;
        }
        let next = evaluate(rho, set, &trial, direction, opts, seed)?;
        iterations += next.iterations;
        if next.value < current.value {
            let gain = current.value - next.value;
            w = trial;
            current = next;
            eta *= 2.0;
            if gain < opts.tol * 1e-2 {
                break;
            }
        } else {
            eta *= 0.5;
            if eta < 1e-14 {
                break;
            }
        }
    }
    Ok((w, current, iterations))
}
