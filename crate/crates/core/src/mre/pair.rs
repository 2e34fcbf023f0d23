use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{MreResult, SolverMethod, SolverOptions, SOLVER_RANK_FLOOR};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, C64};
use crate::quantum::kl_slices;
use crate::quantum::{DensityMatrix, Povm};

/// D(P_first,m || P_second,m) for the given measurement.
pub fn induced_kl(first: &DensityMatrix, second: &DensityMatrix, povm: &Povm) -> f64 {
    let p: Vec<f64> = (0..povm.len()).map(|x| povm.probability(x, first).max(0.0)).collect();
    let q: Vec<f64> = (0..povm.len()).map(|x| povm.probability(x, second).max(0.0)).collect();
    kl_slices(&p, &q)
}

/// Measured relative entropy D_M(first || second) over rank-one projective measurements.
pub fn mre_pair(first: &DensityMatrix, second: &DensityMatrix, opts: &SolverOptions, seed: u64) -> Result<MreResult> {
    check_inputs(first, second)?;
    if first.dim() == 2 && opts.method == SolverMethod::Auto {
        return Ok(qubit_solve(first, second, None));
    }
    Ok(unitary_solve(first, second, opts, seed))
}

/// Local re-solve seeded by a previous measurement.
pub(crate) fn mre_pair_warm(
    first: &DensityMatrix,
    second: &DensityMatrix,
    previous: &Povm,
    opts: &SolverOptions,
    seed: u64,
) -> Result<MreResult> {
    check_inputs(first, second)?;
    if first.dim() == 2 && opts.method == SolverMethod::Auto {
        if let Some(n) = previous.qubit_direction() {
            return Ok(qubit_solve(first, second, Some(n)));
        }
    }
    match previous.basis() {
        Some(u) => {
            let run = ascend(first.matrix(), second.matrix(), u.clone(), opts);
            let povm = Povm::from_basis(&run.basis);
            let value = induced_kl(first, second, &povm);
            Ok(MreResult { value, povm, iterations: run.iterations, converged: run.converged })
        }
        None => mre_pair(first, second, opts, seed),
    }
}

fn check_inputs(first: &DensityMatrix, second: &DensityMatrix) -> Result<()> {
    if first.dim() != second.dim() {
        return Err(Error::DimensionMismatch { expected: first.dim(), found: second.dim() });
    }
    for s in [first, second] {
        let m = s.min_eigenvalue();
        if m <= SOLVER_RANK_FLOOR {
            return Err(Error::NotFullRank { min_eigenvalue: m });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Qubits: the optimal axis lies in the plane of the two Bloch vectors, since
// the objective is convex in (a.n, b.n) and the image of the Bloch ball is an
// ellipse whose boundary comes from that great circle.
// ---------------------------------------------------------------------------

const SCAN_POINTS: usize = 64;

struct QubitPlane {
    e1: [f64; 3],
    e2: [f64; 3],
    a: (f64, f64),
    b: (f64, f64),
}

fn dot(u: [f64; 3], v: [f64; 3]) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

fn norm(u: [f64; 3]) -> f64 {
    dot(u, u).sqrt()
}

fn scale(u: [f64; 3], s: f64) -> [f64; 3] {
    u.map(|x| x * s)
}

fn cross(u: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
}

impl QubitPlane {
    fn new(a: [f64; 3], b: [f64; 3]) -> Self {
        let e1 = if norm(a) > 1e-14 {
            scale(a, 1.0 / norm(a))
        } else if norm(b) > 1e-14 {
            scale(b, 1.0 / norm(b))
        } else {
            [0.0, 0.0, 1.0]
        };
        let along = dot(b, e1);
        let rest = [b[0] - along * e1[0], b[1] - along * e1[1], b[2] - along * e1[2]];
        let e2 = if norm(rest) > 1e-12 {
            scale(rest, 1.0 / norm(rest))
        } else {
            // any unit vector orthogonal to e1
            let axis = if e1[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let p = cross(e1, axis);
            scale(p, 1.0 / norm(p))
        };
        QubitPlane { a: (dot(a, e1), dot(a, e2)), b: (dot(b, e1), dot(b, e2)), e1, e2 }
    }

    fn direction(&self, theta: f64) -> [f64; 3] {
        let (s, co) = theta.sin_cos();
        [
            co * self.e1[0] + s * self.e2[0],
            co * self.e1[1] + s * self.e2[1],
            co * self.e1[2] + s * self.e2[2],
        ]
    }

    fn angle_of(&self, n: [f64; 3]) -> f64 {
        dot(n, self.e2).atan2(dot(n, self.e1))
    }

    fn value(&self, theta: f64) -> f64 {
        let (s, co) = theta.sin_cos();
        let x = self.a.0 * co + self.a.1 * s;
        let y = self.b.0 * co + self.b.1 * s;
        kl_slices(&[0.5 * (1.0 + x), 0.5 * (1.0 - x)], &[0.5 * (1.0 + y), 0.5 * (1.0 - y)])
    }

    /// First and second derivative of `value` in theta.
    fn derivatives(&self, theta: f64) -> (f64, f64) {
        let (s, co) = theta.sin_cos();
        let x = self.a.0 * co + self.a.1 * s;
        let y = self.b.0 * co + self.b.1 * s;
        let dx = -self.a.0 * s + self.a.1 * co;
        let dy = -self.b.0 * s + self.b.1 * co;
        let (pp, pm) = (0.5 * (1.0 + x), 0.5 * (1.0 - x));
        let (qp, qm) = (0.5 * (1.0 + y), 0.5 * (1.0 - y));
        let u = (pp / qp).ln() - (pm / qm).ln();
        let v = pp / qp - pm / qm;
        let du = 0.5 * dx * (1.0 / pp + 1.0 / pm) - 0.5 * dy * (1.0 / qp + 1.0 / qm);
        let dv = 0.5 * dx * (1.0 / qp + 1.0 / qm) - 0.5 * dy * (pp / (qp * qp) + pm / (qm * qm));
        let g = 0.5 * dx * u - 0.5 * dy * v;
        let h = -0.5 * x * u + 0.5 * dx * du + 0.5 * y * v - 0.5 * dy * dv;
        (g, h)
    }

    /// Safeguarded Newton ascent; every accepted step increases the value.
    fn refine(&self, mut theta: f64, max_step: f64) -> (f64, f64, usize, bool) {
        let mut value = self.value(theta);
        for it in 1..=100 {
            let (g, h) = self.derivatives(theta);
            if g.abs() < 1e-15 {
                return (theta, value, it, true);
            }
            let mut step = if h < 0.0 { -g / h } else { g.signum() * max_step };
            step = step.clamp(-max_step, max_step);
            let mut accepted = false;
            for _ in 0..40 {
                let candidate = self.value(theta + step);
                if candidate >= value {
                    theta += step;
                    value = candidate;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted || step.abs() < 1e-13 {
                return (theta, value, it, true);
            }
        }
        (theta, value, 100, false)
    }
}

fn qubit_solve(first: &DensityMatrix, second: &DensityMatrix, warm: Option<[f64; 3]>) -> MreResult {
    let plane = QubitPlane::new(first.bloch().unwrap(), second.bloch().unwrap());
    let (theta, iterations, converged) = match warm {
        Some(n) => {
            let (theta, _, it, conv) = plane.refine(plane.angle_of(n), 0.25);
            (theta, it, conv)
        }
        None => {
            let step = std::f64::consts::PI / SCAN_POINTS as f64;
            let values: Vec<f64> = (0..SCAN_POINTS).map(|k| plane.value(k as f64 * step)).collect();
            // refine every local maximum of the periodic scan
            let mut best: Option<(f64, f64)> = None;
            let mut total_it = 0;
            let mut all_converged = true;
            for k in 0..SCAN_POINTS {
                let prev = values[(k + SCAN_POINTS - 1) % SCAN_POINTS];
                let next = values[(k + 1) % SCAN_POINTS];
                if values[k] >= prev && values[k] >= next {
                    let (theta, value, it, conv) = plane.refine(k as f64 * step, step);
                    total_it += it;
                    all_converged &= conv;
                    if best.is_none_or(|(_, v)| value > v) {
                        best = Some((theta, value));
                    }
                }
            }
            let (theta, _) = best.unwrap_or((0.0, values[0]));
            (theta, total_it, all_converged)
        }
    };
    let povm = Povm::qubit_axis(plane.direction(theta));
    let value = induced_kl(first, second, &povm);
    MreResult { value, povm, iterations, converged }
}

// ---------------------------------------------------------------------------
// General dimension: ascent over orthonormal bases U, moving along
// U exp(i eta G) with G the Riemannian gradient of the induced relative entropy.
// ---------------------------------------------------------------------------

struct AscentRun {
    basis: CMatrix,
    value: f64,
    iterations: usize,
    converged: bool,
}

fn basis_value(first: &CMatrix, second: &CMatrix, u: &CMatrix) -> f64 {
    let (p, q) = basis_probs(first, second, u);
    kl_slices(&p, &q)
}

fn basis_probs(first: &CMatrix, second: &CMatrix, u: &CMatrix) -> (Vec<f64>, Vec<f64>) {
    let d = u.ncols();
    let mut p = Vec::with_capacity(d);
    let mut q = Vec::with_capacity(d);
    for j in 0..d {
        let col = u.column(j);
        p.push((col.adjoint() * first * col)[(0, 0)].re.max(0.0));
        q.push((col.adjoint() * second * col)[(0, 0)].re.max(0.0));
    }
    (p, q)
}

/// Gradient of the induced relative entropy with respect to H in U exp(iH), at H = 0.
pub(crate) fn basis_gradient(first: &CMatrix, second: &CMatrix, u: &CMatrix) -> CMatrix {
    let a_hat = u.adjoint() * first * u;
    let b_hat = u.adjoint() * second * u;
    let d = u.ncols();
    let mut w = CMatrix::zeros(d, d);
    for x in 0..d {
        let p = a_hat[(x, x)].re;
        let q = b_hat[(x, x)].re;
        if p <= 0.0 || q <= 0.0 {
            continue;
        }
        let da = (p / q).ln() + 1.0;
        let db = -p / q;
        for y in 0..d {
            w[(x, y)] = a_hat[(x, y)] * da + b_hat[(x, y)] * db;
        }
    }
    (&w - w.adjoint()) * C64::i()
}

fn ascend(first: &CMatrix, second: &CMatrix, mut u: CMatrix, opts: &SolverOptions) -> AscentRun {
    let mut value = basis_value(first, second, &u);
    let mut eta: Option<f64> = None;
    for it in 1..=opts.max_iterations {
        let g = basis_gradient(first, second, &u);
        let (lambda, vectors) = linalg::hermitian_eigen(&g);
        let spread = lambda.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        if spread < 1e-13 {
            return AscentRun { basis: u, value, iterations: it, converged: true };
        }
        let mut step = eta.unwrap_or(0.5 / spread).min(1.0 / spread);
        let mut improved = None;
        for _ in 0..50 {
            let mut candidate = &u * linalg::unitary_from_eigen(&lambda, &vectors, step);
            linalg::orthonormalize(&mut candidate);
            let v = basis_value(first, second, &candidate);
            if v > value {
                improved = Some((candidate, v));
                break;
            }
            step *= 0.5;
        }
        let Some((candidate, v)) = improved else {
            return AscentRun { basis: u, value, iterations: it, converged: true };
        };
        let gain = v - value;
        u = candidate;
        value = v;
        eta = Some(step * 2.0);
        if gain < opts.tol * 1e-3 {
            return AscentRun { basis: u, value, iterations: it, converged: true };
        }
    }
    AscentRun { basis: u, value, iterations: opts.max_iterations, converged: false }
}

fn random_unitary(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let mut m = CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    });
    linalg::orthonormalize(&mut m);
    m
}

fn unitary_solve(first: &DensityMatrix, second: &DensityMatrix, opts: &SolverOptions, seed: u64) -> MreResult {
    let d = first.dim();
    let starts = opts.restarts.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deterministic = [
        linalg::hermitian_eigen(first.matrix()).1,
        linalg::hermitian_eigen(second.matrix()).1,
        linalg::hermitian_eigen(&(first.matrix() - second.matrix())).1,
    ];
    let mut runs = Vec::with_capacity(starts);
    for k in 0..starts {
        let u0 = if k < deterministic.len() { deterministic[k].clone() } else { random_unitary(d, &mut rng) };
        runs.push(ascend(first.matrix(), second.matrix(), u0, opts));
    }
    let best = runs.iter().enumerate().max_by(|(_, a), (_, b)| a.value.total_cmp(&b.value)).map(|(i, _)| i).unwrap();
    let iterations = runs.iter().map(|r| r.iterations).sum();
    let agreeing = runs.iter().filter(|r| runs[best].value - r.value <= 10.0 * opts.tol).count();
    let converged = runs[best].converged && (starts == 1 || agreeing >= 2);
    let povm = Povm::from_basis(&runs[best].basis);
    let value = induced_kl(first, second, &povm);
    MreResult { value, povm, iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn identical_states_give_zero() {
        let s = DensityMatrix::from_bloch([0.1, 0.3, -0.2]).unwrap();
        let r = mre_pair(&s, &s, &opts(), 0).unwrap();
        assert!(r.value.abs() < 1e-15);
    }

    #[test]
    fn commuting_pair_reduces_to_classical_kl() {
        let a = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        let b = DensityMatrix::diagonal(&[0.25, 0.75]).unwrap();
        let expected = 0.5 * 3f64.ln();
        let r = mre_pair(&a, &b, &opts(), 0).unwrap();
        assert!((r.value - expected).abs() < 1e-12, "{}", r.value);
        let eff = r.povm.effect(0);
        assert!(eff[(0, 1)].norm() < 1e-9, "should measure in the Z basis");
        let general = SolverOptions { method: SolverMethod::Unitary, ..opts() };
        let r = mre_pair(&a, &b, &general, 0).unwrap();
        assert!((r.value - expected).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let a = DensityMatrix::new(CMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.5, 0.0), c(0.1, 0.05), c(0.0, 0.0),
                c(0.1, -0.05), c(0.3, 0.0), c(0.02, 0.01),
                c(0.0, 0.0), c(0.02, -0.01), c(0.2, 0.0),
            ],
        ))
        .unwrap();
        let b = DensityMatrix::diagonal(&[0.2, 0.3, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(3, &mut rng);
        let g = basis_gradient(a.matrix(), b.matrix(), &u);
        // directional derivative along a random Hermitian H
        let h = {
            let m = random_unitary(3, &mut rng);
            linalg::symmetrize(&m)
        };
        let (lambda, vectors) = linalg::hermitian_eigen(&h);
        let eps = 1e-6;
        let plus = basis_value(a.matrix(), b.matrix(), &(&u * linalg::unitary_from_eigen(&lambda, &vectors, eps)));
        let minus = basis_value(a.matrix(), b.matrix(), &(&u * linalg::unitary_from_eigen(&lambda, &vectors, -eps)));
        let numeric = (plus - minus) / (2.0 * eps);
        let analytic = linalg::trace(&(&g * &h)).re;
        assert!((numeric - analytic).abs() < 1e-7, "{numeric} vs {analytic}");
    }

    #[test]
    fn qubit_and_unitary_paths_agree() {
        let a = DensityMatrix::diagonal(&[0.9, 0.1]).unwrap();
        let b = DensityMatrix::from_bloch([0.8, 0.0, 0.0]).unwrap();
        let fast = mre_pair(&a, &b, &opts(), 0).unwrap();
        let slow = mre_pair(&a, &b, &SolverOptions { method: SolverMethod::Unitary, ..opts() }, 0).unwrap();
        assert!((fast.value - slow.value).abs() < 1e-8, "{} {}", fast.value, slow.value);
        assert!(fast.converged && slow.converged);
    }

    #[test]
    fn warm_start_reproduces_cold_value() {
        let a = DensityMatrix::diagonal(&[0.8, 0.2]).unwrap();
        let b = DensityMatrix::from_bloch([0.3, 0.1, -0.2]).unwrap();
        let cold = mre_pair(&a, &b, &opts(), 0).unwrap();
        let b2 = DensityMatrix::from_bloch([0.32, 0.1, -0.25]).unwrap();
        let warm = mre_pair_warm(&a, &b2, &cold.povm, &opts(), 0).unwrap();
        let cold2 = mre_pair(&a, &b2, &opts(), 0).unwrap();
        assert!((warm.value - cold2.value).abs() < 1e-10);
    }

    #[test]
    fn rank_deficient_input_rejected() {
        let a = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let b = DensityMatrix::maximally_mixed(2);
        assert!(matches!(mre_pair(&a, &b, &opts(), 0), Err(Error::NotFullRank { .. })));
    }
}
