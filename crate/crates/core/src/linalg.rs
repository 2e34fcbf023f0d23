//! Small dense complex linear algebra used throughout the crate.
//!
//! Everything here targets tiny Hermitian matrices (d <= 8). The 2x2 case
//! has closed forms and is special-cased because the Monte Carlo loops spend
//! most of their time on qubits.

use nalgebra::{Complex, DMatrix, SymmetricEigen};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Builds a complex matrix from real row-major entries.
pub fn real_matrix(d: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), d * d, "expected {} entries", d * d);
    CMatrix::from_fn(d, d, |i, j| c(entries[i * d + j], 0.0))
}

pub fn diag(values: &[f64]) -> CMatrix {
    let d = values.len();
    CMatrix::from_fn(d, d, |i, j| if i == j { c(values[i], 0.0) } else { c(0.0, 0.0) })
}

/// Max element-wise |A - A^H|.
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

/// (A + A^H) / 2
pub fn symmetrize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * c(0.5, 0.0)
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// Re Tr[A B] without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = a[(i, j)];
            let y = b[(j, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 2 {
        let p = a[(0, 0)].re;
        let q = a[(1, 1)].re;
        let off = 0.5 * (a[(0, 1)] + a[(1, 0)].conj());
        let mean = 0.5 * (p + q);
        let half = 0.5 * (p - q);
        let r = (half * half + off.norm_sqr()).sqrt();
        return vec![mean - r, mean + r];
    }
    let mut values: Vec<f64> = SymmetricEigen::new(symmetrize(a)).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending and
/// eigenvectors as the matching columns.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    let eig = SymmetricEigen::new(symmetrize(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_function(a: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(a);
    let scaled = CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| vectors[(i, j)] * f(values[j]));
    scaled * vectors.adjoint()
}

/// exp(i t H) for Hermitian H, given its eigen-decomposition.
pub fn unitary_from_eigen(values: &[f64], vectors: &CMatrix, t: f64) -> CMatrix {
    let n = vectors.nrows();
    let scaled = CMatrix::from_fn(n, n, |i, j| vectors[(i, j)] * C64::from_polar(1.0, t * values[j]));
    scaled * vectors.adjoint()
}

/// Re-orthonormalizes the columns of a nearly unitary matrix (modified Gram-Schmidt).
pub fn orthonormalize(u: &mut CMatrix) {
    let n = u.ncols();
    for j in 0..n {
        for k in 0..j {
            let proj: C64 = (0..u.nrows()).map(|i| u[(i, k)].conj() * u[(i, j)]).sum();
            for i in 0..u.nrows() {
                let v = u[(i, k)];
                u[(i, j)] -= proj * v;
            }
        }
        let norm = (0..u.nrows()).map(|i| u[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..u.nrows() {
            u[(i, j)] /= c(norm, 0.0);
        }
    }
}

pub fn max_abs_entry(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
