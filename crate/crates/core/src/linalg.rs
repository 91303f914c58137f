//! Dense complex linear algebra helpers shared by the oracles and the
//! evolution simulator.
//!
//! Everything is built on square `DMatrix<Complex<f64>>` values; sizes stay
//! at desk scale (d <= 2^10) so full Hermitian eigendecompositions are the
//! workhorse rather than iterative methods.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Max entrywise deviation of `m` from its adjoint.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let adj = m.adjoint();
    (m - adj).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max entrywise deviation of `u` from unitarity.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let d = u.nrows();
    let mut g = u.adjoint() * u;
    for i in 0..d {
        g[(i, i)] -= C64::new(1.0, 0.0);
    }
    g.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues (ascending is
/// not guaranteed by nalgebra, so we sort) and matching orthonormal columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let d = m.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(d, d);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

/// Operator norm (largest |eigenvalue|) of a Hermitian matrix.
pub fn operator_norm_hermitian(m: &CMatrix) -> f64 {
    let (values, _) = hermitian_eigen(m);
    values.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Spectral norm (largest singular value) of an arbitrary square matrix,
/// via the Hermitian Gram matrix.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    let gram = m.adjoint() * m;
    let (values, _) = hermitian_eigen(&gram);
    values.last().map(|v| v.max(0.0).sqrt()).unwrap_or(0.0)
}

/// Frobenius norm.
pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// e^{i t H} for Hermitian `h`, via eigendecomposition.
pub fn exp_i_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let d = h.nrows();
    let (values, vectors) = hermitian_eigen(h);
    let mut phases = CMatrix::zeros(d, d);
    for k in 0..d {
        let theta = t * values[k];
        phases[(k, k)] = C64::new(theta.cos(), theta.sin());
    }
    &vectors * phases * vectors.adjoint()
}

/// Trace of a product of two square matrices, without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let d = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}
