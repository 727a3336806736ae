//! Thin bridge to `nalgebra` for the dense decompositions we do not hand-roll:
//! Hermitian eigendecomposition, SVD and the matrix exponential.

use nalgebra::DMatrix;

use crate::C64;

/// Row-major `dim x dim` slice into an `nalgebra` matrix.
pub fn to_dmatrix(dim: usize, data: &[C64]) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |i, j| data[i * dim + j])
}

pub fn from_dmatrix(m: &DMatrix<C64>) -> Vec<C64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Eigenvalues of a Hermitian matrix in ascending order. Only the lower
/// triangle is trusted, so callers should hermitise first when roundoff
/// matters.
pub fn hermitian_eigenvalues(dim: usize, data: &[C64]) -> Vec<f64> {
    let m = to_dmatrix(dim, data);
    let mut vals: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Full Hermitian eigendecomposition: `(eigenvalues, eigenvectors)` with the
/// eigenvectors as the columns of a row-major matrix.
pub fn hermitian_eigen(dim: usize, data: &[C64]) -> (Vec<f64>, Vec<C64>) {
    let m = to_dmatrix(dim, data);
    let eig = m.symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), from_dmatrix(&eig.eigenvectors))
}

pub fn singular_values(rows: usize, cols: usize, data: &[C64]) -> Vec<f64> {
    let m = DMatrix::from_fn(rows, cols, |i, j| data[i * cols + j]);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Matrix exponential of a general complex matrix.
pub fn expm(dim: usize, data: &[C64]) -> Vec<C64> {
    from_dmatrix(&to_dmatrix(dim, data).exp())
}
