//! Small vec/Kronecker utilities used by the second-moment analysis.
//!
//! Conventions are column-major throughout: `vec` stacks columns, and the
//! commutation matrix `K` is the permutation with `K vec(A) = vec(A^T)`.

use nalgebra::{DMatrix, DVector};

/// Column-major vectorization.
pub fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`].
pub fn unvec(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    assert_eq!(v.len(), rows * cols, "unvec length mismatch");
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// `vec(I_l)` without materializing the identity.
pub fn vec_identity(l: usize) -> DVector<f64> {
    let mut v = DVector::zeros(l * l);
    for i in 0..l {
        v[i * l + i] = 1.0;
    }
    v
}

/// The square commutation matrix `K_{l,l}`.
pub fn commutation_matrix(l: usize) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(l * l, l * l);
    for i in 0..l {
        for j in 0..l {
            // vec(A)[j*l + i] = A_ij lands at vec(A^T)[i*l + j].
            k[(i * l + j, j * l + i)] = 1.0;
        }
    }
    k
}
