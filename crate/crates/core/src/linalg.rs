use nalgebra::{DMatrix, Schur};

pub(crate) fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Companion matrix with first column `col` and ones on the superdiagonal.
pub(crate) fn companion(col: &[f64]) -> DMatrix<f64> {
    let n = col.len();
    let mut m = DMatrix::zeros(n, n);
    for (j, &c) in col.iter().enumerate() {
        m[(j, 0)] = c;
        if j + 1 < n {
            m[(j, j + 1)] = 1.0;
        }
    }
    m
}

/// Eigenvalue moduli. The unshifted Schur iteration can stall when every
/// eigenvalue has the same modulus, so on failure the spectrum is moved by a
/// real shift and moved back.
pub(crate) fn eigenvalue_moduli(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    for shift in [0.0, 0.5, -0.7, 1.3] {
        let shifted = m + DMatrix::identity(n, n) * shift;
        if let Some(schur) = Schur::try_new(shifted, f64::EPSILON, 10_000) {
            return schur.complex_eigenvalues().iter().map(|z| (z - shift).norm()).collect();
        }
    }
    vec![f64::NAN; n]
}
