//! Small dense linear-algebra helpers for level systems.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Largest entry of `m − m†`.
pub fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    (m - m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of the
/// Hermitian part of `m`.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `|v⟩⟨v|`.
pub fn projector(v: &DVector<Complex64>) -> DMatrix<Complex64> {
    v * v.adjoint()
}

/// `½‖a − b‖₁` for Hermitian `a`, `b`.
pub fn trace_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let (values, _) = hermitian_eigen(&(a - b));
    0.5 * values.iter().map(|v| v.abs()).sum::<f64>()
}

/// Reduced state of the second factor of a pure composite state whose
/// amplitudes are indexed `a·d_s + s`.
pub fn trace_out_first(psi: &DVector<Complex64>, d_a: usize, d_s: usize) -> DMatrix<Complex64> {
    assert_eq!(psi.len(), d_a * d_s, "composite dimension mismatch");
    DMatrix::from_fn(d_s, d_s, |r, c| (0..d_a).map(|a| psi[a * d_s + r] * psi[a * d_s + c].conj()).sum())
}

/// Reduced state of the second factor of a composite density matrix.
pub fn trace_out_first_dm(rho: &DMatrix<Complex64>, d_a: usize, d_s: usize) -> DMatrix<Complex64> {
    assert_eq!(rho.nrows(), d_a * d_s, "composite dimension mismatch");
    DMatrix::from_fn(d_s, d_s, |r, c| (0..d_a).map(|a| rho[(a * d_s + r, a * d_s + c)]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[c(2.0, 0.0), c(0.5, 0.3), c(0.0, 0.0), c(0.5, -0.3), c(-1.0, 0.0), c(0.1, 0.2), c(0.0, 0.0), c(0.1, -0.2), c(0.4, 0.0)],
        );
        let (vals, vecs) = hermitian_eigen(&m);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = DMatrix::from_diagonal(&DVector::from_iterator(3, vals.iter().map(|v| c(*v, 0.0))));
        let back = &vecs * d * vecs.adjoint();
        assert!((back - m).norm() < 1e-12);
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let a = projector(&DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        let b = projector(&DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]));
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-14);
        assert_eq!(trace_distance(&a, &a), 0.0);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let s = DVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let a = DVector::from_vec(vec![c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let psi = DVector::from_fn(6, |k, _| a[k / 2] * s[k % 2]);
        assert!((trace_out_first(&psi, 3, 2) - projector(&s)).norm() < 1e-15);
        assert!((trace_out_first_dm(&projector(&psi), 3, 2) - projector(&s)).norm() < 1e-15);
    }
}
