//! Row-wise probability kernels shared by the tape and the tape-free API.

use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Floor applied to both arguments inside the KL logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

/// Student-t kernel with one degree of freedom, normalized per row.
///
/// Returns `(assignments, unnormalized)` where the second matrix holds
/// `(1 + ‖h_i − β_c‖²)⁻¹`, which the backward pass reuses.
pub(crate) fn student_t<T: Scalar>(
    points: &DenseMatrix<T>,
    centers: &DenseMatrix<T>,
) -> (DenseMatrix<T>, DenseMatrix<T>) {
    let (n, c) = (points.rows(), centers.rows());
    let mut kernel = DenseMatrix::zeros(n, c);
    let mut assign = DenseMatrix::zeros(n, c);
    for i in 0..n {
        let h = points.row(i);
        let mut total = T::zero();
        for k in 0..c {
            let d2: T = h
                .iter()
                .zip(centers.row(k))
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            let q = T::one() / (T::one() + d2);
            kernel[(i, k)] = q;
            total += q;
        }
        for k in 0..c {
            assign[(i, k)] = kernel[(i, k)] / total;
        }
    }
    (assign, kernel)
}

/// `Σ p log(p / q)` with both arguments floored; zero-mass targets contribute 0.
pub(crate) fn kl<T: Scalar>(target: &DenseMatrix<T>, dist: &DenseMatrix<T>) -> T {
    let floor = T::of(LOG_FLOOR);
    target
        .as_slice()
        .iter()
        .zip(dist.as_slice())
        .filter(|(&p, _)| p > T::zero())
        .map(|(&p, &q)| p * (p.max(floor).ln() - q.max(floor).ln()))
        .sum()
}
