use crate::error::{Error, Result};
use crate::linalg::{kernels, DenseMatrix};
use crate::scalar::Scalar;

/// Row-stochastic `N × C` matrix: each row is a distribution over clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment<T>(DenseMatrix<T>);

impl<T: Scalar> SoftAssignment<T> {
    /// Validates that rows are probability vectors.
    pub fn new(m: DenseMatrix<T>) -> Result<Self> {
        let tol = T::of(1e-9).max(T::epsilon() * T::of(64.0));
        for (i, row) in m.row_iter().enumerate() {
            let sum: T = row.iter().copied().sum();
            if (sum - T::one()).abs() > tol {
                return Err(Error::Contract(format!("row {i} sums to {sum}, not 1")));
            }
            if row.iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
                return Err(Error::Contract(format!("row {i} has entries outside [0, 1]")));
            }
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.0
    }

    pub fn num_clusters(&self) -> usize {
        self.0.cols()
    }
}

impl<T> AsRef<DenseMatrix<T>> for SoftAssignment<T> {
    fn as_ref(&self) -> &DenseMatrix<T> {
        &self.0
    }
}

/// Student-t soft assignment of each row of `points` to the `centers`.
pub fn student_t_assign<T: Scalar>(
    points: &DenseMatrix<T>,
    centers: &DenseMatrix<T>,
) -> Result<SoftAssignment<T>> {
    if points.cols() != centers.cols() {
        return Err(Error::Contract(format!(
            "points have width {} but centers have width {}",
            points.cols(),
            centers.cols()
        )));
    }
    Ok(SoftAssignment(kernels::student_t(points, centers).0))
}

/// Sharpened target: `p_ic ∝ t_ic² / f_c`, `f_c = Σ_i t_ic`.
pub fn target_distribution<T: Scalar>(t: &DenseMatrix<T>) -> Result<SoftAssignment<T>> {
    let freq = t.column_sums();
    if let Some(c) = freq.as_slice().iter().position(|&f| !(f > T::zero())) {
        return Err(Error::DegenerateCluster { cluster: c, epoch: None });
    }
    let mut p = DenseMatrix::zeros(t.rows(), t.cols());
    for i in 0..t.rows() {
        let row = p.row_mut(i);
        let mut total = T::zero();
        for (c, (dst, &v)) in row.iter_mut().zip(t.row(i)).enumerate() {
            *dst = v * v / freq[(0, c)];
            total += *dst;
        }
        for dst in row.iter_mut() {
            *dst /= total;
        }
    }
    Ok(SoftAssignment(p))
}

/// `Σ_i Σ_c p_ic log(p_ic / q_ic)` with both arguments floored at 1e-12.
pub fn kl_divergence<T: Scalar>(p: &DenseMatrix<T>, q: &DenseMatrix<T>) -> Result<T> {
    if p.shape() != q.shape() {
        return Err(Error::Contract(format!(
            "KL operands differ in shape: {:?} vs {:?}",
            p.shape(),
            q.shape()
        )));
    }
    Ok(kernels::kl(p, q))
}

/// Row-softmax of the graph branch's clustering layer.
pub fn gae_soft_assign<T: Scalar>(z_mid: &DenseMatrix<T>, clusters: usize) -> Result<SoftAssignment<T>> {
    if z_mid.cols() != clusters {
        return Err(Error::Contract(format!(
            "clustering layer has width {}, expected {clusters} clusters",
            z_mid.cols()
        )));
    }
    Ok(SoftAssignment(z_mid.row_softmax()))
}

/// Most probable cluster per row; ties resolve to the lowest index.
pub fn hard_assign<T: Scalar>(dist: &DenseMatrix<T>) -> Vec<usize> {
    dist.row_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = DenseMatrix<f64>;

    fn m(rows: &[&[f64]]) -> M {
        M::from_f64_rows(rows).unwrap()
    }

    #[test]
    fn student_t_hand_case() {
        let t = student_t_assign(&m(&[&[0.0, 0.0]]), &m(&[&[0.0, 0.0], &[1.0, 0.0]])).unwrap();
        let row = t.matrix().row(0);
        assert!((row[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((row[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn student_t_equidistant_is_uniform() {
        let centers = m(&[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]]);
        let t = student_t_assign(&m(&[&[0.0, 0.0]]), &centers).unwrap();
        assert!(t.matrix().as_slice().iter().all(|&v| (v - 0.25).abs() < 1e-15));
        assert!(student_t_assign(&m(&[&[0.0]]), &centers).is_err());
    }

    #[test]
    fn target_distribution_cases() {
        let uniform = M::filled(3, 4, 0.25);
        assert_eq!(target_distribution(&uniform).unwrap().matrix(), &uniform);

        let onehot = m(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(target_distribution(&onehot).unwrap().matrix(), &onehot);

        let p = target_distribution(&m(&[&[0.9, 0.1], &[0.5, 0.5]])).unwrap();
        // f = (1.4, 0.6); row 0 ∝ (0.81/1.4, 0.01/0.6)
        let (a, b) = (0.81 / 1.4, 0.01 / 0.6);
        assert!((p.matrix()[(0, 0)] - a / (a + b)).abs() < 1e-15);
        assert!((p.matrix()[(0, 0)] - 0.9720).abs() < 1e-4);
        assert!((p.matrix()[(0, 1)] - 0.0280).abs() < 1e-4);
    }

    #[test]
    fn collapsed_column_is_reported() {
        let t = m(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert!(matches!(
            target_distribution(&t),
            Err(Error::DegenerateCluster { cluster: 1, .. })
        ));
    }

    #[test]
    fn kl_cases() {
        let p = m(&[&[0.3, 0.7], &[0.5, 0.5]]);
        assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-9);
        let v = kl_divergence(&m(&[&[1.0, 0.0]]), &m(&[&[0.5, 0.5]])).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-9);
        assert!(kl_divergence(&p, &M::zeros(1, 2)).is_err());
    }

    #[test]
    fn gae_soft_assign_cases() {
        let z = gae_soft_assign(&m(&[&[0.0, 0.0, 0.0], &[10.0, 0.0, 0.0]]), 3).unwrap();
        assert!(z.matrix().row(0).iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        let r = z.matrix().row(1);
        assert!((r[0] - 0.99991).abs() < 1e-5);
        assert!((r[1] - 0.000045).abs() < 1e-6);
        assert!(gae_soft_assign(&M::zeros(2, 2), 3).is_err());
    }

    #[test]
    fn hard_assign_cases() {
        assert_eq!(hard_assign(&m(&[&[0.0, 1.0], &[1.0, 0.0]])), vec![1, 0]);
        assert_eq!(hard_assign(&M::filled(1, 3, 1.0 / 3.0)), vec![0]);
        assert_eq!(hard_assign(&m(&[&[0.2, 0.5, 0.3]])), vec![1]);
    }

    #[test]
    fn soft_assignment_validation() {
        assert!(SoftAssignment::new(m(&[&[0.5, 0.5]])).is_ok());
        assert!(SoftAssignment::new(m(&[&[0.5, 0.6]])).is_err());
        assert!(SoftAssignment::new(m(&[&[1.5, -0.5]])).is_err());
    }
}
