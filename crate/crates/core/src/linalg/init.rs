use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Glorot/Xavier uniform initialization on `[-√(6/(rows+cols)), √(6/(rows+cols))]`.
pub fn xavier_init<T: Scalar>(rows: usize, cols: usize, seed: u64) -> Result<DenseMatrix<T>> {
    xavier_init_with(rows, cols, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Same as [`xavier_init`] but draws from a caller-owned generator.
pub fn xavier_init_with<T: Scalar, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> Result<DenseMatrix<T>> {
    if rows == 0 || cols == 0 {
        return Err(Error::Contract(format!(
            "xavier_init needs positive dimensions, got {rows}x{cols}"
        )));
    }
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Ok(DenseMatrix::from_fn(rows, cols, |_, _| {
        T::of(rng.random_range(-bound..=bound))
    }))
}
