use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Minimum-cost perfect matching on a square cost matrix (Kuhn–Munkres with
/// potentials, O(k³)).
///
/// Returns `perm` with row `i` assigned to column `perm[i]`.
pub fn hungarian_match(cost: &DenseMatrix<f64>) -> Result<Vec<usize>> {
    let k = cost.rows();
    if cost.cols() != k {
        return Err(Error::Contract(format!(
            "assignment needs a square cost matrix, got {}x{}",
            k,
            cost.cols()
        )));
    }
    if !cost.is_finite() {
        return Err(Error::Contract("assignment costs must be finite".into()));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    // 1-based arrays; index 0 is the virtual root of each augmenting search.
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut owner = vec![0usize; k + 1]; // column -> row
    let mut way = vec![0usize; k + 1];
    for row in 1..=k {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[col0] = true;
            let i0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let reduced = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = col0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    col1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; k];
    for j in 1..=k {
        perm[owner[j] - 1] = j - 1;
    }
    Ok(perm)
}
