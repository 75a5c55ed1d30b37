use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Cluster centers, one per row. No two rows are identical.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCenters<T>(DenseMatrix<T>);

impl<T: Scalar> ClusterCenters<T> {
    pub fn new(centers: DenseMatrix<T>) -> Result<Self> {
        if !centers.is_finite() {
            return Err(Error::Contract("cluster centers must be finite".into()));
        }
        for a in 0..centers.rows() {
            for b in a + 1..centers.rows() {
                if centers.row(a) == centers.row(b) {
                    return Err(Error::Contract(format!("cluster centers {a} and {b} coincide")));
                }
            }
        }
        Ok(Self(centers))
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.rows() == 0
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult<T> {
    pub centers: ClusterCenters<T>,
    pub labels: Vec<usize>,
    /// Inertia after each Lloyd update (sum of squared distances to the
    /// assigned center).
    pub inertia: Vec<T>,
    pub converged: bool,
}

impl<T: Scalar> KMeansResult<T> {
    pub fn final_inertia(&self) -> T {
        self.inertia.last().copied().unwrap_or_else(T::infinity)
    }
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Nearest center per point (ties to the lower index) and the squared distance.
fn assign<T: Scalar>(data: &DenseMatrix<T>, centers: &DenseMatrix<T>) -> (Vec<usize>, Vec<T>) {
    data.row_iter()
        .map(|p| {
            let mut best = (0, T::infinity());
            for c in 0..centers.rows() {
                let d = sq_dist(p, centers.row(c));
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .unzip()
}

fn plus_plus_seed<T: Scalar>(data: &DenseMatrix<T>, k: usize, rng: &mut ChaCha8Rng) -> Result<DenseMatrix<T>> {
    let n = data.rows();
    let mut centers = DenseMatrix::zeros(k, data.cols());
    let first = rng.random_range(0..n);
    centers.row_mut(0).copy_from_slice(data.row(first));
    let mut nearest: Vec<f64> = data
        .row_iter()
        .map(|p| sq_dist(p, data.row(first)).to_f64_lossy())
        .collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Parameter(format!(
                "data has fewer than {k} distinct points"
            )));
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &d) in nearest.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        // guard against round-off landing on an already chosen point
        if nearest[pick] == 0.0 {
            pick = nearest
                .iter()
                .enumerate()
                .rev()
                .find(|(_, &d)| d > 0.0)
                .map(|(i, _)| i)
                .expect("positive total");
        }
        centers.row_mut(c).copy_from_slice(data.row(pick));
        for (i, p) in data.row_iter().enumerate() {
            let d = sq_dist(p, data.row(pick)).to_f64_lossy();
            if d < nearest[i] {
                nearest[i] = d;
            }
        }
    }
    Ok(centers)
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Stops when assignments no longer change or after `max_iters` updates. An
/// emptied cluster is re-seeded at the point farthest from its own center.
pub fn kmeans<T: Scalar>(
    data: &DenseMatrix<T>,
    k: usize,
    max_iters: usize,
    seed: u64,
) -> Result<KMeansResult<T>> {
    let n = data.rows();
    if k == 0 {
        return Err(Error::Parameter("cluster count must be positive".into()));
    }
    if n < k {
        return Err(Error::Parameter(format!(
            "k-means needs at least as many points as clusters (N={n}, C={k})"
        )));
    }
    if max_iters == 0 {
        return Err(Error::Parameter("k-means needs at least one iteration".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_seed(data, k, &mut rng)?;
    let (mut labels, _) = assign(data, &centers);
    let mut inertia = Vec::new();
    let mut converged = false;

    for _ in 0..max_iters {
        centers = update_centers(data, &labels, &centers)?;
        let (next, dists) = assign(data, &centers);
        inertia.push(dists.iter().copied().sum());
        let unchanged = next == labels;
        labels = next;
        if unchanged {
            converged = true;
            break;
        }
    }
    Ok(KMeansResult {
        centers: ClusterCenters::new(centers)?,
        labels,
        inertia,
        converged,
    })
}

/// Best of `restarts` independent [`kmeans`] runs by final inertia. Run `r`
/// uses seed `seed + r`; ties keep the earliest run.
pub fn kmeans_restarts<T: Scalar>(
    data: &DenseMatrix<T>,
    k: usize,
    max_iters: usize,
    restarts: usize,
    seed: u64,
) -> Result<KMeansResult<T>> {
    if restarts == 0 {
        return Err(Error::Parameter("k-means needs at least one restart".into()));
    }
    let mut best = kmeans(data, k, max_iters, seed)?;
    for r in 1..restarts {
        let run = kmeans(data, k, max_iters, seed.wrapping_add(r as u64))?;
        if run.final_inertia() < best.final_inertia() {
            best = run;
        }
    }
    Ok(best)
}

fn update_centers<T: Scalar>(
    data: &DenseMatrix<T>,
    labels: &[usize],
    previous: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let k = previous.rows();
    let mut sums = DenseMatrix::zeros(k, data.cols());
    let mut counts = vec![0usize; k];
    for (p, &c) in data.row_iter().zip(labels) {
        counts[c] += 1;
        for (s, &v) in sums.row_mut(c).iter_mut().zip(p) {
            *s += v;
        }
    }
    let mut taken: Vec<usize> = Vec::new();
    for c in 0..k {
        if counts[c] > 0 {
            let inv = T::one() / T::of(counts[c] as f64);
            for s in sums.row_mut(c) {
                *s *= inv;
            }
            continue;
        }
        let far = (0..data.rows())
            .filter(|i| !taken.contains(i))
            .map(|i| (i, sq_dist(data.row(i), previous.row(labels[i]))))
            .fold(None::<(usize, T)>, |best, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            })
            .map(|(i, _)| i)
            .ok_or_else(|| Error::Contract("no point left to re-seed an empty cluster".into()))?;
        taken.push(far);
        sums.row_mut(c).copy_from_slice(data.row(far));
    }
    Ok(sums)
}
