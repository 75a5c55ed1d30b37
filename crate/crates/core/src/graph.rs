//! Input graph construction: similarity kernels, KNN sparsification, edge-list
//! loading, and the symmetric normalized convolution filter.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::scalar::Scalar;

/// Similarity used to rank neighbors when no graph is supplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    Heat,
    Inner,
}

impl FromStr for SimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heat" => Ok(Self::Heat),
            "inner" => Ok(Self::Inner),
            other => Err(Error::Parameter(format!(
                "unknown similarity '{other}' (expected heat or inner)"
            ))),
        }
    }
}

/// Undirected, unweighted adjacency without self-loops, stored as CSR.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph<T> {
    adjacency: CsrMatrix<T>,
}

impl<T: Scalar> SparseGraph<T> {
    /// Builds a graph from an edge list: union-symmetrized, deduplicated,
    /// self-loops dropped, unit weights.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Contract(format!(
                    "edge ({i}, {j}) references a node outside 0..{n}"
                )));
            }
            if i != j {
                pairs.push((i, j));
                pairs.push((j, i));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let triplets = pairs.into_iter().map(|(i, j)| (i, j, T::one())).collect();
        Ok(Self {
            adjacency: CsrMatrix::from_triplets(n, n, triplets)?,
        })
    }

    /// Wraps an arbitrary sparse matrix; callers validate with
    /// [`SparseGraph::is_symmetric`] before forming a filter.
    pub fn from_csr(adjacency: CsrMatrix<T>) -> Result<Self> {
        if adjacency.rows() != adjacency.cols() {
            return Err(Error::Contract(format!(
                "adjacency must be square, got {:?}",
                adjacency.shape()
            )));
        }
        Ok(Self { adjacency })
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.rows()
    }

    /// Number of undirected edges (self-loops counted once).
    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().filter(|&(i, j, _)| i <= j).count()
    }

    pub fn adjacency(&self) -> &CsrMatrix<T> {
        &self.adjacency
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        self.adjacency.row(i).0
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency.get(i, j).is_some()
    }

    /// Undirected edges as `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .filter(|&(i, j, _)| i < j)
            .map(|(i, j, _)| (i, j))
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.adjacency
            .iter()
            .all(|(i, j, w)| self.adjacency.get(j, i) == Some(w))
    }

    pub fn has_self_loops(&self) -> bool {
        self.adjacency.iter().any(|(i, j, _)| i == j)
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        self.adjacency.to_dense()
    }
}

/// `D̂^{-1/2} (A + I) D̂^{-1/2}` in CSR form; exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFilter<T> {
    matrix: CsrMatrix<T>,
}

impl<T: Scalar> GraphFilter<T> {
    pub fn num_nodes(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        self.matrix.to_dense()
    }

    pub fn apply(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.matrix.mul_dense(x)
    }
}

fn check_rows<T: Scalar>(x: &DenseMatrix<T>) -> Result<()> {
    if x.rows() < 2 {
        return Err(Error::Parameter(format!(
            "similarity needs at least 2 samples, got {}",
            x.rows()
        )));
    }
    Ok(())
}

fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Fills the upper triangle with `f(i, j)` and mirrors it.
fn symmetric_from_upper<T: Scalar>(n: usize, mut f: impl FnMut(usize, usize) -> T) -> DenseMatrix<T> {
    let mut s = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = f(i, j);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

/// `S_ij = exp(−‖x_i − x_j‖² / t)`.
pub fn heat_kernel_similarity<T: Scalar>(x: &DenseMatrix<T>, t: T) -> Result<DenseMatrix<T>> {
    check_rows(x)?;
    if !(t > T::zero()) || !t.is_finite() {
        return Err(Error::Parameter(format!(
            "heat kernel scale must be positive and finite, got {t}"
        )));
    }
    Ok(symmetric_from_upper(x.rows(), |i, j| {
        if i == j {
            T::one()
        } else {
            (-squared_distance(x.row(i), x.row(j)) / t).exp()
        }
    }))
}

/// Median of squared pairwise distances, used as the default heat scale.
/// Falls back to 1 when the median is zero (mostly duplicate samples).
pub fn median_heat_scale<T: Scalar>(x: &DenseMatrix<T>) -> Result<T> {
    check_rows(x)?;
    let n = x.rows();
    let mut d: Vec<T> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push(squared_distance(x.row(i), x.row(j)));
        }
    }
    let mid = d.len() / 2;
    let (_, &mut m, _) = d.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Ok(if m > T::zero() { m } else { T::one() })
}

/// `S_ij = x_jᵀ x_i`.
pub fn inner_product_similarity<T: Scalar>(x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    check_rows(x)?;
    Ok(symmetric_from_upper(x.rows(), |i, j| {
        x.row(i).iter().zip(x.row(j)).map(|(&a, &b)| a * b).sum()
    }))
}

/// For every node, its `k` most similar other nodes. Ties go to the smaller
/// node index.
pub fn knn_neighbors<T: Scalar>(s: &DenseMatrix<T>, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = s.rows();
    if s.cols() != n {
        return Err(Error::dim("knn_graph", s.shape(), s.shape()));
    }
    if k == 0 || k >= n {
        return Err(Error::Parameter(format!("K must satisfy 1 <= K < N, got K={k}, N={n}")));
    }
    let order = |row: &[T], a: &usize, b: &usize| {
        row[*b]
            .partial_cmp(&row[*a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    };
    Ok((0..n)
        .map(|i| {
            let row = s.row(i);
            let mut cand: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            cand.select_nth_unstable_by(k - 1, |a, b| order(row, a, b));
            cand.truncate(k);
            cand.sort_unstable_by(|a, b| order(row, a, b));
            cand
        })
        .collect())
}

/// KNN graph from a dense similarity matrix, symmetrized by union.
pub fn knn_graph<T: Scalar>(s: &DenseMatrix<T>, k: usize) -> Result<SparseGraph<T>> {
    let neighbors = knn_neighbors(s, k)?;
    SparseGraph::from_edges(
        s.rows(),
        neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().map(move |&j| (i, j))),
    )
}

/// Symmetric normalized filter with self-loops.
pub fn normalize_filter<T: Scalar>(a: &SparseGraph<T>) -> Result<GraphFilter<T>> {
    if !a.is_symmetric() {
        return Err(Error::Contract("normalize_filter needs a symmetric adjacency".into()));
    }
    if a.has_self_loops() {
        return Err(Error::Contract("normalize_filter needs an adjacency without self-loops".into()));
    }
    let n = a.num_nodes();
    let adj = a.adjacency();
    let degree: Vec<T> = (0..n)
        .map(|i| adj.row(i).1.iter().copied().sum::<T>() + T::one())
        .collect();
    let mut triplets = Vec::with_capacity(adj.nnz() + n);
    for i in 0..n {
        triplets.push((i, i, T::one() / degree[i]));
        let (idx, vals) = adj.row(i);
        for (&j, &w) in idx.iter().zip(vals) {
            if i < j {
                let v = w / (degree[i] * degree[j]).sqrt();
                triplets.push((i, j, v));
                triplets.push((j, i, v));
            }
        }
    }
    Ok(GraphFilter {
        matrix: CsrMatrix::from_triplets(n, n, triplets)?,
    })
}

/// Parses an edge-list file. With `num_nodes` set, ids at or beyond it are
/// rejected; otherwise the node count is `max id + 1`.
pub fn load_graph<T: Scalar>(path: impl AsRef<Path>, num_nodes: Option<usize>) -> Result<SparseGraph<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_graph(&text, num_nodes, path)
}

pub(crate) fn parse_graph<T: Scalar>(
    text: &str,
    num_nodes: Option<usize>,
    path: &Path,
) -> Result<SparseGraph<T>> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut edges = Vec::new();
    let mut max_id = None::<usize>;
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_err(lineno, format!("expected two node ids, found {}", fields.len())));
        }
        let mut ids = [0usize; 2];
        for (slot, f) in ids.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .map_err(|_| parse_err(lineno, format!("'{f}' is not a node id")))?;
            if let Some(n) = num_nodes {
                if *slot >= n {
                    return Err(parse_err(lineno, format!("node id {slot} out of range for {n} nodes")));
                }
            }
        }
        max_id = max_id.max(Some(ids[0].max(ids[1])));
        edges.push((ids[0], ids[1]));
    }
    let n = num_nodes.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
    SparseGraph::from_edges(n, edges)
}
