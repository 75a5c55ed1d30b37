use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::{ExperimentConfig, GraphSource};
use crate::graph::{load_graph, SparseGraph};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Features, optional ground truth and an optional precomputed graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub features: DenseMatrix<T>,
    pub labels: Option<Vec<usize>>,
    /// `None` means the graph is built from the features.
    pub graph: Option<SparseGraph<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(features: DenseMatrix<T>) -> Self {
        Self {
            features,
            labels: None,
            graph: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        check_label_count(labels.len(), self.features.rows(), None)?;
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_graph(mut self, graph: SparseGraph<T>) -> Result<Self> {
        if graph.num_nodes() != self.features.rows() {
            return Err(Error::Contract(format!(
                "graph has {} nodes but the features have {} rows",
                graph.num_nodes(),
                self.features.rows()
            )));
        }
        self.graph = Some(graph);
        Ok(self)
    }

    pub fn num_samples(&self) -> usize {
        self.features.rows()
    }
}

fn check_label_count(labels: usize, rows: usize, path: Option<&Path>) -> Result<()> {
    if labels == rows {
        return Ok(());
    }
    let msg = format!("{labels} labels for {rows} feature rows");
    Err(match path {
        Some(p) => Error::Parse {
            path: p.to_path_buf(),
            line: labels.min(rows) + 1,
            msg,
        },
        None => Error::Contract(msg),
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses a headerless numeric CSV, one sample per line. Blank lines are
/// skipped.
pub fn parse_features<T: Scalar>(text: &str, path: &Path) -> Result<DenseMatrix<T>> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg,
        };
        let mut count = 0;
        for (c, cell) in line.split(',').enumerate() {
            let cell = cell.trim();
            let v: f64 = cell
                .parse()
                .map_err(|_| err(format!("column {}: `{cell}` is not a number", c + 1)))?;
            if !v.is_finite() {
                return Err(err(format!("column {}: non-finite value", c + 1)));
            }
            data.push(T::of(v));
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(expected) if expected != count => {
                return Err(err(format!("expected {expected} columns, found {count}")));
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: "no feature rows".into(),
    })?;
    DenseMatrix::new(rows, cols, data)
}

pub fn load_features<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseMatrix<T>> {
    let path = path.as_ref();
    parse_features(&read(path)?, path)
}

/// One nonnegative integer per line; blank lines are skipped.
pub fn parse_labels(text: &str, path: &Path) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| {
            l.trim().parse::<usize>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                msg: format!("`{}` is not a nonnegative integer", l.trim()),
            })
        })
        .collect()
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    parse_labels(&read(path)?, path)
}

/// Reads the files named by `config`. A graph is only loaded when the config
/// points at a graph file.
pub fn load_dataset<T: Scalar>(config: &ExperimentConfig) -> Result<Dataset<T>> {
    let features = load_features(&config.features)?;
    let n = features.rows();
    let labels = match &config.labels {
        Some(path) => {
            let y = load_labels(path)?;
            check_label_count(y.len(), n, Some(path))?;
            Some(y)
        }
        None => None,
    };
    let graph = match config.graph_source()? {
        GraphSource::File(path) => Some(load_graph(path, Some(n))?),
        GraphSource::Knn { .. } => None,
    };
    Ok(Dataset {
        features,
        labels,
        graph,
    })
}
