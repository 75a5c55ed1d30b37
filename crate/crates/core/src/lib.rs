//! Deep graph clustering with a content auto-encoder and a graph
//! convolutional auto-encoder coupled by layerwise cross-attention fusion,
//! trained with reconstruction and self-supervised clustering objectives.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`.
//!
//! ```
//! use caegcn::{experiment::{train_on, Dataset, ExperimentConfig}, Matrix};
//!
//! let x = Matrix::from_fn(8, 2, |i, j| if i < 4 { (j as f64) * 0.1 } else { 5.0 + (i as f64) * 0.01 });
//! let mut config = ExperimentConfig::new("unused.csv");
//! config.dims = Some(vec![2, 4, 2, 4, 2]);
//! config.heads = 2;
//! config.clusters = Some(2);
//! config.k = Some(3);
//! config.pretrain_epochs = 2;
//! config.epochs = 2;
//! let report = train_on(&Dataset::new(x), &config).unwrap();
//! assert_eq!(report.labels.len(), 8);
//! ```

mod error;
pub mod experiment;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod model;
mod scalar;
pub mod selfsup;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = linalg::DenseMatrix<f64>;
pub type Csr = linalg::CsrMatrix<f64>;
pub type Graph = graph::SparseGraph<f64>;
pub type Filter = graph::GraphFilter<f64>;
pub type Params = model::ModelParams<f64>;
pub type Report = experiment::RunReport<f64>;
pub type Data = experiment::Dataset<f64>;
