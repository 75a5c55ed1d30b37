use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SimilarityKind;
use crate::model::Ablation;

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_HEADS: usize = 8;
pub const DEFAULT_GAMMA: f64 = 0.5;
pub const DEFAULT_LR: f64 = 0.001;
pub const DEFAULT_PRETRAIN_EPOCHS: usize = 50;
pub const DEFAULT_EPOCHS: usize = 200;
pub const DEFAULT_KMEANS_ITERS: usize = 1000;
pub const DEFAULT_KMEANS_RESTARTS: usize = 10;

/// Everything needed to reproduce one run.
///
/// The graph comes either from `graph` or from a KNN construction over the
/// features (`similarity`, `k`, `heat_t`); setting both is an error. When
/// neither is set the KNN route is taken with a heat kernel and `k = 5`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub features: PathBuf,
    pub labels: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub similarity: Option<SimilarityKind>,
    pub k: Option<usize>,
    /// Heat-kernel scale; `None` uses the median squared distance.
    pub heat_t: Option<f64>,
    /// Inferred from the labels when omitted.
    pub clusters: Option<usize>,
    /// Full width list `D, d_1, .., d_L` (so `d_L = D`); `None` uses the
    /// standard `D-500-10-C-500-500-D` layout.
    pub dims: Option<Vec<usize>>,
    pub heads: usize,
    pub gamma: f64,
    pub lr: f64,
    pub pretrain_epochs: usize,
    pub epochs: usize,
    pub kmeans_iters: usize,
    /// Independent k-means++ runs; the lowest-inertia one seeds the centers.
    pub kmeans_restarts: usize,
    pub seed: u64,
    pub ablation: Ablation,
    pub out: Option<PathBuf>,
}

/// Where the input graph comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    File(PathBuf),
    Knn {
        similarity: SimilarityKind,
        k: usize,
        heat_t: Option<f64>,
    },
}

impl ExperimentConfig {
    pub fn new(features: impl Into<PathBuf>) -> Self {
        Self {
            features: features.into(),
            labels: None,
            graph: None,
            similarity: None,
            k: None,
            heat_t: None,
            clusters: None,
            dims: None,
            heads: DEFAULT_HEADS,
            gamma: DEFAULT_GAMMA,
            lr: DEFAULT_LR,
            pretrain_epochs: DEFAULT_PRETRAIN_EPOCHS,
            epochs: DEFAULT_EPOCHS,
            kmeans_iters: DEFAULT_KMEANS_ITERS,
            kmeans_restarts: DEFAULT_KMEANS_RESTARTS,
            seed: 0,
            ablation: Ablation::Full,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.graph_source()?;
        if self.heads == 0 {
            return Err(Error::Parameter("heads must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Parameter(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Parameter(format!("learning rate {} must be positive", self.lr)));
        }
        if self.kmeans_iters == 0 {
            return Err(Error::Parameter("kmeans_iters must be at least 1".into()));
        }
        if self.kmeans_restarts == 0 {
            return Err(Error::Parameter("kmeans_restarts must be at least 1".into()));
        }
        if self.clusters == Some(0) {
            return Err(Error::Parameter("clusters must be at least 1".into()));
        }
        Ok(())
    }

    pub fn graph_source(&self) -> Result<GraphSource> {
        match &self.graph {
            Some(path) => {
                if self.similarity.is_some() || self.k.is_some() || self.heat_t.is_some() {
                    return Err(Error::Parameter(
                        "a graph file excludes similarity, k and heat_t".into(),
                    ));
                }
                Ok(GraphSource::File(path.clone()))
            }
            None => {
                let similarity = self.similarity.unwrap_or(SimilarityKind::Heat);
                if let Some(t) = self.heat_t {
                    if similarity != SimilarityKind::Heat {
                        return Err(Error::Parameter("heat_t applies only to the heat kernel".into()));
                    }
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(Error::Parameter(format!("heat_t {t} must be positive")));
                    }
                }
                Ok(GraphSource::Knn {
                    similarity,
                    k: self.k.unwrap_or(DEFAULT_K),
                    heat_t: self.heat_t,
                })
            }
        }
    }
}
