use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Training variant. The three non-default variants remove attention or one
/// loss term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    #[default]
    Full,
    NoAttention,
    NoGraphLoss,
    NoContentLoss,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [
        Ablation::Full,
        Ablation::NoAttention,
        Ablation::NoGraphLoss,
        Ablation::NoContentLoss,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoAttention => "no-attention",
            Ablation::NoGraphLoss => "no-graph-loss",
            Ablation::NoContentLoss => "no-content-loss",
        }
    }

    pub fn uses_attention(self) -> bool {
        self != Ablation::NoAttention
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                Error::Parameter(format!(
                    "unknown ablation '{s}' (expected full, no-attention, no-graph-loss or no-content-loss)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
}

/// Layer widths and fusion hyperparameters shared by both auto-encoders.
///
/// `dims` has `L + 1` entries: input width, `L − 1` hidden widths, output
/// width (equal to the input). The middle width `dims[L/2]` is the cluster
/// count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    dims: Vec<usize>,
    heads: usize,
    gamma: f64,
    clusters: usize,
}

impl ArchitectureSpec {
    pub const DEFAULT_HEADS: usize = 8;
    pub const DEFAULT_GAMMA: f64 = 0.5;

    pub fn new(dims: Vec<usize>, heads: usize, gamma: f64, clusters: usize) -> Result<Self> {
        let layers = dims.len().saturating_sub(1);
        if layers < 2 || !layers.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "need an even number of layers >= 2, got dims {dims:?}"
            )));
        }
        if dims.contains(&0) {
            return Err(Error::Parameter(format!("layer widths must be positive: {dims:?}")));
        }
        if dims[0] != dims[layers] {
            return Err(Error::Parameter(format!(
                "output width {} must equal input width {}",
                dims[layers], dims[0]
            )));
        }
        if dims[layers / 2] != clusters {
            return Err(Error::Parameter(format!(
                "middle width {} must equal the cluster count {clusters}",
                dims[layers / 2]
            )));
        }
        if heads == 0 {
            return Err(Error::Parameter("at least one attention head is required".into()));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Parameter(format!("gamma must lie in [0, 1], got {gamma}")));
        }
        Ok(Self {
            dims,
            heads,
            gamma,
            clusters,
        })
    }

    /// `input-500-10-clusters-500-500-input`, 8 heads, γ = 0.5.
    pub fn standard(input_dim: usize, clusters: usize) -> Result<Self> {
        Self::new(
            Self::standard_dims(input_dim, clusters),
            Self::DEFAULT_HEADS,
            Self::DEFAULT_GAMMA,
            clusters,
        )
    }

    pub fn standard_dims(input_dim: usize, clusters: usize) -> Vec<usize> {
        vec![input_dim, 500, 10, clusters, 500, 500, input_dim]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    /// Number of weight layers `L`.
    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    /// Index of the clustering layer, `L / 2` (1-based).
    pub fn middle(&self) -> usize {
        self.num_layers() / 2
    }

    /// Width of layer `l` output (`l` is 1-based; `width(0)` is the input).
    pub fn width(&self, l: usize) -> usize {
        self.dims[l]
    }

    /// Fusion happens after layers `1..L-1`.
    pub fn num_fusion_layers(&self) -> usize {
        self.num_layers() - 1
    }

    pub fn activation(&self, l: usize) -> Activation {
        if l == self.num_layers() || l == self.middle() {
            Activation::Linear
        } else {
            Activation::Relu
        }
    }

    pub fn with_heads(mut self, heads: usize) -> Result<Self> {
        self.heads = heads;
        Self::new(self.dims, self.heads, self.gamma, self.clusters)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = gamma;
        Self::new(self.dims, self.heads, self.gamma, self.clusters)
    }
}
