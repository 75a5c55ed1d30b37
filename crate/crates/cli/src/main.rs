use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use caegcn::experiment::{
    export_results, train, ExperimentConfig, DEFAULT_EPOCHS, DEFAULT_GAMMA, DEFAULT_HEADS,
    DEFAULT_KMEANS_ITERS, DEFAULT_KMEANS_RESTARTS, DEFAULT_LR, DEFAULT_PRETRAIN_EPOCHS,
};
use caegcn::graph::SimilarityKind;
use caegcn::model::Ablation;
use clap::Parser;

/// Deep graph clustering of a feature matrix with an optional graph.
#[derive(Debug, Parser)]
#[command(name = "caegcn", version)]
struct Args {
    /// Headerless CSV, one sample per row.
    #[arg(long)]
    features: PathBuf,
    /// One nonnegative integer label per line; enables metrics.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Edge list "i j" per line. Excludes --similarity, --k and --heat-t.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Similarity for the KNN graph [default: heat].
    #[arg(long)]
    similarity: Option<SimilarityKind>,
    /// Neighbors per node for the KNN graph [default: 5].
    #[arg(long)]
    k: Option<usize>,
    /// Heat kernel scale [default: median squared distance].
    #[arg(long)]
    heat_t: Option<f64>,
    /// Cluster count [default: number of distinct labels].
    #[arg(long)]
    clusters: Option<usize>,
    /// Layer widths including input and output, e.g. 16,500,10,3,500,500,16.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long, default_value_t = DEFAULT_HEADS)]
    heads: usize,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = DEFAULT_LR)]
    lr: f64,
    #[arg(long, default_value_t = DEFAULT_PRETRAIN_EPOCHS)]
    pretrain_epochs: usize,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = DEFAULT_KMEANS_ITERS)]
    kmeans_iters: usize,
    /// Independent k-means++ runs for center initialization.
    #[arg(long, default_value_t = DEFAULT_KMEANS_RESTARTS)]
    kmeans_restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// full, no-attention, no-graph-loss or no-content-loss.
    #[arg(long, default_value_t = Ablation::Full)]
    ablation: Ablation,
    /// Output directory for metrics, assignments, embeddings and losses.
    #[arg(long, default_value = "caegcn-out")]
    out: PathBuf,
}

impl Args {
    fn into_config(self) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(self.features);
        c.labels = self.labels;
        c.graph = self.graph;
        c.similarity = self.similarity;
        c.k = self.k;
        c.heat_t = self.heat_t;
        c.clusters = self.clusters;
        c.dims = self.dims;
        c.heads = self.heads;
        c.gamma = self.gamma;
        c.lr = self.lr;
        c.pretrain_epochs = self.pretrain_epochs;
        c.epochs = self.epochs;
        c.kmeans_iters = self.kmeans_iters;
        c.kmeans_restarts = self.kmeans_restarts;
        c.seed = self.seed;
        c.ablation = self.ablation;
        c.out = Some(self.out);
        c
    }
}

fn run(args: Args) -> Result<()> {
    let config = args.into_config();
    config.validate().context("invalid configuration")?;
    let report = train::<f64>(&config).context("training failed")?;
    let out = config.out.as_ref().expect("set from arguments");
    export_results(&report, out).context("writing results")?;
    let mut stdout = io::stdout().lock();
    match &report.scores {
        Some(s) => writeln!(
            stdout,
            "{}: acc {:.4} nmi {:.4} ari {:.4} f1 {:.4} ({:.1}s)",
            config.ablation, s.acc, s.nmi, s.ari, s.f1, report.wall_clock_secs
        ),
        None => writeln!(
            stdout,
            "{}: {} samples clustered ({:.1}s)",
            config.ablation,
            report.labels.len(),
            report.wall_clock_secs
        ),
    }?;
    writeln!(stdout, "results in {}", out.display())?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
