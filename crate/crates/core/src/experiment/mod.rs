//! Configuration, data ingestion, the end-to-end training procedure and
//! result export.

mod config;
mod data;
mod export;
mod train;

pub use config::{
    ExperimentConfig, GraphSource, DEFAULT_EPOCHS, DEFAULT_GAMMA, DEFAULT_HEADS, DEFAULT_K,
    DEFAULT_KMEANS_ITERS, DEFAULT_KMEANS_RESTARTS, DEFAULT_LR, DEFAULT_PRETRAIN_EPOCHS,
};
pub use data::{load_dataset, load_features, load_labels, parse_features, parse_labels, Dataset};
pub use export::{
    assignments_csv, embeddings_csv, export_results, losses_csv, metrics_json, ASSIGNMENTS_FILE,
    CAE_EMBEDDINGS_FILE, GAE_EMBEDDINGS_FILE, LOSSES_FILE, LOSSES_HEADER, METRICS_FILE,
};
pub use train::{build_graph, pretrain_cae, train, train_ablations, train_on, RunReport};
