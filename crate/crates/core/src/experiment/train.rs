use std::collections::BTreeSet;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::experiment::{load_dataset, Dataset, ExperimentConfig, GraphSource};
use crate::graph::{
    heat_kernel_similarity, inner_product_similarity, knn_graph, median_heat_scale,
    normalize_filter, GraphFilter, SimilarityKind, SparseGraph,
};
use crate::linalg::{AdamConfig, AdamState, DenseMatrix, Tape};
use crate::metrics::ClusteringScores;
use crate::model::{cae_forward, evaluate, evaluate_cae, forward, Ablation, ArchitectureSpec, ModelParams};
use crate::scalar::Scalar;
use crate::selfsup::{
    gae_soft_assign, hard_assign, kmeans_restarts, record_losses, student_t_assign, target_distribution,
    LossBreakdown,
};

/// Outcome of one training run.
#[derive(Debug, Clone)]
pub struct RunReport<T> {
    pub config: ExperimentConfig,
    pub spec: ArchitectureSpec,
    /// Content reconstruction loss before each pretraining update.
    pub pretrain_losses: Vec<T>,
    /// Loss breakdown before each joint update.
    pub losses: Vec<LossBreakdown<T>>,
    pub scores: Option<ClusteringScores>,
    pub labels: Vec<usize>,
    /// `H_{L/2}` at the end of training.
    pub cae_embedding: DenseMatrix<T>,
    /// `Z_{L/2}` at the end of training.
    pub gae_embedding: DenseMatrix<T>,
    pub params: ModelParams<T>,
    pub wall_clock_secs: f64,
}

/// Builds the KNN graph described by `source`. File sources are rejected;
/// those are read by [`load_dataset`].
pub fn build_graph<T: Scalar>(x: &DenseMatrix<T>, source: &GraphSource) -> Result<SparseGraph<T>> {
    match *source {
        GraphSource::File(ref path) => Err(Error::Contract(format!(
            "graph file {} must be loaded, not built",
            path.display()
        ))),
        GraphSource::Knn {
            similarity,
            k,
            heat_t,
        } => {
            let s = match similarity {
                SimilarityKind::Heat => {
                    let t = match heat_t {
                        Some(t) => T::of(t),
                        None => median_heat_scale(x)?,
                    };
                    heat_kernel_similarity(x, t)?
                }
                SimilarityKind::Inner => inner_product_similarity(x)?,
            };
            knn_graph(&s, k)
        }
    }
}

/// Trains the content auto-encoder alone on `½‖X − X̂‖²` with Adam.
///
/// Only the CAE weights and biases move. Returns the loss before every
/// update.
pub fn pretrain_cae<T: Scalar>(
    x: &DenseMatrix<T>,
    params: &mut ModelParams<T>,
    spec: &ArchitectureSpec,
    epochs: usize,
    lr: f64,
) -> Result<Vec<T>> {
    params.validate(spec)?;
    if x.cols() != spec.input_dim() {
        return Err(Error::dim("pretrain_cae", x.shape(), (x.rows(), spec.input_dim())));
    }
    let count = params.num_cae_tensors();
    let shapes = &params.shapes()[..count];
    let mut adam = AdamState::new(shapes, AdamConfig::with_lr(lr))?;
    let mut losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let (loss, grads) = {
            let mut tape = Tape::new();
            let xv = tape.constant_ref(x);
            let (w, b) = params.register_cae(&mut tape);
            let hs = cae_forward(&mut tape, xv, &w, &b, spec)?;
            let diff = tape.sub(xv, *hs.last().expect("layers >= 2"))?;
            let sq = tape.sum_squares(diff)?;
            let loss = tape.scale(sq, T::of(0.5))?;
            let value = tape.scalar(loss);
            if !value.is_finite() {
                return Err(Error::Divergence {
                    stage: "pretraining",
                    epoch,
                });
            }
            tape.backward(loss)?;
            let vars: Vec<_> = w.iter().zip(&b).flat_map(|(&w, &b)| [w, b]).collect();
            (value, vars.into_iter().map(|v| tape.take_grad(v)).collect::<Vec<_>>())
        };
        losses.push(loss);
        adam.step(&mut params.tensors_mut()[..count], &grads)?;
    }
    Ok(losses)
}

/// One joint update: refresh `P` from the current Student-t assignment,
/// record all terms, back-propagate and step.
fn joint_step<T: Scalar>(
    x: &DenseMatrix<T>,
    adjacency: &DenseMatrix<T>,
    filter: &GraphFilter<T>,
    params: &mut ModelParams<T>,
    spec: &ArchitectureSpec,
    ablation: Ablation,
    adam: &mut AdamState<T>,
    epoch: usize,
) -> Result<LossBreakdown<T>> {
    let centers = params
        .centers
        .clone()
        .ok_or_else(|| Error::Contract("cluster centers are not initialized".into()))?;
    let (breakdown, grads) = {
        let mut tape = Tape::new();
        let xv = tape.constant_ref(x);
        let av = tape.constant_ref(adjacency);
        let pv = params.register(&mut tape);
        let graph = forward(&mut tape, xv, filter, &pv, spec, ablation)?;
        let t = student_t_assign(tape.value(graph.cae_middle()), &centers)?;
        let p = target_distribution(t.matrix()).map_err(|e| match e {
            Error::DegenerateCluster { cluster, .. } => Error::DegenerateCluster {
                cluster,
                epoch: Some(epoch),
            },
            other => other,
        })?;
        let losses = record_losses(&mut tape, xv, &graph, av, &centers, p.matrix(), ablation)?;
        let breakdown = losses.breakdown(&tape);
        if !breakdown.is_finite() {
            return Err(Error::Divergence {
                stage: "joint training",
                epoch,
            });
        }
        tape.backward(losses.total)?;
        let grads: Vec<_> = pv.all().into_iter().map(|v| tape.take_grad(v)).collect();
        (breakdown, grads)
    };
    adam.step(&mut params.tensors_mut(), &grads)?;
    Ok(breakdown)
}

fn resolve_clusters(config: &ExperimentConfig, labels: Option<&[usize]>) -> Result<usize> {
    if let Some(c) = config.clusters {
        return Ok(c);
    }
    labels
        .map(|y| y.iter().collect::<BTreeSet<_>>().len())
        .ok_or_else(|| Error::Parameter("cluster count is required when no labels are given".into()))
}

fn resolve_spec(config: &ExperimentConfig, input_dim: usize, clusters: usize) -> Result<ArchitectureSpec> {
    let dims = match &config.dims {
        Some(d) => {
            if d.first() != Some(&input_dim) {
                return Err(Error::Parameter(format!(
                    "dims must start with the feature width {input_dim}, got {d:?}"
                )));
            }
            d.clone()
        }
        None => ArchitectureSpec::standard_dims(input_dim, clusters),
    };
    ArchitectureSpec::new(dims, config.heads, config.gamma, clusters)
}

/// Full procedure on in-memory data: graph and filter, CAE pretraining,
/// K-means center initialization on `H_{L/2}`, joint training, and the final
/// hard assignment from the graph branch.
///
/// Path fields of `config` are ignored; the graph is `data.graph` or, when
/// absent, built from the features.
pub fn train_on<T: Scalar>(data: &Dataset<T>, config: &ExperimentConfig) -> Result<RunReport<T>> {
    let start = Instant::now();
    config.validate()?;
    let x = &data.features;
    let clusters = resolve_clusters(config, data.labels.as_deref())?;
    let spec = resolve_spec(config, x.cols(), clusters)?;

    let built;
    let graph = match &data.graph {
        Some(g) => g,
        None => {
            built = build_graph(x, &config.graph_source()?)?;
            &built
        }
    };
    if graph.num_nodes() != x.rows() {
        return Err(Error::Contract(format!(
            "graph has {} nodes but the features have {} rows",
            graph.num_nodes(),
            x.rows()
        )));
    }
    let filter = normalize_filter(graph)?;
    let adjacency = graph.to_dense();

    let mut params = ModelParams::xavier(&spec, config.seed)?;
    let pretrain_losses = pretrain_cae(x, &mut params, &spec, config.pretrain_epochs, config.lr)?;

    let h = evaluate_cae(x, &params, &spec)?;
    let km = kmeans_restarts(
        &h[spec.middle() - 1],
        clusters,
        config.kmeans_iters,
        config.kmeans_restarts,
        config.seed,
    )?;
    params.centers = Some(km.centers.into_matrix());

    let mut adam = AdamState::new(&params.shapes(), AdamConfig::with_lr(config.lr))?;
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        losses.push(joint_step(
            x,
            &adjacency,
            &filter,
            &mut params,
            &spec,
            config.ablation,
            &mut adam,
            epoch,
        )?);
    }

    let out = evaluate(x, &filter, &params, &spec, config.ablation)?;
    let zdist = gae_soft_assign(out.gae_middle(), clusters)?;
    let labels = hard_assign(zdist.matrix());
    let scores = match &data.labels {
        Some(y) => Some(ClusteringScores::compute(y, &labels)?),
        None => None,
    };
    Ok(RunReport {
        config: config.clone(),
        spec,
        pretrain_losses,
        losses,
        scores,
        labels,
        cae_embedding: out.cae_middle().clone(),
        gae_embedding: out.gae_middle().clone(),
        params,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

/// Loads the files named by `config` and runs [`train_on`].
pub fn train<T: Scalar>(config: &ExperimentConfig) -> Result<RunReport<T>> {
    config.validate()?;
    let data = load_dataset(config)?;
    train_on(&data, config)
}

/// Runs every ablation variant on the same data and seed.
pub fn train_ablations<T: Scalar>(
    data: &Dataset<T>,
    config: &ExperimentConfig,
) -> Result<Vec<RunReport<T>>> {
    Ablation::ALL
        .iter()
        .map(|&ablation| {
            let mut c = config.clone();
            c.ablation = ablation;
            train_on(data, &c)
        })
        .collect()
}
