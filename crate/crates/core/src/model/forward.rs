//! Forward pass of the coupled auto-encoders.
//!
//! Samples are rows. Layer `l` of the content auto-encoder computes
//! `H_l = a(H_{l-1} U_l + b_l)`; layer `l` of the graph auto-encoder computes
//! `Z_l = a(F R_{l-1} U_l)` where `F` is the normalized filter, `R_0 = X`, and
//! for `l >= 2` the input `R_{l-1}` is the multi-head attention fusion of
//! `γ Z_{l-1} + (1-γ) H_{l-1}`.

use crate::error::{Error, Result};
use crate::graph::GraphFilter;
use crate::linalg::{DenseMatrix, Tape, Var};
use crate::model::{Ablation, Activation, ArchitectureSpec, HeadVars, ModelParams, ParamVars};
use crate::scalar::Scalar;

fn activate<T: Scalar>(tape: &mut Tape<'_, T>, v: Var, act: Activation) -> Result<Var> {
    match act {
        Activation::Relu => tape.relu(v),
        Activation::Linear => Ok(v),
    }
}

/// One dense layer `a(H U + 1·b)`.
pub fn cae_layer<T: Scalar>(
    tape: &mut Tape<'_, T>,
    input: Var,
    weight: Var,
    bias: Var,
    act: Activation,
) -> Result<Var> {
    let lin = tape.matmul(input, weight)?;
    let pre = tape.add_row_bias(lin, bias)?;
    activate(tape, pre, act)
}

/// Convex mix `γ Z + (1 − γ) H`.
pub fn fuse_raw<T: Scalar>(tape: &mut Tape<'_, T>, z: Var, h: Var, gamma: f64) -> Result<Var> {
    let (zs, hs) = (tape.value(z).shape(), tape.value(h).shape());
    if zs != hs {
        return Err(Error::dim("fuse_raw", zs, hs));
    }
    let zw = tape.scale(z, T::of(gamma))?;
    let hw = tape.scale(h, T::of(1.0 - gamma))?;
    tape.add(zw, hw)
}

/// Single attention head over the samples of `y`.
///
/// Returns `(R, α)`: `α` is the row-softmax of `Q Kᵀ / √D_l` (each query
/// row normalized over keys) and `R = α V`.
pub fn attention_head<T: Scalar>(
    tape: &mut Tape<'_, T>,
    y: Var,
    head: HeadVars,
) -> Result<(Var, Var)> {
    let q = tape.matmul(y, head.query)?;
    let k = tape.matmul(y, head.key)?;
    let v = tape.matmul(y, head.value)?;
    let kt = tape.transpose(k)?;
    let raw = tape.matmul(q, kt)?;
    let d = tape.value(q).cols() as f64;
    let scores = tape.scale(raw, T::of(1.0 / d.sqrt()))?;
    let alpha = tape.row_softmax(scores)?;
    let r = tape.matmul(alpha, v)?;
    Ok((r, alpha))
}

/// `Concat(R¹, …, R^M) · W_out`. Returns the fused output and each head's
/// attention weights.
pub fn multi_head_fusion<T: Scalar>(
    tape: &mut Tape<'_, T>,
    y: Var,
    heads: &[HeadVars],
    output: Var,
) -> Result<(Var, Vec<Var>)> {
    if heads.is_empty() {
        return Err(Error::Contract("multi-head fusion needs at least one head".into()));
    }
    let width = tape.value(y).cols();
    let out_shape = tape.value(output).shape();
    if out_shape != (heads.len() * width, width) {
        return Err(Error::dim("multi_head_fusion", (heads.len() * width, width), out_shape));
    }
    let mut outs = Vec::with_capacity(heads.len());
    let mut alphas = Vec::with_capacity(heads.len());
    for &h in heads {
        let (r, a) = attention_head(tape, y, h)?;
        outs.push(r);
        alphas.push(a);
    }
    let cat = tape.concat_cols(&outs)?;
    Ok((tape.matmul(cat, output)?, alphas))
}

/// Graph convolution `a(F · R · U)`.
pub fn gae_layer<'g, T: Scalar>(
    tape: &mut Tape<'g, T>,
    input: Var,
    filter: &'g GraphFilter<T>,
    weight: Var,
    act: Activation,
) -> Result<Var> {
    let propagated = tape.sparse_matmul(filter.matrix(), input)?;
    let lin = tape.matmul(propagated, weight)?;
    activate(tape, lin, act)
}

/// `Sigmoid(Z Zᵀ)`.
pub fn reconstruct_adjacency<T: Scalar>(tape: &mut Tape<'_, T>, z: Var) -> Result<Var> {
    let zt = tape.transpose(z)?;
    let gram = tape.matmul(z, zt)?;
    tape.sigmoid(gram)
}

/// Tape handles of one forward evaluation. Index `l − 1` holds layer `l`.
#[derive(Debug, Clone)]
pub struct ForwardGraph {
    pub cae: Vec<Var>,
    pub gae: Vec<Var>,
    pub fused: Vec<Var>,
    /// Per fusion layer, per head; empty lists under the no-attention variant.
    pub attention: Vec<Vec<Var>>,
    pub adjacency: Var,
    /// Index of the clustering layer (`L / 2`, 1-based).
    pub middle: usize,
}

impl ForwardGraph {
    pub fn reconstruction(&self) -> Var {
        *self.cae.last().expect("at least one layer")
    }

    pub fn gae_output(&self) -> Var {
        *self.gae.last().expect("at least one layer")
    }

    pub fn cae_middle(&self) -> Var {
        self.cae[self.middle - 1]
    }

    pub fn gae_middle(&self) -> Var {
        self.gae[self.middle - 1]
    }
}

/// Content auto-encoder stack alone, `H_1..H_L`.
pub fn cae_forward<T: Scalar>(
    tape: &mut Tape<'_, T>,
    x: Var,
    weights: &[Var],
    biases: &[Var],
    spec: &ArchitectureSpec,
) -> Result<Vec<Var>> {
    let mut h = x;
    let mut out = Vec::with_capacity(spec.num_layers());
    for l in 1..=spec.num_layers() {
        h = cae_layer(tape, h, weights[l - 1], biases[l - 1], spec.activation(l))?;
        out.push(h);
    }
    Ok(out)
}

/// Records the full coupled forward pass.
pub fn forward<'g, T: Scalar>(
    tape: &mut Tape<'g, T>,
    x: Var,
    filter: &'g GraphFilter<T>,
    params: &ParamVars,
    spec: &ArchitectureSpec,
    ablation: Ablation,
) -> Result<ForwardGraph> {
    let (n, d) = tape.value(x).shape();
    if d != spec.input_dim() {
        return Err(Error::dim("forward", (n, d), (n, spec.input_dim())));
    }
    if filter.num_nodes() != n {
        return Err(Error::dim("forward", (n, d), filter.matrix().shape()));
    }
    let layers = spec.num_layers();
    let cae = cae_forward(tape, x, &params.cae_weights, &params.cae_biases, spec)?;

    let mut gae = Vec::with_capacity(layers);
    let mut fused = Vec::with_capacity(layers - 1);
    let mut attention = Vec::with_capacity(layers - 1);
    let mut input = x;
    for l in 1..=layers {
        let z = gae_layer(tape, input, filter, params.gae_weights[l - 1], spec.activation(l))?;
        gae.push(z);
        if l == layers {
            break;
        }
        let y = fuse_raw(tape, z, cae[l - 1], spec.gamma())?;
        let r = if ablation.uses_attention() {
            let f = &params.fusion[l - 1];
            let (r, alphas) = multi_head_fusion(tape, y, &f.heads, f.output)?;
            attention.push(alphas);
            r
        } else {
            attention.push(Vec::new());
            y
        };
        fused.push(r);
        input = r;
    }
    let adjacency = reconstruct_adjacency(tape, *gae.last().expect("layers >= 2"))?;
    Ok(ForwardGraph {
        cae,
        gae,
        fused,
        attention,
        adjacency,
        middle: spec.middle(),
    })
}

/// Materialized values of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutputs<T> {
    pub cae: Vec<DenseMatrix<T>>,
    pub gae: Vec<DenseMatrix<T>>,
    pub fused: Vec<DenseMatrix<T>>,
    pub attention: Vec<Vec<DenseMatrix<T>>>,
    pub adjacency: DenseMatrix<T>,
    /// Index of the clustering layer (`L / 2`, 1-based).
    pub middle: usize,
}

impl<T: Scalar> ForwardOutputs<T> {
    pub fn collect(tape: &Tape<'_, T>, graph: &ForwardGraph) -> Self {
        let grab = |vs: &[Var]| vs.iter().map(|&v| tape.value(v).clone()).collect::<Vec<_>>();
        Self {
            cae: grab(&graph.cae),
            gae: grab(&graph.gae),
            fused: grab(&graph.fused),
            attention: graph.attention.iter().map(|a| grab(a)).collect(),
            adjacency: tape.value(graph.adjacency).clone(),
            middle: graph.middle,
        }
    }

    pub fn reconstruction(&self) -> &DenseMatrix<T> {
        self.cae.last().expect("at least one layer")
    }

    pub fn gae_output(&self) -> &DenseMatrix<T> {
        self.gae.last().expect("at least one layer")
    }

    pub fn cae_middle(&self) -> &DenseMatrix<T> {
        &self.cae[self.middle - 1]
    }

    pub fn gae_middle(&self) -> &DenseMatrix<T> {
        &self.gae[self.middle - 1]
    }
}

/// Evaluates the model without keeping the tape.
pub fn evaluate<T: Scalar>(
    x: &DenseMatrix<T>,
    filter: &GraphFilter<T>,
    params: &ModelParams<T>,
    spec: &ArchitectureSpec,
    ablation: Ablation,
) -> Result<ForwardOutputs<T>> {
    params.validate(spec)?;
    let mut tape = Tape::new();
    let xv = tape.constant_ref(x);
    let pv = params.register(&mut tape);
    let graph = forward(&mut tape, xv, filter, &pv, spec, ablation)?;
    Ok(ForwardOutputs::collect(&tape, &graph))
}

/// Content auto-encoder activations `H_1..H_L` without the graph branch.
pub fn evaluate_cae<T: Scalar>(
    x: &DenseMatrix<T>,
    params: &ModelParams<T>,
    spec: &ArchitectureSpec,
) -> Result<Vec<DenseMatrix<T>>> {
    if x.cols() != spec.input_dim() {
        return Err(Error::dim("evaluate_cae", x.shape(), (x.rows(), spec.input_dim())));
    }
    let mut tape = Tape::new();
    let xv = tape.constant_ref(x);
    let (w, b) = params.register_cae(&mut tape);
    let hs = cae_forward(&mut tape, xv, &w, &b, spec)?;
    Ok(hs.iter().map(|&h| tape.value(h).clone()).collect())
}
