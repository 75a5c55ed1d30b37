#![allow(dead_code)]

use caegcn::graph::{normalize_filter, SparseGraph};
use caegcn::linalg::{DenseMatrix, OpKind, Tape, Var};
use caegcn::model::{forward, Ablation, ArchitectureSpec, ModelParams};
use caegcn::selfsup::{record_losses, student_t_assign, target_distribution, LossVars};
use caegcn::{Filter, Graph, Matrix, Params};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

/// Rows summing to one with entries bounded away from zero.
pub fn random_distribution(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut m = Matrix::from_fn(rows, cols, |_, _| rng.random_range(0.01..1.0));
    for i in 0..rows {
        let s: f64 = m.row(i).iter().sum();
        m.row_mut(i).iter_mut().for_each(|v| *v /= s);
    }
    m
}

pub fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    SparseGraph::from_edges(n, edges).unwrap()
}

pub fn random_labels(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

/// Three isotropic Gaussian blobs in `dim` dimensions whose means form an
/// equilateral triangle of side `spacing` in the first two coordinates.
/// Samples cycle through the blobs, so labels are `i % 3`.
pub fn three_blobs(n: usize, dim: usize, sigma: f64, spacing: f64, seed: u64) -> (Matrix, Vec<usize>) {
    assert!(dim >= 2);
    let mut rng = rng(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let means = [[0.0, 0.0], [spacing, 0.0], [spacing / 2.0, spacing * 3f64.sqrt() / 2.0]];
    let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let x = Matrix::from_fn(n, dim, |i, j| {
        let mean = if j < 2 { means[labels[i]][j] } else { 0.0 };
        mean + noise.sample(&mut rng)
    });
    (x, labels)
}

/// Dense `D̂^{-1/2}(A + I)D̂^{-1/2}` computed the long way.
pub fn dense_filter(a: &Matrix) -> Matrix {
    let n = a.rows();
    let hat = Matrix::from_fn(n, n, |i, j| a[(i, j)] + if i == j { 1.0 } else { 0.0 });
    let d: Vec<f64> = (0..n).map(|i| hat.row(i).iter().sum::<f64>().powf(-0.5)).collect();
    let left = Matrix::from_fn(n, n, |i, j| if i == j { d[i] } else { 0.0 });
    left.matmul(&hat).unwrap().matmul(&left).unwrap()
}

/// A small random instance of the full model with fixed centers and target.
pub struct Instance {
    pub spec: ArchitectureSpec,
    pub x: Matrix,
    pub adjacency: Matrix,
    pub filter: Filter,
    pub params: Params,
    pub target: Matrix,
}

impl Instance {
    pub fn random(n: usize, d: usize, dims: Vec<usize>, heads: usize, seed: u64) -> Self {
        let mut r = rng(seed);
        let clusters = dims[dims.len() / 2];
        let spec = ArchitectureSpec::new(dims, heads, 0.5, clusters).unwrap();
        assert_eq!(spec.input_dim(), d);
        let x = random_matrix(n, d, 1.0, &mut r);
        let graph = random_graph(n, 0.4, &mut r);
        let filter = normalize_filter(&graph).unwrap();
        let mut params = ModelParams::xavier(&spec, seed).unwrap();
        // nonzero biases so every bias path is exercised
        for b in &mut params.cae_biases {
            *b = random_matrix(1, b.cols(), 0.1, &mut r);
        }
        params.centers = Some(random_matrix(clusters, clusters, 1.0, &mut r));
        let h_mid = caegcn::model::evaluate_cae(&x, &params, &spec).unwrap()[spec.middle() - 1].clone();
        let t = student_t_assign(&h_mid, params.centers.as_ref().unwrap()).unwrap();
        let target = target_distribution(t.matrix()).unwrap().into_matrix();
        Self {
            spec,
            adjacency: graph.to_dense(),
            x,
            filter,
            params,
            target,
        }
    }

    /// Records the full objective for `params` on `tape`.
    pub fn record<'g>(&'g self, tape: &mut Tape<'g, f64>, params: &'g Params, ablation: Ablation) -> (LossVars, Vec<Var>) {
        let xv = tape.constant_ref(&self.x);
        let av = tape.constant_ref(&self.adjacency);
        let pv = params.register(tape);
        let graph = forward(tape, xv, &self.filter, &pv, &self.spec, ablation).unwrap();
        let centers = params.centers.as_ref().unwrap();
        let losses = record_losses(tape, xv, &graph, av, centers, &self.target, ablation).unwrap();
        (losses, pv.all())
    }
}

/// Sign pattern of every ReLU input on the tape.
pub fn relu_pattern(tape: &Tape<'_, f64>) -> Vec<bool> {
    tape.vars()
        .filter(|&v| tape.op_kind(v) == OpKind::Relu)
        .flat_map(|v| {
            let p = tape.parents(v)[0];
            tape.value(p).as_slice().iter().map(|&x| x > 0.0).collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Debug, Default, Clone, Copy)]
pub struct FdReport {
    pub max_rel: f64,
    pub checked: usize,
    /// Coordinates whose ±h probe crosses a ReLU kink.
    pub skipped: usize,
}

impl FdReport {
    pub fn merge(&mut self, o: FdReport) {
        self.max_rel = self.max_rel.max(o.max_rel);
        self.checked += o.checked;
        self.skipped += o.skipped;
    }
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Fourth-order central difference
/// `(−f(θ+2h) + 8f(θ+h) − 8f(θ−h) + f(θ−2h)) / 12h`, or `None` when a probe
/// crosses a ReLU kink (sign pattern differs from `base`).
pub fn central_difference(
    mut eval: impl FnMut(f64) -> (f64, Vec<bool>),
    orig: f64,
    h: f64,
    base: &[bool],
) -> Option<f64> {
    let mut f = [0.0; 4];
    for (slot, step) in f.iter_mut().zip([2.0, 1.0, -1.0, -2.0]) {
        let (value, pattern) = eval(orig + step * h);
        if pattern != base {
            return None;
        }
        *slot = value;
    }
    Some((-f[0] + 8.0 * f[1] - 8.0 * f[2] + f[3]) / (12.0 * h))
}

/// Central differences over every scalar of every tensor of `params`,
/// compared against the tape gradient of the total loss.
pub fn check_model(inst: &Instance, ablation: Ablation, h: f64, floor: f64) -> FdReport {
    let (analytic, base) = {
        let mut tape = Tape::new();
        let (losses, vars) = inst.record(&mut tape, &inst.params, ablation);
        tape.backward(losses.total).unwrap();
        (
            vars.iter().map(|&v| tape.grad(v)).collect::<Vec<_>>(),
            relu_pattern(&tape),
        )
    };
    let mut report = FdReport::default();
    let mut p = inst.params.clone();
    for (t, g) in analytic.iter().enumerate() {
        for k in 0..g.len() {
            let orig = p.tensors()[t].as_slice()[k];
            let numeric = central_difference(
                |v| {
                    p.tensors_mut()[t].as_mut_slice()[k] = v;
                    let mut tape = Tape::new();
                    let (losses, _) = inst.record(&mut tape, &p, ablation);
                    (tape.scalar(losses.total), relu_pattern(&tape))
                },
                orig,
                h,
                &base,
            );
            p.tensors_mut()[t].as_mut_slice()[k] = orig;
            match numeric {
                Some(n) => {
                    report.max_rel = report.max_rel.max(relative_error(g.as_slice()[k], n, floor));
                    report.checked += 1;
                }
                None => report.skipped += 1,
            }
        }
    }
    report
}

/// Central-difference check of a single recorded operation. The output is
/// reduced to a scalar by `uᵀ · out · v` with fixed random `u`, `v`.
pub fn check_op<'a, F>(inputs: &[Matrix], seed: u64, h: f64, floor: f64, build: F) -> FdReport
where
    F: Fn(&mut Tape<'a, f64>, &[Var]) -> Var,
{
    let mut r = rng(seed);
    let probe = {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|m| tape.parameter(m.clone())).collect();
        let out = build(&mut tape, &vars);
        tape.value(out).shape()
    };
    let u = random_matrix(1, probe.0, 1.0, &mut r);
    let v = random_matrix(probe.1, 1, 1.0, &mut r);
    let run = |ins: &[Matrix], grads: bool| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = ins.iter().map(|m| tape.parameter(m.clone())).collect();
        let out = build(&mut tape, &vars);
        let uv = tape.constant(u.clone());
        let vv = tape.constant(v.clone());
        let left = tape.matmul(uv, out).unwrap();
        let loss = tape.matmul(left, vv).unwrap();
        let value = tape.scalar(loss);
        let pattern = relu_pattern(&tape);
        let g = if grads {
            tape.backward(loss).unwrap();
            vars.iter().map(|&x| tape.grad(x)).collect()
        } else {
            Vec::new()
        };
        (value, pattern, g)
    };
    let (_, base, analytic) = run(inputs, true);
    let mut report = FdReport::default();
    let mut ins = inputs.to_vec();
    for (t, g) in analytic.iter().enumerate() {
        for k in 0..g.len() {
            let orig = ins[t].as_slice()[k];
            let numeric = central_difference(
                |v| {
                    ins[t].as_mut_slice()[k] = v;
                    let (value, pattern, _) = run(&ins, false);
                    (value, pattern)
                },
                orig,
                h,
                &base,
            );
            ins[t].as_mut_slice()[k] = orig;
            match numeric {
                Some(n) => {
                    report.max_rel = report.max_rel.max(relative_error(g.as_slice()[k], n, floor));
                    report.checked += 1;
                }
                None => report.skipped += 1,
            }
        }
    }
    report
}

/// Largest fraction correct over all bijections of predicted ids onto true
/// ids (both relabeled to `0..k`), by exhaustive enumeration.
pub fn brute_force_accuracy(y_true: &[usize], y_pred: &[usize]) -> f64 {
    let compact = |y: &[usize]| {
        let mut ids = y.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let mapped: Vec<usize> = y.iter().map(|v| ids.binary_search(v).unwrap()).collect();
        (mapped, ids.len())
    };
    let (t, kt) = compact(y_true);
    let (p, kp) = compact(y_pred);
    let k = kt.max(kp);
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0usize;
    permute(&mut perm, 0, &mut |perm| {
        let hits = t.iter().zip(&p).filter(|(a, b)| perm[**b] == **a).count();
        best = best.max(hits);
    });
    best as f64 / y_true.len() as f64
}

fn permute(v: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize])) {
    if start == v.len() {
        f(v);
        return;
    }
    for i in start..v.len() {
        v.swap(start, i);
        permute(v, start + 1, f);
        v.swap(start, i);
    }
}

pub fn assert_close(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>, tol: f64) {
    assert_eq!(a.shape(), b.shape());
    let d = a.max_abs_diff(b).unwrap();
    assert!(d <= tol, "max abs diff {d} > {tol}");
}
