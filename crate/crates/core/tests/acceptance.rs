//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fail.

mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use caegcn::experiment::{export_results, train, train_on, Dataset, ExperimentConfig, ASSIGNMENTS_FILE};
use caegcn::graph::normalize_filter;
use caegcn::linalg::Tape;
use caegcn::metrics::{accuracy, ClusteringScores};
use caegcn::model::{evaluate, Ablation};
use caegcn::selfsup::{gae_soft_assign, kl_divergence, student_t_assign, target_distribution};
use caegcn::Matrix;
use common::*;
use rand::Rng;

const GRAD_INSTANCES: u64 = 20;
const GRAD_TOL: f64 = 1e-4;
const GRAD_BUDGET: Duration = Duration::from_secs(60);
const FD_STEP: f64 = 1e-3;
const FD_FLOOR: f64 = 1e-6;
const ROW_SUM_TOL: f64 = 1e-9;
const KL_LOWER: f64 = -1e-12;
const KL_SELF_TOL: f64 = 1e-9;
const FILTER_TOL: f64 = 1e-14;
const EIGEN_SLACK: f64 = 1e-9;
const ALGEBRA_TOL: f64 = 1e-10;
const BLOB_ACC: f64 = 0.95;
const BLOB_NMI: f64 = 0.85;
const BLOB_BUDGET: Duration = Duration::from_secs(300);
const STRETCH_ACC: f64 = 0.85;

/// Criteria that cannot hold for the specified objective. They still run and
/// print FAIL, but do not set the exit status. Frequency normalization in P
/// divides each column by its total mass, which can move a row's maximum to
/// a lighter column, so argmax preservation is false for general T.
const KNOWN_FAILURES: &[&str] = &["target sharpening"];

type Outcome = Result<String, String>;

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = FdReport::default();
    let mut r = rng(2024);
    for i in 0..GRAD_INSTANCES {
        let n = r.random_range(4..=10);
        let d = r.random_range(3..=8);
        let dims = vec![d, r.random_range(3..=6), r.random_range(3..=5), 2, r.random_range(3..=5), r.random_range(3..=6), d];
        let inst = Instance::random(n, d, dims, 2, 1000 + i);
        let rep = check_model(&inst, Ablation::Full, FD_STEP, FD_FLOOR);
        if rep.checked == 0 {
            return Err(format!("instance {i}: every coordinate sat on a kink"));
        }
        worst.merge(rep);
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "{GRAD_INSTANCES} instances, max rel err {:.2e} over {} coords ({} skipped at kinks), {:.1}s",
        worst.max_rel,
        worst.checked,
        worst.skipped,
        elapsed.as_secs_f64()
    );
    if worst.max_rel < GRAD_TOL && elapsed < GRAD_BUDGET {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_row_error(m: &Matrix) -> f64 {
    m.row_iter().map(|row| (row.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
}

fn distribution_invariants() -> Outcome {
    let mut r = rng(7);
    let (mut worst_row, mut min_kl, mut worst_self) = (0.0f64, f64::INFINITY, 0.0f64);
    for i in 0..1000u64 {
        let n = r.random_range(2..=8);
        let c = r.random_range(2..=4);
        let d = r.random_range(2..=5);
        let dims = vec![d, 4, c, 4, d];
        let inst = Instance::random(n, d, dims.clone(), 2, 50_000 + i);
        let out = evaluate(&inst.x, &inst.filter, &inst.params, &inst.spec, Ablation::Full).unwrap();
        let mut rows = Vec::new();
        for layer in &out.attention {
            rows.extend(layer.iter().map(max_row_error));
        }
        let t = student_t_assign(out.cae_middle(), inst.params.centers.as_ref().unwrap()).unwrap();
        let p = target_distribution(t.matrix()).unwrap();
        let z = gae_soft_assign(out.gae_middle(), c).unwrap();
        rows.extend([t.matrix(), p.matrix(), z.matrix()].map(max_row_error));
        worst_row = rows.into_iter().fold(worst_row, f64::max);
        min_kl = min_kl
            .min(kl_divergence(p.matrix(), t.matrix()).unwrap())
            .min(kl_divergence(p.matrix(), z.matrix()).unwrap());
        worst_self = worst_self.max(kl_divergence(p.matrix(), p.matrix()).unwrap().abs());
    }
    let detail = format!(
        "1000 inputs, max |row sum - 1| {worst_row:.1e}, min KL {min_kl:.1e}, max |KL(P,P)| {worst_self:.1e}"
    );
    if worst_row <= ROW_SUM_TOL && min_kl >= KL_LOWER && worst_self < KL_SELF_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn filter_oracle() -> Outcome {
    let mut r = rng(11);
    let (mut worst, mut lo, mut hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..100 {
        let n = r.random_range(1..=50);
        let p = r.random_range(0.0..0.6);
        let g = random_graph(n, p, &mut r);
        let sparse = normalize_filter(&g).unwrap().to_dense();
        let dense = dense_filter(&g.to_dense());
        worst = worst.max(sparse.max_abs_diff(&dense).unwrap());
        if n <= 20 {
            let m = nalgebra::DMatrix::from_fn(n, n, |i, j| sparse[(i, j)]);
            for e in m.symmetric_eigen().eigenvalues.iter() {
                lo = lo.min(*e);
                hi = hi.max(*e);
            }
        }
    }
    let detail = format!("100 graphs, max entry diff {worst:.1e}, eigenvalues in [{lo:.6}, {hi:.6}]");
    if worst <= FILTER_TOL && lo >= -1.0 - EIGEN_SLACK && hi <= 1.0 + EIGEN_SLACK {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn accuracy_oracle() -> Outcome {
    let mut r = rng(13);
    for i in 0..500 {
        let c = r.random_range(1..=6);
        let n = r.random_range(1..=40);
        let t = random_labels(n, c, &mut r);
        let p = random_labels(n, c, &mut r);
        let fast = accuracy(&t, &p).unwrap();
        let slow = brute_force_accuracy(&t, &p);
        if fast != slow {
            return Err(format!("pair {i}: hungarian {fast} vs brute force {slow}"));
        }
    }
    Ok("500 pairs with C <= 6 agree exactly".into())
}

/// Rows are drawn in batches of `SHARPEN_BATCH` so the column frequencies
/// that P divides by come from a realistic assignment matrix.
fn sharpening() -> Outcome {
    const SHARPEN_BATCH: usize = 100;
    let mut r = rng(17);
    let (mut checked, mut moved, mut softened) = (0usize, 0usize, 0usize);
    let mut example = None;
    while checked < 10_000 {
        let c = r.random_range(2..=8);
        let t = random_distribution(SHARPEN_BATCH, c, &mut r);
        let p = target_distribution(&t).unwrap();
        for (trow, prow) in t.row_iter().zip(p.matrix().row_iter()) {
            let top = trow.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if checked == 10_000 || trow.iter().filter(|&&v| v == top).count() != 1 {
                continue;
            }
            checked += 1;
            let arg = trow.iter().position(|&v| v == top).unwrap();
            let pmax = prow.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let parg = prow.iter().position(|&v| v == pmax).unwrap();
            if parg != arg {
                moved += 1;
            }
            if pmax < top {
                softened += 1;
            }
            if (parg != arg || pmax < top) && example.is_none() {
                example = Some(format!("T {trow:.4?} -> P {prow:.4?}"));
            }
        }
    }
    let detail = format!("{checked} rows, argmax moved in {moved}, P_max < T_max in {softened}");
    match example {
        None => Ok(detail),
        Some(e) => Err(format!("{detail}; first: {e}")),
    }
}

fn blob_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::new("three-blobs");
    c.dims = Some(vec![16, 64, 16, 3, 16, 64, 16]);
    c.seed = 1;
    c
}

fn blob_data() -> Dataset<f64> {
    let (x, labels) = three_blobs(300, 16, 0.1, 10.0, 3);
    Dataset::new(x).with_labels(labels).unwrap()
}

fn synthetic_blobs() -> Outcome {
    let data = blob_data();
    let config = blob_config();
    let start = Instant::now();
    let report = train_on(&data, &config).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let s: ClusteringScores = report.scores.expect("labels supplied");
    let mut detail = format!(
        "full: acc {:.4} nmi {:.4} in {:.1}s",
        s.acc,
        s.nmi,
        elapsed.as_secs_f64()
    );
    let mut ok = s.acc >= BLOB_ACC && s.nmi >= BLOB_NMI && elapsed <= BLOB_BUDGET;
    for ablation in Ablation::ALL.into_iter().filter(|a| *a != Ablation::Full) {
        let mut c = config.clone();
        c.ablation = ablation;
        match train_on(&data, &c) {
            Ok(r) => {
                let finite = r.losses.iter().all(|l| l.is_finite()) && r.pretrain_losses.iter().all(|l| l.is_finite());
                let s = r.scores.expect("labels supplied");
                detail.push_str(&format!("; {ablation}: acc {:.4}{}", s.acc, if finite { "" } else { " NON-FINITE" }));
                ok &= finite;
            }
            Err(e) => {
                detail.push_str(&format!("; {ablation}: {e}"));
                ok = false;
            }
        }
    }
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ablation_algebra() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let inst = Instance::random(8, 5, vec![5, 6, 4, 3, 4, 6, 5], 2, 300 + i);
        let eval = |ablation| {
            let mut tape = Tape::new();
            let (losses, _) = inst.record(&mut tape, &inst.params, ablation);
            losses.breakdown(&tape)
        };
        let full = eval(Ablation::Full);
        let no_graph = eval(Ablation::NoGraphLoss);
        let no_content = eval(Ablation::NoContentLoss);
        worst = worst
            .max((full.total - no_graph.total - full.gae_graph).abs())
            .max((full.total - no_content.total - full.gae_content).abs());
    }
    let detail = format!("20 instances, max residual {worst:.1e}");
    if worst <= ALGEBRA_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (x, labels) = three_blobs(60, 6, 0.1, 10.0, 5);
    let features = dir.path().join("x.csv");
    let label_file = dir.path().join("y.txt");
    let rows: Vec<String> = x
        .row_iter()
        .map(|r| r.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(","))
        .collect();
    std::fs::write(&features, rows.join("\n")).map_err(|e| e.to_string())?;
    let ls: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
    std::fs::write(&label_file, ls.join("\n")).map_err(|e| e.to_string())?;
    let mut config = ExperimentConfig::new(&features);
    config.labels = Some(label_file);
    config.dims = Some(vec![6, 32, 8, 3, 8, 32, 6]);
    config.heads = 2;
    config.pretrain_epochs = 10;
    config.epochs = 10;
    config.seed = 42;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}"));
        let report = train::<f64>(&config).map_err(|e| e.to_string())?;
        export_results(&report, &out).map_err(|e| e.to_string())?;
        outputs.push(std::fs::read(out.join(ASSIGNMENTS_FILE)).map_err(|e| e.to_string())?);
    }
    if outputs[0] == outputs[1] {
        Ok(format!("{} identical bytes", outputs[0].len()))
    } else {
        Err("assignments differ between runs".into())
    }
}

/// Runs only when `CAEGCN_ACM_DIR` holds `features.csv`, `graph.txt` and
/// `labels.txt`.
fn acm_stretch() -> Option<Outcome> {
    let dir = PathBuf::from(std::env::var_os("CAEGCN_ACM_DIR")?);
    let mut c = ExperimentConfig::new(dir.join("features.csv"));
    c.graph = Some(dir.join("graph.txt"));
    c.labels = Some(dir.join("labels.txt"));
    Some(match train::<f64>(&c) {
        Ok(r) => {
            let s = r.scores.expect("labels supplied");
            let detail = format!("acc {:.4} nmi {:.4}", s.acc, s.nmi);
            if s.acc >= STRETCH_ACC {
                Ok(detail)
            } else {
                Err(detail)
            }
        }
        Err(e) => Err(e.to_string()),
    })
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 8] = [
        ("gradient oracle", gradient_oracle),
        ("distribution invariants", distribution_invariants),
        ("filter oracle", filter_oracle),
        ("accuracy oracle", accuracy_oracle),
        ("target sharpening", sharpening),
        ("synthetic three blobs", synthetic_blobs),
        ("ablation algebra", ablation_algebra),
        ("determinism", determinism),
    ];
    let only = std::env::args().nth(1).filter(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, check) in checks {
        if only.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        match check() {
            Ok(d) => println!("PASS {name}: {d}"),
            Err(d) if KNOWN_FAILURES.contains(&name) => {
                println!("FAIL {name} (known, does not fail the run): {d}")
            }
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
        }
    }
    match acm_stretch() {
        Some(Ok(d)) => println!("PASS ACM stretch: {d}"),
        Some(Err(d)) => println!("FAIL ACM stretch (optional): {d}"),
        None => println!("SKIP ACM stretch (optional): CAEGCN_ACM_DIR not set"),
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
