use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::experiment::RunReport;
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

pub const METRICS_FILE: &str = "metrics.json";
pub const ASSIGNMENTS_FILE: &str = "assignments.csv";
pub const CAE_EMBEDDINGS_FILE: &str = "embeddings_cae.csv";
pub const GAE_EMBEDDINGS_FILE: &str = "embeddings_gae.csv";
pub const LOSSES_FILE: &str = "losses.csv";
pub const LOSSES_HEADER: &str = "epoch,l_cae_content,l_gae_graph,l_gae_content,l_cae_kl,l_gae_kl,total";

/// Flat metrics object. Scores appear only when labels were supplied.
pub fn metrics_json<T: Scalar>(report: &RunReport<T>) -> Value {
    let mut m = Map::new();
    if let Some(s) = &report.scores {
        m.insert("acc".into(), json!(s.acc));
        m.insert("nmi".into(), json!(s.nmi));
        m.insert("ari".into(), json!(s.ari));
        m.insert("f1".into(), json!(s.f1));
    }
    let c = &report.config;
    m.insert("ablation".into(), json!(c.ablation.as_str()));
    m.insert("seed".into(), json!(c.seed));
    m.insert("samples".into(), json!(report.labels.len()));
    m.insert("clusters".into(), json!(report.spec.clusters()));
    m.insert("pretrain_epochs".into(), json!(report.pretrain_losses.len()));
    m.insert("epochs".into(), json!(report.losses.len()));
    if let Some(last) = report.losses.last() {
        m.insert("final_loss".into(), json!(last.total.to_f64_lossy()));
    }
    m.insert("wall_clock_secs".into(), json!(report.wall_clock_secs));
    Value::Object(m)
}

pub fn assignments_csv(labels: &[usize]) -> String {
    let mut s = String::from("index,label\n");
    for (i, l) in labels.iter().enumerate() {
        let _ = writeln!(s, "{i},{l}");
    }
    s
}

pub fn embeddings_csv<T: Scalar>(m: &DenseMatrix<T>) -> String {
    let mut s = String::from("index");
    for c in 0..m.cols() {
        let _ = write!(s, ",d{c}");
    }
    s.push('\n');
    for (i, row) in m.row_iter().enumerate() {
        let _ = write!(s, "{i}");
        for v in row {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

pub fn losses_csv<T: Scalar>(report: &RunReport<T>) -> String {
    let mut s = format!("{LOSSES_HEADER}\n");
    for (e, l) in report.losses.iter().enumerate() {
        let _ = write!(s, "{e}");
        for v in l.terms() {
            let _ = write!(s, ",{v}");
        }
        let _ = writeln!(s, ",{}", l.total);
    }
    s
}

/// Writes the five result files into `outdir`, creating it if needed.
/// Returns the written paths.
pub fn export_results<T: Scalar>(report: &RunReport<T>, outdir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = outdir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut metrics = serde_json::to_string_pretty(&metrics_json(report))
        .map_err(|e| Error::Contract(format!("metrics serialization: {e}")))?;
    metrics.push('\n');
    let files = [
        (METRICS_FILE, metrics),
        (ASSIGNMENTS_FILE, assignments_csv(&report.labels)),
        (CAE_EMBEDDINGS_FILE, embeddings_csv(&report.cae_embedding)),
        (GAE_EMBEDDINGS_FILE, embeddings_csv(&report.gae_embedding)),
        (LOSSES_FILE, losses_csv(report)),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignments_layout() {
        assert_eq!(assignments_csv(&[2, 0]), "index,label\n0,2\n1,0\n");
    }

    #[test]
    fn embeddings_layout() {
        let m = DenseMatrix::<f64>::from_f64_rows(&[[0.5, -1.0]]).unwrap();
        assert_eq!(embeddings_csv(&m), "index,d0,d1\n0,0.5,-1\n");
    }
}
