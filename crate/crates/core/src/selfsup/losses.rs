use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Tape, Var};
use crate::model::{Ablation, ForwardGraph, ForwardOutputs};
use crate::scalar::Scalar;
use crate::selfsup::kl_divergence;

/// The five objective terms and their ablation-dependent total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBreakdown<T> {
    /// `½‖X − X̂‖²_F`
    pub cae_content: T,
    /// `‖A − Ã‖²_F`
    pub gae_graph: T,
    /// `‖X − Z_L‖²_F`
    pub gae_content: T,
    /// `KL(P ‖ T)`
    pub cae_kl: T,
    /// `KL(P ‖ Z)`
    pub gae_kl: T,
    pub total: T,
}

impl<T: Scalar> LossBreakdown<T> {
    /// Assembles the breakdown; the total follows the ablation's objective.
    pub fn from_terms(
        cae_content: T,
        gae_graph: T,
        gae_content: T,
        cae_kl: T,
        gae_kl: T,
        ablation: Ablation,
    ) -> Self {
        let mut total = cae_content;
        if ablation != Ablation::NoGraphLoss {
            total += gae_graph;
        }
        if ablation != Ablation::NoContentLoss {
            total += gae_content;
        }
        total += cae_kl + gae_kl;
        Self {
            cae_content,
            gae_graph,
            gae_content,
            cae_kl,
            gae_kl,
            total,
        }
    }

    /// Tape-free evaluation from materialized forward outputs.
    ///
    /// `t`, `p` and `zdist` are the Student-t assignment, the target and the
    /// graph-branch softmax assignment; `adjacency` is the dense input graph.
    pub fn evaluate(
        x: &DenseMatrix<T>,
        outputs: &ForwardOutputs<T>,
        adjacency: &DenseMatrix<T>,
        t: &DenseMatrix<T>,
        p: &DenseMatrix<T>,
        zdist: &DenseMatrix<T>,
        ablation: Ablation,
    ) -> Result<Self> {
        let half = T::of(0.5);
        Ok(Self::from_terms(
            half * x.sub(outputs.reconstruction())?.sum_squares(),
            adjacency.sub(&outputs.adjacency)?.sum_squares(),
            x.sub(outputs.gae_output())?.sum_squares(),
            kl_divergence(p, t)?,
            kl_divergence(p, zdist)?,
            ablation,
        ))
    }

    pub fn terms(&self) -> [T; 5] {
        [
            self.cae_content,
            self.gae_graph,
            self.gae_content,
            self.cae_kl,
            self.gae_kl,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.terms().iter().all(|v| v.is_finite()) && self.total.is_finite()
    }
}

/// Tape handles of the loss terms.
#[derive(Debug, Clone, Copy)]
pub struct LossVars {
    pub cae_content: Var,
    pub gae_graph: Var,
    pub gae_content: Var,
    pub cae_kl: Var,
    pub gae_kl: Var,
    /// Student-t assignment of the content branch's clustering layer.
    pub soft_assign: Var,
    /// Row-softmax of the graph branch's clustering layer.
    pub gae_assign: Var,
    pub total: Var,
}

impl LossVars {
    pub fn breakdown<T: Scalar>(&self, tape: &Tape<'_, T>) -> LossBreakdown<T> {
        LossBreakdown {
            cae_content: tape.scalar(self.cae_content),
            gae_graph: tape.scalar(self.gae_graph),
            gae_content: tape.scalar(self.gae_content),
            cae_kl: tape.scalar(self.cae_kl),
            gae_kl: tape.scalar(self.gae_kl),
            total: tape.scalar(self.total),
        }
    }
}

/// Records all five terms and the ablation's total on the tape.
///
/// `target` is the (constant) sharpened distribution `P` and `centers` the
/// fixed cluster centers.
pub fn record_losses<T: Scalar>(
    tape: &mut Tape<'_, T>,
    x: Var,
    graph: &ForwardGraph,
    adjacency: Var,
    centers: &DenseMatrix<T>,
    target: &DenseMatrix<T>,
    ablation: Ablation,
) -> Result<LossVars> {
    let h_mid = graph.cae_middle();
    let z_mid = graph.gae_middle();
    if tape.value(z_mid).cols() != centers.rows() {
        return Err(Error::Contract(format!(
            "clustering layer width {} differs from {} centers",
            tape.value(z_mid).cols(),
            centers.rows()
        )));
    }

    let diff = tape.sub(x, graph.reconstruction())?;
    let sq = tape.sum_squares(diff)?;
    let cae_content = tape.scale(sq, T::of(0.5))?;

    let diff = tape.sub(adjacency, graph.adjacency)?;
    let gae_graph = tape.sum_squares(diff)?;

    let diff = tape.sub(x, graph.gae_output())?;
    let gae_content = tape.sum_squares(diff)?;

    let soft_assign = tape.student_t(h_mid, centers.clone())?;
    let cae_kl = tape.kl_divergence(target.clone(), soft_assign)?;
    let gae_assign = tape.row_softmax(z_mid)?;
    let gae_kl = tape.kl_divergence(target.clone(), gae_assign)?;

    let mut total = cae_content;
    if ablation != Ablation::NoGraphLoss {
        total = tape.add(total, gae_graph)?;
    }
    if ablation != Ablation::NoContentLoss {
        total = tape.add(total, gae_content)?;
    }
    let kl_sum = tape.add(cae_kl, gae_kl)?;
    total = tape.add(total, kl_sum)?;

    Ok(LossVars {
        cae_content,
        gae_graph,
        gae_content,
        cae_kl,
        gae_kl,
        soft_assign,
        gae_assign,
        total,
    })
}
