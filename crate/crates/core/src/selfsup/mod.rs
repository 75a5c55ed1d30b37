//! Self-supervision: K-means center initialization, Student-t soft
//! assignments, the sharpened target distribution, the objective terms and
//! the final hard assignment.

mod assign;
mod kmeans;
mod losses;

pub use assign::{
    gae_soft_assign, hard_assign, kl_divergence, student_t_assign, target_distribution,
    SoftAssignment,
};
pub use kmeans::{kmeans, kmeans_restarts, ClusterCenters, KMeansResult};
pub use losses::{record_losses, LossBreakdown, LossVars};
