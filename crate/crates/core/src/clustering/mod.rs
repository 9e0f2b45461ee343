//! Cluster assignment machinery: K-means initialization, Student's-t soft
//! assignment and its gradient, proportion estimates, and the two
//! self-supervision targets (optimal transport and the sharpened
//! frequency-normalized target used for ablation).

mod assign;
mod kmeans;
mod sinkhorn;

use ndarray::{Array1, Array2};

pub use assign::{estimate_proportions, hard_assign, sdcn_target, soft_assign, soft_assign_backward};
pub use kmeans::{kmeans, KMeansResult, DEFAULT_RESTARTS, MAX_LLOYD_ITERATIONS};
pub use sinkhorn::{marginal_residual, sinkhorn_log_kernel, sinkhorn_target, SinkhornConfig, TransportPlan};

/// Snapshot of the clustering head after an epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    pub centroids: Array2<f64>,
    pub q: Array2<f64>,
    pub p_hat: Array2<f64>,
    pub proportions: Array1<f64>,
    pub dof: f64,
}

/// Default proportion floor `1/(10K)`.
pub fn default_proportion_floor(k: usize) -> f64 {
    1.0 / (10.0 * k as f64)
}
