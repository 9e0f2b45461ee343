//! Training losses.
//!
//! * encoding loss: `Tr(Hᵀ(α L_G + (1-α) L_S) H) + β ‖HᵀH - I‖_F`
//! * clustering loss: `KL(P̂ ‖ Q)` with `P̂` held fixed
//! * total loss: encoding + γ · clustering
//!
//! The orthogonality term uses the plain (non-squared) Frobenius norm. Its
//! gradient `2 H M / ‖M‖` with `M = HᵀH - I` is singular where `M = 0`, so the
//! denominator is evaluated as `√(Σ m² + ε)`; the reported value is the
//! exact norm.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::clustering::soft_assign_backward;
use crate::error::{Error, Result};
use crate::graph::{attribute_quadratic, structure_quadratic, ImplicitAttributeLaplacian, StructureLaplacian};

/// Smoothing added under the square root of the orthogonality gradient.
pub const NORM_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let w = LossWeights { alpha, beta, gamma };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must lie in [0, 1], got {}", self.alpha),
            });
        }
        for (name, v) in [("beta", self.beta), ("gamma", self.gamma)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be non-negative, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Value of the encoding loss split into its weighted terms, plus `∂/∂H`.
#[derive(Debug, Clone)]
pub struct EncodingLoss {
    pub value: f64,
    pub structure_term: f64,
    pub attribute_term: f64,
    pub penalty_term: f64,
    pub grad: Array2<f64>,
}

/// `‖HᵀH - I‖_F` and its (ε-guarded) gradient.
pub fn orthogonality_penalty(h: &ArrayView2<f64>) -> (f64, Array2<f64>) {
    let mut m = h.t().dot(h);
    for i in 0..m.nrows() {
        m[[i, i]] -= 1.0;
    }
    let sq: f64 = m.iter().map(|v| v * v).sum();
    let grad = h.dot(&m) * (2.0 / (sq + NORM_EPSILON).sqrt());
    (sq.sqrt(), grad)
}

pub fn encoding_loss(
    h: &ArrayView2<f64>,
    structure: &StructureLaplacian,
    attribute: &ImplicitAttributeLaplacian,
    weights: &LossWeights,
) -> Result<EncodingLoss> {
    weights.validate()?;
    let n = structure.dim();
    if h.nrows() != n || attribute.dim() != n {
        return Err(Error::shape("encoding_loss rows", n, h.nrows()));
    }
    if h.nrows() < h.ncols() {
        log::warn!(
            "embedding dimension {} exceeds node count {}; HᵀH = I is unreachable",
            h.ncols(),
            h.nrows()
        );
    }
    let mut grad = Array2::<f64>::zeros(h.raw_dim());
    let mut structure_term = 0.0;
    let mut attribute_term = 0.0;
    if weights.alpha > 0.0 {
        let (v, g) = structure_quadratic(structure, h)?;
        structure_term = weights.alpha * v;
        grad.scaled_add(weights.alpha, &g);
    }
    if weights.alpha < 1.0 {
        let (v, g) = attribute_quadratic(attribute, h)?;
        attribute_term = (1.0 - weights.alpha) * v;
        grad.scaled_add(1.0 - weights.alpha, &g);
    }
    let mut penalty_term = 0.0;
    if weights.beta > 0.0 {
        let (v, g) = orthogonality_penalty(h);
        penalty_term = weights.beta * v;
        grad.scaled_add(weights.beta, &g);
    }
    Ok(EncodingLoss {
        value: structure_term + attribute_term + penalty_term,
        structure_term,
        attribute_term,
        penalty_term,
        grad,
    })
}

/// Encoding loss with both trace terms removed, leaving `β·‖HᵀH - I‖_F`.
pub fn penalty_only_loss(h: &ArrayView2<f64>, beta: f64) -> EncodingLoss {
    let (v, g) = orthogonality_penalty(h);
    EncodingLoss {
        value: beta * v,
        structure_term: 0.0,
        attribute_term: 0.0,
        penalty_term: beta * v,
        grad: g * beta,
    }
}

/// `KL(P̂ ‖ Q)` with `0·log 0 = 0`, and `∂/∂Q = -P̂ / Q`.
pub fn clustering_loss(p_hat: &ArrayView2<f64>, q: &ArrayView2<f64>) -> Result<(f64, Array2<f64>)> {
    if p_hat.dim() != q.dim() {
        return Err(Error::shape(
            "clustering_loss",
            format!("{:?}", q.dim()),
            format!("{:?}", p_hat.dim()),
        ));
    }
    let mut value = 0.0;
    let mut grad = Array2::<f64>::zeros(q.raw_dim());
    for ((idx, &p), &qv) in p_hat.indexed_iter().zip(q.iter()) {
        if p > 0.0 {
            if qv <= 0.0 {
                return Err(Error::InfiniteDivergence {
                    row: idx.0,
                    col: idx.1,
                });
            }
            value += p * (p / qv).ln();
            grad[idx] = -p / qv;
        }
    }
    Ok((value.max(0.0), grad))
}

#[derive(Debug, Clone)]
pub struct TotalLoss {
    pub value: f64,
    pub encoding: f64,
    pub clustering: f64,
    pub grad_h: Array2<f64>,
    pub grad_centroids: Array2<f64>,
}

/// Combines both losses and pulls the clustering gradient back through the
/// soft assignment into `H` and the centroids.
pub fn total_loss(
    h: &ArrayView2<f64>,
    centroids: &ArrayView2<f64>,
    theta: f64,
    encoding: &EncodingLoss,
    clustering: (f64, &Array2<f64>),
    weights: &LossWeights,
) -> Result<TotalLoss> {
    let (gc_value, grad_q) = clustering;
    let mut grad_h = encoding.grad.clone();
    let mut grad_centroids = Array2::zeros(centroids.raw_dim());
    if weights.gamma != 0.0 {
        let scaled = grad_q * weights.gamma;
        let (gh, gm) = soft_assign_backward(h, centroids, theta, &scaled.view())?;
        grad_h += &gh;
        grad_centroids = gm;
    }
    Ok(TotalLoss {
        value: encoding.value + weights.gamma * gc_value,
        encoding: encoding.value,
        clustering: gc_value,
        grad_h,
        grad_centroids,
    })
}
