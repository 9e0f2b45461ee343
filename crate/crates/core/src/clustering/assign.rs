use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "theta",
            reason: format!("must be positive, got {theta}"),
        });
    }
    Ok(())
}

fn squared_distances(h: &ArrayView2<f64>, centroids: &ArrayView2<f64>) -> Result<Array2<f64>> {
    if h.ncols() != centroids.ncols() {
        return Err(Error::shape("centroid dimension", h.ncols(), centroids.ncols()));
    }
    let mut d = Array2::<f64>::zeros((h.nrows(), centroids.nrows()));
    for (i, hi) in h.outer_iter().enumerate() {
        for (j, mu) in centroids.outer_iter().enumerate() {
            d[[i, j]] = hi.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum();
        }
    }
    Ok(d)
}

fn assignment_from_distances(d: &Array2<f64>, theta: f64) -> Array2<f64> {
    let exponent = -(1.0 + theta) / 2.0;
    let mut q = d.mapv(|dist| exponent * (dist / theta).ln_1p());
    for mut row in q.outer_iter_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let total = row.sum();
        row.mapv_inplace(|v| (v / total).max(f64::MIN_POSITIVE));
    }
    q
}

/// Student's-t soft assignment:
/// `q_ij ∝ (1 + ‖h_i - μ_j‖² / θ)^{-(1+θ)/2}`, normalized per row.
pub fn soft_assign(h: &ArrayView2<f64>, centroids: &ArrayView2<f64>, theta: f64) -> Result<Array2<f64>> {
    check_theta(theta)?;
    let d = squared_distances(h, centroids)?;
    Ok(assignment_from_distances(&d, theta))
}

/// Pulls `∂L/∂Q` back to `∂L/∂H` and `∂L/∂μ`.
///
/// With `g = ∂L/∂Q`, the gradient w.r.t. the log-kernel is
/// `a_ij = q_ij (g_ij - Σ_j' g_ij' q_ij')`, and
/// `∂ log k_ij / ∂h_i = -(1+θ)(h_i - μ_j) / (θ + d_ij)`.
pub fn soft_assign_backward(
    h: &ArrayView2<f64>,
    centroids: &ArrayView2<f64>,
    theta: f64,
    d_q: &ArrayView2<f64>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_theta(theta)?;
    let d = squared_distances(h, centroids)?;
    if d_q.dim() != d.dim() {
        return Err(Error::shape(
            "assignment cotangent",
            format!("{:?}", d.dim()),
            format!("{:?}", d_q.dim()),
        ));
    }
    let q = assignment_from_distances(&d, theta);
    let inner = (&q * d_q).sum_axis(Axis(1));
    let mut c = d_q - &inner.insert_axis(Axis(1));
    c *= &q;
    c.zip_mut_with(&d, |v, &dist| *v *= -(1.0 + theta) / (theta + dist));

    let row_weight = c.sum_axis(Axis(1)).insert_axis(Axis(1));
    let grad_h = h * &row_weight - c.dot(centroids);
    let col_weight = c.sum_axis(Axis(0)).insert_axis(Axis(1));
    let grad_centroids = centroids * &col_weight - c.t().dot(h);
    Ok((grad_h, grad_centroids))
}

/// Row-wise argmax, ties resolved toward the lower cluster index.
pub fn hard_assign(q: &ArrayView2<f64>) -> Vec<usize> {
    q.outer_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Cluster proportions from hard assignments with every entry kept at or
/// above `floor`.
///
/// Clusters whose empirical share falls below the floor are pinned to it;
/// the remaining mass is shared among the others in proportion to their
/// counts, repeating until no share is below the floor. Floors above `1/K`
/// are clamped to `1/K`.
pub fn estimate_proportions(assignments: &[usize], k: usize, floor: f64) -> Array1<f64> {
    assert!(k > 0, "need at least one cluster");
    let floor = floor.clamp(0.0, 1.0 / k as f64);
    let mut counts = vec![0.0; k];
    for &a in assignments {
        counts[a] += 1.0;
    }
    let n = assignments.len() as f64;
    if n == 0.0 {
        return Array1::from_elem(k, 1.0 / k as f64);
    }
    let empirical: Vec<f64> = counts.iter().map(|c| c / n).collect();
    let mut pinned: Vec<bool> = empirical.iter().map(|&p| p < floor).collect();
    loop {
        let free_mass: f64 = empirical
            .iter()
            .zip(&pinned)
            .filter(|(_, &p)| !p)
            .map(|(e, _)| e)
            .sum();
        let n_pinned = pinned.iter().filter(|&&p| p).count();
        let remaining = 1.0 - n_pinned as f64 * floor;
        if free_mass <= 0.0 {
            return Array1::from_elem(k, 1.0 / k as f64);
        }
        let pi: Array1<f64> = empirical
            .iter()
            .zip(&pinned)
            .map(|(&e, &p)| if p { floor } else { e / free_mass * remaining })
            .collect();
        let mut changed = false;
        for j in 0..k {
            if !pinned[j] && pi[j] < floor {
                pinned[j] = true;
                changed = true;
            }
        }
        if !changed {
            return pi;
        }
    }
}

/// Sharpened target `p_ij ∝ q_ij² / f_j` with `f_j = Σ_i q_ij`.
pub fn sdcn_target(q: &ArrayView2<f64>) -> Array2<f64> {
    let freq = q.sum_axis(Axis(0));
    let mut p = q.mapv(|v| v * v) / &freq.insert_axis(Axis(0));
    for mut row in p.outer_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    p
}
