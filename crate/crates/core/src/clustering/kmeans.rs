use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_RESTARTS: usize = 10;
pub const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Array2<f64>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_history: Vec<f64>,
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-restart seed derived from the master seed.
fn restart_seed(seed: u64, restart: usize) -> u64 {
    seed ^ (restart as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Lloyd's algorithm with k-means++ seeding; the best of `restarts` runs by
/// within-cluster sum of squares wins (earliest restart on ties).
pub fn kmeans(h: &ArrayView2<f64>, k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    let n = h.nrows();
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "must be positive".into(),
        });
    }
    if k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    let mut best: Option<KMeansResult> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(seed, r));
        let run = lloyd(h, plus_plus_init(h, k, &mut rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

fn plus_plus_init<R: Rng>(h: &ArrayView2<f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let n = h.nrows();
    let mut centroids = Array2::<f64>::zeros((k, h.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&h.row(first));
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(h.row(i), h.row(first))).collect();
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in closest.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            // rounding can walk off the end onto an already-chosen point
            if closest[chosen] == 0.0 {
                chosen = (0..n).rev().find(|&i| closest[i] > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&h.row(pick));
        for (i, d) in closest.iter_mut().enumerate() {
            *d = d.min(sq_dist(h.row(i), h.row(pick)));
        }
    }
    centroids
}

fn assign(h: &ArrayView2<f64>, centroids: &Array2<f64>, labels: &mut [usize], dists: &mut [f64]) -> f64 {
    let mut inertia = 0.0;
    for (i, hi) in h.outer_iter().enumerate() {
        let mut best = (0, f64::INFINITY);
        for (j, c) in centroids.outer_iter().enumerate() {
            let d = sq_dist(hi, c);
            if d < best.1 {
                best = (j, d);
            }
        }
        labels[i] = best.0;
        dists[i] = best.1;
        inertia += best.1;
    }
    inertia
}

fn lloyd(h: &ArrayView2<f64>, mut centroids: Array2<f64>) -> KMeansResult {
    let (n, dim) = h.dim();
    let k = centroids.nrows();
    let mut labels = vec![usize::MAX; n];
    let mut next = vec![0usize; n];
    let mut dists = vec![0.0; n];
    let mut history = Vec::new();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let inertia = assign(h, &centroids, &mut next, &mut dists);
        history.push(inertia);
        if next == labels {
            break;
        }
        labels.copy_from_slice(&next);

        let mut sums = Array2::<f64>::zeros((k, dim));
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            sums.row_mut(l).scaled_add(1.0, &h.row(i));
            counts[l] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                let row = sums.row(j).mapv(|v| v / counts[j] as f64);
                centroids.row_mut(j).assign(&row);
            }
        }
        // empty clusters take the point currently farthest from its centroid
        for j in (0..k).filter(|&j| counts[j] == 0) {
            let far = (0..n)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                .unwrap();
            centroids.row_mut(j).assign(&h.row(far));
            dists[far] = 0.0;
        }
    }
    let inertia = *history.last().unwrap();
    KMeansResult {
        centroids,
        assignments: labels,
        inertia,
        inertia_history: history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Axis};

    #[test]
    fn single_cluster_is_mean() {
        let h = array![[1.0, 2.0], [3.0, -2.0], [5.0, 3.0]];
        let r = kmeans(&h.view(), 1, 3, 7).unwrap();
        let mean = h.mean_axis(Axis(0)).unwrap();
        for (a, b) in r.centroids.row(0).iter().zip(&mean) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(r.assignments, vec![0, 0, 0]);
    }

    #[test]
    fn k_equals_n_is_exact() {
        let h = array![[0.0, 0.0], [1.0, 0.0], [0.0, 5.0], [3.0, 3.0]];
        let r = kmeans(&h.view(), 4, 2, 0).unwrap();
        assert_eq!(r.inertia, 0.0);
        let mut a = r.assignments.clone();
        a.sort();
        a.dedup();
        assert_eq!(a.len(), 4);
    }

    #[test]
    fn too_many_clusters() {
        let h = array![[0.0], [1.0]];
        assert!(matches!(
            kmeans(&h.view(), 3, 1, 0),
            Err(Error::TooManyClusters { k: 3, n: 2 })
        ));
    }

    #[test]
    fn duplicate_points_do_not_break_seeding() {
        let h = Array2::<f64>::zeros((5, 2));
        let r = kmeans(&h.view(), 3, 2, 1).unwrap();
        assert_eq!(r.inertia, 0.0);
    }
}
