//! K-means on separable blobs, degenerate cluster counts, and the local
//! optimality conditions of Lloyd's algorithm.

mod common;

use common::{gaussian_matrix, rng};
use cutclust::clustering::kmeans;
use cutclust::metrics::accuracy;
use cutclust::Error;
use ndarray::{Array1, Array2, Axis};

fn two_blobs(seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut r = rng(seed);
    let noise = gaussian_matrix(&mut r, 40, 2) * 0.1;
    let labels: Vec<usize> = (0..40).map(|i| i / 20).collect();
    let centers = Array2::from_shape_fn((40, 2), |(i, j)| if j == 0 { if labels[i] == 0 { -5.0 } else { 5.0 } } else { 0.0 });
    (centers + noise, labels)
}

fn inertia(h: &Array2<f64>, assignments: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<usize> = (0..h.nrows()).filter(|&i| assignments[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        let sub = h.select(Axis(0), &members);
        let mean = sub.mean_axis(Axis(0)).unwrap();
        total += sub.outer_iter().map(|row| (&row - &mean).mapv(|v| v * v).sum()).sum::<f64>();
    }
    total
}

#[test]
fn separates_two_blobs() {
    for seed in 0..5 {
        let (h, labels) = two_blobs(seed);
        let out = kmeans(&h.view(), 2, 10, seed).unwrap();
        assert_eq!(accuracy(&out.assignments, &labels).unwrap(), 1.0);
        let mut xs: Vec<f64> = out.centroids.column(0).to_vec();
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] + 5.0).abs() < 0.1 && (xs[1] - 5.0).abs() < 0.1, "{xs:?}");
    }
}

/// Lloyd fixed point: every point sits with its nearest centroid, and every
/// centroid is the mean of its members. Checked by scanning all pairs.
#[test]
fn result_is_a_lloyd_fixed_point() {
    for seed in 0..5 {
        let mut r = rng(40 + seed);
        let h = gaussian_matrix(&mut r, 18, 2);
        let k = 3;
        let out = kmeans(&h.view(), k, 10, seed).unwrap();
        assert!((inertia(&h, &out.assignments, k) - out.inertia).abs() <= 1e-9 * out.inertia.max(1.0));
        let dist = |i: usize, c: usize| (&h.row(i) - &out.centroids.row(c)).mapv(|v| v * v).sum();
        for i in 0..h.nrows() {
            let own = dist(i, out.assignments[i]);
            assert!((0..k).all(|c| own <= dist(i, c) + 1e-12), "seed {seed} point {i}");
        }
        for c in 0..k {
            let members: Vec<usize> = (0..h.nrows()).filter(|&i| out.assignments[i] == c).collect();
            let mean = h.select(Axis(0), &members).mean_axis(Axis(0)).unwrap();
            assert!(mean.iter().zip(out.centroids.row(c)).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }
}

#[test]
fn degenerate_cluster_counts() {
    let mut r = rng(41);
    let h = gaussian_matrix(&mut r, 12, 3);
    let one = kmeans(&h.view(), 1, 3, 0).unwrap();
    let mean: Array1<f64> = h.mean_axis(Axis(0)).unwrap();
    assert!(one.centroids.row(0).iter().zip(&mean).all(|(a, b)| (a - b).abs() < 1e-12));
    assert!(one.assignments.iter().all(|&a| a == 0));

    let all = kmeans(&h.view(), 12, 3, 0).unwrap();
    assert!(all.inertia < 1e-20);
    let mut seen = all.assignments.clone();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), 12);

    assert!(matches!(kmeans(&h.view(), 13, 3, 0), Err(Error::TooManyClusters { k: 13, n: 12 })));
    assert!(kmeans(&h.view(), 0, 3, 0).is_err());
}

#[test]
fn inertia_never_increases() {
    for seed in 0..10 {
        let mut r = rng(50 + seed);
        let h = gaussian_matrix(&mut r, 60, 4);
        let out = kmeans(&h.view(), 5, 4, seed).unwrap();
        assert!(!out.inertia_history.is_empty());
        for w in out.inertia_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{:?}", out.inertia_history);
        }
    }
}

#[test]
fn same_seed_same_result() {
    let mut r = rng(42);
    let h = gaussian_matrix(&mut r, 30, 3);
    assert_eq!(kmeans(&h.view(), 4, 10, 9).unwrap(), kmeans(&h.view(), 4, 10, 9).unwrap());
}
