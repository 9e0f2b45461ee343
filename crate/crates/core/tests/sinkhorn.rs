//! Optimal-transport target: marginals on random instances, a 2×2 oracle,
//! and structural properties of the entropic solution.

mod common;

use common::{gaussian_matrix, rng};
use cutclust::clustering::{
    sinkhorn_log_kernel, sinkhorn_target, soft_assign, SinkhornConfig,
};
use cutclust::Error;
use ndarray::{array, Array1, Array2, Axis};
use rand::Rng;

fn random_q(r: &mut impl Rng, n: usize, k: usize, spread: f64) -> Array2<f64> {
    let h = gaussian_matrix(r, n, 3) * spread;
    let mu = gaussian_matrix(r, k, 3) * spread;
    soft_assign(&h.view(), &mu.view(), 1.0).unwrap()
}

fn random_pi(r: &mut impl Rng, k: usize) -> Array1<f64> {
    let raw = Array1::from_shape_fn(k, |_| r.random_range(0.2..1.0));
    let total = raw.sum();
    raw / total
}

fn marginals(plan: &Array2<f64>) -> (Array1<f64>, Array1<f64>) {
    (plan.sum_axis(Axis(1)), plan.sum_axis(Axis(0)))
}

#[test]
fn random_instances_meet_both_marginals() {
    let mut r = rng(21);
    for trial in 0..100 {
        let n = r.random_range(2..80);
        let k = r.random_range(2..8);
        let lambda = [1.0, 5.0, 20.0][trial % 3];
        let q = random_q(&mut r, n, k, 2.0);
        let pi = random_pi(&mut r, k);
        let out = sinkhorn_target(&q.view(), &pi.view(), &SinkhornConfig::new(lambda)).unwrap();
        assert!(out.plan.iter().all(|v| v.is_finite() && *v >= 0.0), "trial {trial}");
        let (rows, cols) = marginals(&out.plan);
        for v in rows {
            assert!((v - 1.0).abs() <= 1e-6, "trial {trial} row sum {v}");
        }
        for (c, p) in cols.iter().zip(&pi) {
            assert!((c - n as f64 * p).abs() <= 1e-6, "trial {trial} column sum {c}");
        }
        assert!(out.marginal_error <= 1e-6);
    }
}

/// The entropic 2×2 problem has one free entry `a = P_00`; optimality
/// requires the cross ratio `P00·P11 / (P01·P10)` to equal that of `Q^λ`.
/// Solved by bisection on `a`, which never runs a scaling iteration.
fn cross_ratio_oracle(q: &Array2<f64>, pi: &Array1<f64>, lambda: f64) -> Array2<f64> {
    let c0 = 2.0 * pi[0];
    let target = lambda * (q[[0, 0]].ln() + q[[1, 1]].ln() - q[[0, 1]].ln() - q[[1, 0]].ln());
    let plan = |a: f64| array![[a, 1.0 - a], [c0 - a, 1.0 - c0 + a]];
    let log_ratio = |a: f64| {
        let p = plan(a);
        p[[0, 0]].ln() + p[[1, 1]].ln() - p[[0, 1]].ln() - p[[1, 0]].ln()
    };
    let (mut lo, mut hi) = ((c0 - 1.0).max(0.0), c0.min(1.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if log_ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    plan(0.5 * (lo + hi))
}

#[test]
fn two_by_two_matches_oracle() {
    let q = array![[0.9, 0.1], [0.1, 0.9]];
    let pi = array![0.5, 0.5];
    let out = sinkhorn_target(&q.view(), &pi.view(), &SinkhornConfig::new(5.0)).unwrap();
    let oracle = cross_ratio_oracle(&q, &pi, 5.0);
    let closed = 9f64.powi(5) / (1.0 + 9f64.powi(5));
    assert!((oracle[[0, 0]] - closed).abs() < 1e-12);
    for (a, b) in out.plan.iter().zip(oracle.iter()) {
        assert!((a - b).abs() <= 1e-6, "{}\n{}", out.plan, oracle);
    }

    let mut r = rng(22);
    for _ in 0..50 {
        let q = random_q(&mut r, 2, 2, 1.5);
        let pi = random_pi(&mut r, 2);
        let lambda = r.random_range(0.5..20.0);
        let out = sinkhorn_target(&q.view(), &pi.view(), &SinkhornConfig::new(lambda)).unwrap();
        let oracle = cross_ratio_oracle(&q, &pi, lambda);
        for (a, b) in out.plan.iter().zip(oracle.iter()) {
            assert!((a - b).abs() <= 1e-6, "λ={lambda}\n{}\n{}", out.plan, oracle);
        }
    }
}

#[test]
fn uniform_inputs_give_uniform_plan() {
    let q = Array2::from_elem((7, 3), 1.0 / 3.0);
    let pi = Array1::from_elem(3, 1.0 / 3.0);
    let out = sinkhorn_target(&q.view(), &pi.view(), &SinkhornConfig::default()).unwrap();
    assert!(out.plan.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-12));
}

#[test]
fn kernel_scale_is_absorbed() {
    let mut r = rng(23);
    for _ in 0..20 {
        let q = random_q(&mut r, 15, 4, 1.5);
        let pi = random_pi(&mut r, 4);
        let log_m = q.mapv(|v| 5.0 * v.ln());
        let shift = r.random_range(-30.0..30.0);
        let cfg = SinkhornConfig::new(5.0);
        let a = sinkhorn_log_kernel(&log_m.view(), &pi.view(), &cfg).unwrap().plan;
        let b = sinkhorn_log_kernel(&(log_m + shift).view(), &pi.view(), &cfg).unwrap().plan;
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= 1e-10);
        }
    }
}

#[test]
fn plans_sharpen_with_lambda() {
    let mut r = rng(24);
    let mut checked = 0;
    while checked < 30 {
        let q = random_q(&mut r, 12, 3, 2.0);
        // Feasible proportions close to the argmax counts keep the
        // constraint from fighting the sharpening.
        let pi = q.sum_axis(Axis(0)) / 12.0;
        let plans: Vec<Array2<f64>> = [1.0, 5.0, 20.0]
            .iter()
            .map(|&l| sinkhorn_target(&q.view(), &pi.view(), &SinkhornConfig::new(l)).unwrap().plan)
            .collect();
        let sharpness = |p: &Array2<f64>| -> f64 {
            p.outer_iter().map(|row| row.fold(0.0f64, |m, &v| m.max(v))).sum::<f64>()
        };
        let s: Vec<f64> = plans.iter().map(sharpness).collect();
        assert!(s[0] < s[1] && s[1] < s[2], "{s:?}");
        checked += 1;
    }
}

#[test]
fn unconstrained_marginals_are_a_fixed_point() {
    let mut r = rng(25);
    for _ in 0..20 {
        let lambda = r.random_range(1.0..10.0);
        let q = random_q(&mut r, 10, 3, 1.5);
        let mut m = q.mapv(|v| v.powf(lambda));
        for mut row in m.outer_iter_mut() {
            let s = row.sum();
            row /= s;
        }
        let pi = m.sum_axis(Axis(0)) / 10.0;
        let out = sinkhorn_target(&q.view(), &pi.view(), &SinkhornConfig::new(lambda)).unwrap();
        for (a, b) in out.plan.iter().zip(m.iter()) {
            assert!((a - b).abs() <= 1e-6);
        }
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let q = array![[1.0, 0.0], [0.5, 0.5]];
    let pi = array![0.5, 0.5];
    assert!(matches!(
        sinkhorn_target(&q.view(), &pi.view(), &SinkhornConfig::default()),
        Err(Error::NonPositiveAssignment { row: 0, col: 1, .. })
    ));
    let q = array![[0.6, 0.4], [0.5, 0.5]];
    assert!(sinkhorn_target(&q.view(), &array![1.0, 0.0].view(), &SinkhornConfig::default()).is_err());
    assert!(sinkhorn_target(&q.view(), &array![0.6, 0.6].view(), &SinkhornConfig::default()).is_err());
    let tight = SinkhornConfig {
        max_iterations: 1,
        marginal_tolerance: 1e-15,
        ..SinkhornConfig::new(20.0)
    };
    let q = array![[0.9, 0.1], [0.8, 0.2], [0.7, 0.3]];
    assert!(matches!(
        sinkhorn_target(&q.view(), &array![0.2, 0.8].view(), &tight),
        Err(Error::SinkhornNotConverged { iterations: 1, .. })
    ));
}
