//! Independent oracles for the estimators: exact combinatorics in two
//! dimensions and Monte-Carlo limits of Gaussian clouds.

mod common;

use nalgebra::DMatrix;
use rand::Rng;

use common::{angular_gap_separable, gaussian_cloud, rng};
use manifold_capacity::capacity::{
    cover_probability, estimate_f, find_critical_dimension, is_separable, CapacityConfig,
    CapacityStatus,
};
use manifold_capacity::manifold::{ManifoldSet, PointCloud};
use manifold_capacity::stats::{axes_alignment, participation_ratio, spectrum};
use manifold_capacity::synth::generate_point_classes;

/// Random ±1 labels with both signs present.
fn mixed_signs(r: &mut impl Rng, n: usize) -> Vec<i8> {
    loop {
        let s: Vec<i8> = (0..n)
            .map(|_| if r.random_bool(0.5) { 1 } else { -1 })
            .collect();
        if s.contains(&1) && s.contains(&-1) {
            return s;
        }
    }
}

fn check_instance(points: &[[f64; 2]], signs: &[i8]) {
    let signed: Vec<[f64; 2]> = points
        .iter()
        .zip(signs)
        .map(|(p, &s)| [p[0] * s as f64, p[1] * s as f64])
        .collect();
    let m = DMatrix::from_fn(points.len(), 2, |i, j| points[i][j]);
    let got = is_separable(&m, signs).unwrap();
    assert_eq!(got, angular_gap_separable(&signed), "{points:?} {signs:?}");
}

#[test]
fn solver_matches_angular_gap_on_gaussian_points() {
    let mut r = rng(1);
    for _ in 0..500 {
        let n = r.random_range(2..=10);
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| {
                [
                    r.sample(rand_distr::StandardNormal),
                    r.sample(rand_distr::StandardNormal),
                ]
            })
            .collect();
        let signs = mixed_signs(&mut r, n);
        check_instance(&pts, &signs);
    }
}

#[test]
fn solver_matches_angular_gap_on_lattice_points() {
    // Small integer coordinates: duplicates, collinear and opposite pairs.
    let mut r = rng(2);
    for _ in 0..500 {
        let n = r.random_range(2..=10);
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| [r.random_range(-3..=3) as f64, r.random_range(-3..=3) as f64])
            .collect();
        let signs = mixed_signs(&mut r, n);
        check_instance(&pts, &signs);
    }
}

#[test]
fn angular_gap_oracle_fixtures() {
    assert!(angular_gap_separable(&[[1.0, 0.0], [0.0, 1.0]]));
    assert!(!angular_gap_separable(&[[1.0, 0.0], [-1.0, 0.0]]));
    assert!(angular_gap_separable(&[[1.0, 1.0], [2.0, 2.0]]));
    assert!(!angular_gap_separable(&[
        [1.0, 0.0],
        [-1.0, 1.0],
        [-1.0, -1.0]
    ]));
    assert!(!angular_gap_separable(&[[0.0, 0.0]]));
}

#[test]
fn cover_fraction_at_several_sizes() {
    for (n, d) in [(4usize, 2usize), (6, 3), (10, 4)] {
        let set = generate_point_classes(n, 300, 17).unwrap();
        let e = estimate_f(&set, d, 1500, 5).unwrap();
        let exact = cover_probability(n as u64, d as u64);
        let se = (exact * (1.0 - exact) / 1500.0).sqrt();
        assert!(
            (e.f_hat - exact).abs() <= 4.0 * se + 0.01,
            "({n},{d}): {} vs {exact}",
            e.f_hat
        );
    }
}

#[test]
fn point_class_transition_sits_at_half_n() {
    let set = generate_point_classes(40, 200, 4).unwrap();
    let est = find_critical_dimension(&set, &CapacityConfig::default()).unwrap();
    assert_eq!(est.status, CapacityStatus::Ok);
    assert!((est.d_star - 20.0).abs() <= 3.0, "{}", est.d_star);
    // Every fine-grid estimate agrees with the closed form.
    for e in &est.curve.entries {
        let exact = cover_probability(40, e.d_proj as u64);
        let se = (exact * (1.0 - exact) / e.trials as f64)
            .sqrt()
            .max(1.0 / e.trials as f64);
        assert!(
            (e.f_hat - exact).abs() <= 4.0 * se,
            "d={} {} vs {exact}",
            e.d_proj,
            e.f_hat
        );
    }
}

#[test]
fn isotropic_participation_ratio() {
    let cloud = gaussian_cloud(2000, 10, 8);
    let pr = participation_ratio(&cloud).unwrap();
    assert!((9.0..=10.0).contains(&pr), "{pr}");
}

#[test]
fn isotropic_spectrum_is_flat() {
    let s = spectrum(&gaussian_cloud(4000, 8, 9)).unwrap();
    let ratio = s.eigenvalues[0] / s.eigenvalues[7];
    assert!(ratio < 1.2, "{ratio}");
}

#[test]
fn random_axes_alignment_matches_gaussian_limit() {
    // Mean |cos| of independent random directions in D dims ≈ √(2/(πD)).
    let dim = 200;
    let manifolds: Vec<PointCloud> = (0..20).map(|i| gaussian_cloud(6, dim, 100 + i)).collect();
    let set = ManifoldSet::unnamed(manifolds).unwrap();
    let a = axes_alignment(&set, 3).unwrap();
    let expected = (2.0 / (std::f64::consts::PI * dim as f64)).sqrt();
    assert!((a - expected).abs() < 0.15 * expected, "{a} vs {expected}");
}
