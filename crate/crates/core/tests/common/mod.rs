#![allow(dead_code)]

use std::cmp::Ordering;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use manifold_capacity::embx::{Condition, EmbeddingKind, EmbeddingTensor, EmbxHeader, Shape};
use manifold_capacity::manifold::{ManifoldSet, PointCloud};
use manifold_capacity::synth::{generate_gaussian_manifolds, SynthSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian with sign fix).
pub fn random_rotation(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    let g = DMatrix::from_fn(dim, dim, |_, _| r.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, rr) = (qr.q(), qr.r());
    for j in 0..dim {
        if rr[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn rotate(cloud: &PointCloud, q: &DMatrix<f64>) -> PointCloud {
    cloud
        .map(|row| {
            (q * nalgebra::DVector::from_column_slice(row))
                .as_slice()
                .to_vec()
        })
        .unwrap()
}

pub fn gaussian_cloud(m: usize, dim: usize, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    let data = (0..m * dim).map(|_| r.sample(StandardNormal)).collect();
    PointCloud::new(dim, data).unwrap()
}

/// Half-plane index then cross product: a total order on directions by
/// angle in `[0, 2π)`. Exact for integer-valued coordinates.
fn angle_cmp(a: [f64; 2], b: [f64; 2]) -> Ordering {
    let half = |p: [f64; 2]| {
        if p[1] > 0.0 || (p[1] == 0.0 && p[0] > 0.0) {
            0
        } else {
            1
        }
    };
    half(a).cmp(&half(b)).then_with(|| {
        let cross = a[0] * b[1] - a[1] * b[0];
        0.0.partial_cmp(&cross).unwrap()
    })
}

/// Signed 2-D points lie in an open half-plane through the origin iff none
/// is the origin and some angular gap between consecutive directions
/// exceeds π.
pub fn angular_gap_separable(signed: &[[f64; 2]]) -> bool {
    if signed.iter().any(|p| p[0] == 0.0 && p[1] == 0.0) {
        return false;
    }
    let mut pts = signed.to_vec();
    pts.sort_by(|a, b| angle_cmp(*a, *b));
    let n = pts.len();
    if n == 1 {
        return true;
    }
    (0..n).any(|i| {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let cross = a[0] * b[1] - a[1] * b[0];
        let dot = a[0] * b[0] + a[1] * b[1];
        // Counter-clockwise step from a to b is larger than π.
        if i + 1 == n {
            // Wrap-around step; identical directions mean a full turn.
            cross < 0.0
                || (cross == 0.0 && dot > 0.0 && pts.iter().all(|p| angle_cmp(*p, a).is_eq()))
        } else {
            cross < 0.0
        }
    })
}

/// Stacks several synthetic sets into one multi-layer tensor, labeled under
/// `scheme`. All specs must share class and point counts.
pub fn layered_tensor(specs: &[SynthSpec], scheme: &str) -> EmbeddingTensor {
    let sets: Vec<ManifoldSet> = specs
        .iter()
        .map(|s| generate_gaussian_manifolds(s).unwrap().set)
        .collect();
    let (first, labels) = sets[0].stacked();
    let shape = Shape::new(sets.len(), first.len(), first.dim());
    let mut header = EmbxHeader::new(shape, EmbeddingKind::SentenceMean, Condition::Raw);
    header.label_schemes.insert(
        scheme.into(),
        labels
            .iter()
            .map(|&l| sets[0].class_names()[l].clone())
            .collect(),
    );
    let mut data = Vec::with_capacity(shape.num_values());
    for s in &sets {
        data.extend(s.stacked().0.as_slice().iter().map(|&v| v as f32));
    }
    EmbeddingTensor::new(header, data).unwrap()
}
