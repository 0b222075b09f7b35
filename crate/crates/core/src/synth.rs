//! Synthetic manifold families with controlled geometry.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::embx::{Condition, EmbeddingKind, EmbeddingTensor, EmbxHeader, Shape};
use crate::error::{Error, Result};
use crate::manifold::{ManifoldSet, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub points_per_class: usize,
    pub ambient_dim: usize,
    pub intrinsic_dim: usize,
    pub radius_scale: f64,
    pub centroid_scale: f64,
    /// Fraction of each frame's columns taken from one shared global frame.
    pub shared_axes_fraction: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_classes: 5,
            points_per_class: 50,
            ambient_dim: 64,
            intrinsic_dim: 3,
            radius_scale: 1.0,
            centroid_scale: 1.0,
            shared_axes_fraction: 0.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::validation("n_classes", "P ≥ 2 required"));
        }
        if self.points_per_class == 0 {
            return Err(Error::validation("points_per_class", "must be >= 1"));
        }
        if self.intrinsic_dim == 0 || self.intrinsic_dim > self.ambient_dim {
            return Err(Error::validation(
                "intrinsic_dim",
                format!("must lie in 1..={}", self.ambient_dim),
            ));
        }
        if !(self.radius_scale >= 0.0 && self.radius_scale.is_finite()) {
            return Err(Error::validation("radius_scale", "must be finite and >= 0"));
        }
        if !(self.centroid_scale >= 0.0 && self.centroid_scale.is_finite()) {
            return Err(Error::validation(
                "centroid_scale",
                "must be finite and >= 0",
            ));
        }
        if !(0.0..=1.0).contains(&self.shared_axes_fraction) {
            return Err(Error::validation(
                "shared_axes_fraction",
                "must lie in [0, 1]",
            ));
        }
        Ok(())
    }

    /// Number of frame columns drawn from the shared frame.
    pub fn shared_axes(&self) -> usize {
        (self.shared_axes_fraction * self.intrinsic_dim as f64).round() as usize
    }
}

#[derive(Debug, Clone)]
pub struct SynthManifolds {
    pub set: ManifoldSet,
    /// `D x k` orthonormal frame per class.
    pub frames: Vec<DMatrix<f64>>,
    pub centroids: Vec<DVector<f64>>,
}

impl SynthManifolds {
    /// Single-layer EMBX tensor labeled under `scheme` with the class names.
    pub fn to_tensor(&self, scheme: &str) -> Result<EmbeddingTensor> {
        manifolds_to_tensor(&self.set, scheme)
    }
}

fn gaussian_vector<R: Rng>(rng: &mut R, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

/// Gram–Schmidt completion of `fixed` with fresh Gaussian directions until
/// `k` orthonormal columns exist.
fn complete_frame<R: Rng>(
    rng: &mut R,
    fixed: &[DVector<f64>],
    dim: usize,
    k: usize,
) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = fixed.to_vec();
    while cols.len() < k {
        let mut v = gaussian_vector(rng, dim);
        for _ in 0..2 {
            for u in &cols {
                let p = u.dot(&v);
                v.axpy(-p, u, 1.0);
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            cols.push(v / n);
        }
    }
    DMatrix::from_columns(&cols)
}

/// Gaussian point clouds: class `μ` has centroid `c·g_μ` and points
/// `centroid + (r/√k) U_μ ξ` with `ξ ~ N(0, I_k)`. The first `round(ρ k)`
/// columns of every `U_μ` come from one shared frame.
pub fn generate_gaussian_manifolds(spec: &SynthSpec) -> Result<SynthManifolds> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = spec.ambient_dim;
    let k = spec.intrinsic_dim;
    let shared_frame = complete_frame(&mut rng, &[], dim, k);
    let shared: Vec<DVector<f64>> = (0..spec.shared_axes())
        .map(|j| shared_frame.column(j).into_owned())
        .collect();
    let point_scale = spec.radius_scale / (k as f64).sqrt();

    let mut manifolds = Vec::with_capacity(spec.n_classes);
    let mut frames = Vec::with_capacity(spec.n_classes);
    let mut centroids = Vec::with_capacity(spec.n_classes);
    for _ in 0..spec.n_classes {
        let centroid = gaussian_vector(&mut rng, dim) * spec.centroid_scale;
        let frame = complete_frame(&mut rng, &shared, dim, k);
        let mut data = Vec::with_capacity(spec.points_per_class * dim);
        for _ in 0..spec.points_per_class {
            let xi = gaussian_vector(&mut rng, k);
            let p = &centroid + &frame * xi * point_scale;
            data.extend_from_slice(p.as_slice());
        }
        manifolds.push(PointCloud::new(dim, data)?);
        frames.push(frame);
        centroids.push(centroid);
    }
    Ok(SynthManifolds {
        set: ManifoldSet::unnamed(manifolds)?,
        frames,
        centroids,
    })
}

/// `n_classes` classes holding one standard-normal point each.
pub fn generate_point_classes(n_classes: usize, dim: usize, seed: u64) -> Result<ManifoldSet> {
    if n_classes < 2 {
        return Err(Error::validation("n_classes", "P ≥ 2 required"));
    }
    if dim == 0 {
        return Err(Error::validation("ambient_dim", "must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let manifolds = (0..n_classes)
        .map(|_| {
            let row: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            PointCloud::new(dim, row)
        })
        .collect::<Result<Vec<_>>>()?;
    ManifoldSet::unnamed(manifolds)
}

/// Packs a manifold set into a one-layer tensor; points keep class order and
/// `scheme` carries the class names.
pub fn manifolds_to_tensor(set: &ManifoldSet, scheme: &str) -> Result<EmbeddingTensor> {
    let (stacked, labels) = set.stacked();
    let shape = Shape::new(1, stacked.len(), stacked.dim());
    let mut header = EmbxHeader::new(shape, EmbeddingKind::SentenceMean, Condition::Raw);
    header.model_name = "synthetic".into();
    header.label_schemes.insert(
        scheme.to_string(),
        labels
            .iter()
            .map(|&l| set.class_names()[l].clone())
            .collect(),
    );
    let data = stacked.as_slice().iter().map(|&v| v as f32).collect();
    EmbeddingTensor::new(header, data)
}
