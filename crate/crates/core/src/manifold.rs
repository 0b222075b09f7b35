//! Point clouds grouped by class label.

use nalgebra::DMatrix;

use crate::embx::EmbeddingTensor;
use crate::error::{Error, Result};

/// Row-major matrix of `len()` points in `dim()` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("dim", "must be >= 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::validation(
                "data",
                format!("length {} is not a multiple of dim {dim}", data.len()),
            ));
        }
        Ok(PointCloud { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::Degenerate("empty point cloud".into()))?;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::validation(
                    format!("rows[{i}]"),
                    format!("dimension {} differs from {dim}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(PointCloud { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for r in self.rows() {
            for (acc, v) in c.iter_mut().zip(r) {
                *acc += v;
            }
        }
        let n = self.len() as f64;
        c.iter_mut().for_each(|v| *v /= n);
        c
    }

    /// `len() x dim()` matrix, one point per row.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.dim, &self.data)
    }

    pub fn map(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<PointCloud> {
        let rows: Vec<Vec<f64>> = self.rows().map(f).collect();
        PointCloud::from_rows(&rows)
    }

    pub fn scaled(&self, c: f64) -> PointCloud {
        PointCloud {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// First `n` points.
    pub fn truncated(&self, n: usize) -> PointCloud {
        let n = n.min(self.len());
        PointCloud {
            dim: self.dim,
            data: self.data[..n * self.dim].to_vec(),
        }
    }
}

/// `P >= 2` labeled point clouds sharing one ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSet {
    manifolds: Vec<PointCloud>,
    class_names: Vec<String>,
    ambient_dim: usize,
}

impl ManifoldSet {
    pub fn new(manifolds: Vec<PointCloud>, class_names: Vec<String>) -> Result<Self> {
        if manifolds.len() < 2 {
            return Err(Error::validation(
                "manifolds",
                format!("P ≥ 2 required, got {}", manifolds.len()),
            ));
        }
        if class_names.len() != manifolds.len() {
            return Err(Error::validation(
                "class_names",
                format!(
                    "{} names for {} manifolds",
                    class_names.len(),
                    manifolds.len()
                ),
            ));
        }
        let ambient_dim = manifolds[0].dim();
        for (m, name) in manifolds.iter().zip(&class_names) {
            if m.is_empty() {
                return Err(Error::validation(
                    format!("manifold {name}"),
                    "has no points",
                ));
            }
            if m.dim() != ambient_dim {
                return Err(Error::validation(
                    format!("manifold {name}"),
                    format!("dimension {} differs from {ambient_dim}", m.dim()),
                ));
            }
        }
        Ok(ManifoldSet {
            manifolds,
            class_names,
            ambient_dim,
        })
    }

    /// Names default to `class0`, `class1`, ...
    pub fn unnamed(manifolds: Vec<PointCloud>) -> Result<Self> {
        let names = (0..manifolds.len()).map(|i| format!("class{i}")).collect();
        Self::new(manifolds, names)
    }

    pub fn manifolds(&self) -> &[PointCloud] {
        &self.manifolds
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn num_classes(&self) -> usize {
        self.manifolds.len()
    }

    pub fn num_points(&self) -> usize {
        self.manifolds.iter().map(PointCloud::len).sum()
    }

    /// Applies `f` to every point of every manifold.
    pub fn map_points(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<ManifoldSet> {
        let manifolds = self
            .manifolds
            .iter()
            .map(|m| m.map(&f))
            .collect::<Result<Vec<_>>>()?;
        ManifoldSet::new(manifolds, self.class_names.clone())
    }

    pub fn scaled(&self, c: f64) -> ManifoldSet {
        ManifoldSet {
            manifolds: self.manifolds.iter().map(|m| m.scaled(c)).collect(),
            class_names: self.class_names.clone(),
            ambient_dim: self.ambient_dim,
        }
    }

    /// Keeps at most `cap` points per class, in dataset order.
    pub fn subsampled(&self, cap: usize) -> ManifoldSet {
        ManifoldSet {
            manifolds: self
                .manifolds
                .iter()
                .map(|m| m.truncated(cap.max(1)))
                .collect(),
            class_names: self.class_names.clone(),
            ambient_dim: self.ambient_dim,
        }
    }

    /// Mean over all points of all manifolds.
    pub fn global_mean(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.ambient_dim];
        for r in self.manifolds.iter().flat_map(PointCloud::rows) {
            for (acc, v) in c.iter_mut().zip(r) {
                *acc += v;
            }
        }
        let n = self.num_points() as f64;
        c.iter_mut().for_each(|v| *v /= n);
        c
    }

    pub fn centered(&self) -> ManifoldSet {
        let mean = self.global_mean();
        self.map_points(|r| r.iter().zip(&mean).map(|(a, b)| a - b).collect())
            .expect("shape preserved")
    }

    /// Points stacked class by class, with their class indices.
    pub fn stacked(&self) -> (PointCloud, Vec<usize>) {
        let mut data = Vec::with_capacity(self.num_points() * self.ambient_dim);
        let mut labels = Vec::with_capacity(self.num_points());
        for (k, m) in self.manifolds.iter().enumerate() {
            data.extend_from_slice(m.as_slice());
            labels.extend(std::iter::repeat_n(k, m.len()));
        }
        (
            PointCloud {
                dim: self.ambient_dim,
                data,
            },
            labels,
        )
    }
}

/// Groups the points of one layer by the labels of `scheme`: one manifold per
/// distinct label in first-occurrence order, points in dataset order.
pub fn group_manifolds(
    tensor: &EmbeddingTensor,
    layer: usize,
    scheme: &str,
) -> Result<ManifoldSet> {
    let labels = tensor.header.labels(scheme)?;
    let values = tensor.layer(layer)?;
    let dim = tensor.header.shape.embed_dim;

    let mut names: Vec<&str> = Vec::new();
    let mut buckets: Vec<Vec<f64>> = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        let k = match names.iter().position(|n| *n == label.as_str()) {
            Some(k) => k,
            None => {
                names.push(label);
                buckets.push(Vec::new());
                names.len() - 1
            }
        };
        buckets[k].extend(values[i * dim..(i + 1) * dim].iter().map(|&v| v as f64));
    }
    if names.len() < 2 {
        return Err(Error::validation(
            format!("label_schemes[{scheme}]"),
            format!("P ≥ 2 required, found {} distinct label(s)", names.len()),
        ));
    }
    let manifolds = buckets
        .into_iter()
        .map(|data| PointCloud::new(dim, data))
        .collect::<Result<Vec<_>>>()?;
    ManifoldSet::new(manifolds, names.into_iter().map(String::from).collect())
}
