//! Per-manifold geometry (participation-ratio dimension, radius, principal
//! axes) and the correlation structure between manifolds.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{ManifoldSet, PointCloud};

pub const DEFAULT_K_AXES: usize = 5;

/// Relative tolerance under which a manifold counts as a single point.
const COLLAPSE_TOL: f64 = 1e-12;
/// Eigenvalues below `RANK_TOL * lambda_max` do not count towards rank.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    #[default]
    Origin,
    GlobalMean,
}

impl std::str::FromStr for Centering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "origin" => Ok(Centering::Origin),
            "global-mean" | "global_mean" => Ok(Centering::GlobalMean),
            other => Err(Error::validation(
                "centering",
                format!("expected origin|global-mean, got {other:?}"),
            )),
        }
    }
}

/// Centroid plus principal axes of one manifold, largest variance first.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSpectrum {
    pub centroid: DVector<f64>,
    /// Covariance eigenvalues, nonincreasing, `min(m - 1, D)` of them.
    pub eigenvalues: Vec<f64>,
    /// Unit axes as columns, matched to `eigenvalues`.
    pub principal_axes: DMatrix<f64>,
}

impl ManifoldSpectrum {
    /// Number of eigenvalues above the numerical noise floor.
    pub fn rank(&self) -> usize {
        let top = self.eigenvalues.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return 0;
        }
        self.eigenvalues
            .iter()
            .take_while(|&&l| l > RANK_TOL * top)
            .count()
    }

    pub fn axis(&self, a: usize) -> nalgebra::DVectorView<'_, f64> {
        self.principal_axes.column(a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub mean_dimension: f64,
    pub mean_radius: f64,
    pub axes_alignment: f64,
    pub center_axes_alignment: f64,
    /// Classes left out of the dimension and alignment averages (single point).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<String>,
}

fn centered_matrix(points: &PointCloud) -> (DVector<f64>, DMatrix<f64>) {
    let centroid = DVector::from_vec(points.centroid());
    let mut x = points.to_matrix();
    for mut row in x.row_iter_mut() {
        row -= centroid.transpose();
    }
    (centroid, x)
}

/// Smaller of the two Gram forms: `X Xᵀ` (m x m) or `Xᵀ X` (D x D).
/// Both share their nonzero eigenvalues.
fn gram(x: &DMatrix<f64>) -> DMatrix<f64> {
    if x.nrows() <= x.ncols() {
        x * x.transpose()
    } else {
        x.transpose() * x
    }
}

fn is_collapsed(points: &PointCloud, centered: &DMatrix<f64>) -> bool {
    let scale = points.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let spread = centered.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    spread <= COLLAPSE_TOL * scale.max(f64::MIN_POSITIVE)
}

/// `(Σλ)² / Σλ²` over the eigenvalues of the centered covariance.
///
/// Computed from traces (`tr C` and `‖C‖_F²`), which equal the eigenvalue
/// sums without an eigendecomposition. Collapsed manifolds give 1.
pub fn participation_ratio(points: &PointCloud) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Degenerate(format!(
            "participation ratio needs at least 2 points, got {}",
            points.len()
        )));
    }
    let (_, x) = centered_matrix(points);
    if is_collapsed(points, &x) {
        return Ok(1.0);
    }
    let g = gram(&x);
    let trace = g.trace();
    let frob2 = g.iter().map(|v| v * v).sum::<f64>();
    if frob2 <= 0.0 {
        return Ok(1.0);
    }
    Ok(trace * trace / frob2)
}

/// Maximum Euclidean distance between any two points (0 for one point).
pub fn manifold_radius(points: &PointCloud) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Degenerate("radius of an empty manifold".into()));
    }
    let m = points.len();
    let mut best = 0.0f64;
    for i in 0..m {
        let a = points.row(i);
        for j in i + 1..m {
            let d2: f64 = a
                .iter()
                .zip(points.row(j))
                .map(|(u, v)| (u - v) * (u - v))
                .sum();
            best = best.max(d2);
        }
    }
    Ok(best.sqrt())
}

/// Flips `v` so its first nonzero coordinate is positive.
fn canonical_sign(mut v: DVector<f64>) -> DVector<f64> {
    let tol = 1e-12 * v.amax();
    if let Some(first) = v.iter().find(|c| c.abs() > tol) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
    v
}

/// Orthonormalizes `candidates` in order. Candidates that are (numerically)
/// dependent on earlier ones are replaced by standard basis vectors.
fn orthonormalize(candidates: Vec<DVector<f64>>, dim: usize) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(candidates.len());
    let mut basis = 0usize;
    for cand in candidates {
        let mut v = cand;
        let orig = v.norm();
        for _ in 0..2 {
            for u in &out {
                let p = u.dot(&v);
                v.axpy(-p, u, 1.0);
            }
        }
        let mut n = v.norm();
        if !(n > 1e-8 * orig && orig > 0.0) {
            loop {
                let mut e = DVector::zeros(dim);
                e[basis % dim] = 1.0;
                basis += 1;
                for _ in 0..2 {
                    for u in &out {
                        let p = u.dot(&e);
                        e.axpy(-p, u, 1.0);
                    }
                }
                n = e.norm();
                if n > 1e-6 {
                    v = e;
                    break;
                }
            }
        }
        out.push(v / n);
    }
    out
}

/// Centroid, covariance eigenvalues and principal axes of one manifold.
///
/// When `m <= D` the eigenproblem is solved on the `m x m` Gram matrix of
/// centered points and mapped back to axes through `Xᵀv`; otherwise on the
/// `D x D` covariance directly.
pub fn spectrum(points: &PointCloud) -> Result<ManifoldSpectrum> {
    let m = points.len();
    if m < 2 {
        return Err(Error::Degenerate(format!(
            "spectrum needs at least 2 points, got {m}"
        )));
    }
    let dim = points.dim();
    let keep = (m - 1).min(dim);
    let (centroid, x) = centered_matrix(points);
    let denom = (m - 1) as f64;

    let use_gram = m <= dim;
    let mat = gram(&x) / denom;
    let eig = SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    // Stable sort keeps index order for ties.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(keep);

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let top = eigenvalues.first().copied().unwrap_or(0.0);
    let candidates: Vec<DVector<f64>> = order
        .iter()
        .zip(&eigenvalues)
        .map(|(&i, &lambda)| {
            let v = eig.eigenvectors.column(i);
            if use_gram {
                if lambda > RANK_TOL * top && top > 0.0 {
                    x.transpose() * v
                } else {
                    DVector::zeros(dim)
                }
            } else {
                v.into_owned()
            }
        })
        .collect();
    let axes: Vec<DVector<f64>> = orthonormalize(candidates, dim)
        .into_iter()
        .map(canonical_sign)
        .collect();
    let principal_axes = DMatrix::from_columns(&axes);
    Ok(ManifoldSpectrum {
        centroid,
        eigenvalues,
        principal_axes,
    })
}

fn mean_abs_cos(a: &ManifoldSpectrum, b: &ManifoldSpectrum, k: usize) -> f64 {
    let a_axes = a.principal_axes.columns(0, k);
    let b_axes = b.principal_axes.columns(0, k);
    let cross = a_axes.transpose() * b_axes;
    cross.iter().map(|c| c.abs()).sum::<f64>() / (k * k) as f64
}

fn check_rank(spec: &ManifoldSpectrum, name: &str, k: usize) -> Result<()> {
    let rank = spec.rank();
    if k == 0 {
        return Err(Error::validation("k_axes", "must be >= 1"));
    }
    if k > rank {
        return Err(Error::Rank {
            manifold: name.to_string(),
            message: format!("k = {k} axes requested, rank is {rank}"),
        });
    }
    Ok(())
}

fn spectra(set: &ManifoldSet, k: usize) -> Result<Vec<ManifoldSpectrum>> {
    set.manifolds()
        .par_iter()
        .zip(set.class_names())
        .map(|(m, name)| {
            if m.len() < k + 1 {
                return Err(Error::Rank {
                    manifold: name.clone(),
                    message: format!(
                        "k = {k} axes need at least {} points, got {}",
                        k + 1,
                        m.len()
                    ),
                });
            }
            let s = spectrum(m)?;
            check_rank(&s, name, k)?;
            Ok(s)
        })
        .collect()
}

fn axes_alignment_of(spectra: &[ManifoldSpectrum], k: usize) -> f64 {
    let p = spectra.len();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for a in 0..p {
        for b in a + 1..p {
            total += mean_abs_cos(&spectra[a], &spectra[b], k);
            pairs += 1;
        }
    }
    total / pairs as f64
}

fn center_axes_alignment_of(
    spectra: &[ManifoldSpectrum],
    names: &[String],
    k: usize,
    origin: &DVector<f64>,
) -> Result<f64> {
    let mut total = 0.0;
    for (s, name) in spectra.iter().zip(names) {
        let dir = &s.centroid - origin;
        let norm = dir.norm();
        let scale = s.centroid.amax().max(origin.amax());
        if norm <= COLLAPSE_TOL * scale || norm == 0.0 {
            return Err(Error::DegenerateDirection {
                manifold: name.clone(),
            });
        }
        let cos = s.principal_axes.columns(0, k).transpose() * (dir / norm);
        total += cos.iter().map(|c| c.abs()).sum::<f64>() / k as f64;
    }
    Ok(total / spectra.len() as f64)
}

fn centering_origin(set: &ManifoldSet, centering: Centering) -> DVector<f64> {
    match centering {
        Centering::Origin => DVector::zeros(set.ambient_dim()),
        Centering::GlobalMean => DVector::from_vec(set.global_mean()),
    }
}

/// Mean over unordered manifold pairs of the mean |cos| between their top-`k`
/// principal axes.
pub fn axes_alignment(set: &ManifoldSet, k: usize) -> Result<f64> {
    let spectra = spectra(set, k)?;
    Ok(axes_alignment_of(&spectra, k))
}

/// Mean over manifolds of the mean |cos| between the manifold's centroid
/// direction and its top-`k` principal axes.
pub fn center_axes_alignment(set: &ManifoldSet, k: usize, centering: Centering) -> Result<f64> {
    let spectra = spectra(set, k)?;
    let origin = centering_origin(set, centering);
    center_axes_alignment_of(&spectra, set.class_names(), k, &origin)
}

/// Geometry measures computed independently, so one failing measure does
/// not hide the others.
#[derive(Debug)]
pub struct GeometryParts {
    pub mean_dimension: Result<f64>,
    pub mean_radius: Result<f64>,
    pub axes_alignment: Result<f64>,
    pub center_axes_alignment: Result<f64>,
    pub excluded: Vec<String>,
}

/// Which parts of [`GeometryParts`] to compute; skipped parts are `Ok(NaN)`.
#[derive(Debug, Clone, Copy)]
pub struct GeometryRequest {
    pub dimension: bool,
    pub radius: bool,
    pub axes_alignment: bool,
    pub center_axes_alignment: bool,
}

impl GeometryRequest {
    pub const ALL: GeometryRequest = GeometryRequest {
        dimension: true,
        radius: true,
        axes_alignment: true,
        center_axes_alignment: true,
    };
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn geometry_parts(
    set: &ManifoldSet,
    k: usize,
    centering: Centering,
    request: GeometryRequest,
) -> GeometryParts {
    let skipped = || Ok(f64::NAN);
    let mean_radius = if request.radius {
        set.manifolds()
            .par_iter()
            .map(manifold_radius)
            .collect::<Result<Vec<f64>>>()
            .map(|r| mean(&r))
    } else {
        skipped()
    };

    let mut excluded = Vec::new();
    let mut kept_names = Vec::new();
    let mut kept = Vec::new();
    for (m, name) in set.manifolds().iter().zip(set.class_names()) {
        if m.len() < 2 {
            log::warn!("manifold {name} has a single point; excluded from dimension and alignment");
            excluded.push(name.clone());
        } else {
            kept.push(m.clone());
            kept_names.push(name.clone());
        }
    }

    let mean_dimension = if !request.dimension {
        skipped()
    } else if kept.is_empty() {
        Err(Error::Degenerate("no manifold has 2 or more points".into()))
    } else {
        kept.par_iter()
            .map(participation_ratio)
            .collect::<Result<Vec<f64>>>()
            .map(|d| mean(&d))
    };

    let (axes_alignment, center_axes_alignment) =
        if !(request.axes_alignment || request.center_axes_alignment) {
            (skipped(), skipped())
        } else {
            let kept_count = kept.len();
            let spectra = ManifoldSet::new(kept, kept_names)
                .map_err(|_| {
                    Error::Degenerate(format!(
                        "{kept_count} manifold(s) with 2 or more points; alignment needs 2"
                    ))
                })
                .and_then(|kept_set| Ok((spectra(&kept_set, k)?, kept_set)));
            match spectra {
                Err(e) => {
                    let copy = match &e {
                        Error::Rank { manifold, message } => Error::Rank {
                            manifold: manifold.clone(),
                            message: message.clone(),
                        },
                        other => Error::Degenerate(other.to_string()),
                    };
                    (Err(e), Err(copy))
                }
                Ok((spectra, kept_set)) => {
                    let axes = if request.axes_alignment {
                        Ok(axes_alignment_of(&spectra, k))
                    } else {
                        skipped()
                    };
                    let center = if request.center_axes_alignment {
                        let origin = centering_origin(set, centering);
                        center_axes_alignment_of(&spectra, kept_set.class_names(), k, &origin)
                    } else {
                        skipped()
                    };
                    (axes, center)
                }
            }
        };

    GeometryParts {
        mean_dimension,
        mean_radius,
        axes_alignment,
        center_axes_alignment,
        excluded,
    }
}

/// Averages dimension and radius over manifolds and attaches both alignment
/// measures. Single-point manifolds count towards the radius average (as 0)
/// but are excluded from dimension and alignment.
pub fn summarize_geometry(
    set: &ManifoldSet,
    k: usize,
    centering: Centering,
) -> Result<GeometrySummary> {
    let parts = geometry_parts(set, k, centering, GeometryRequest::ALL);
    Ok(GeometrySummary {
        mean_dimension: parts.mean_dimension?,
        mean_radius: parts.mean_radius?,
        axes_alignment: parts.axes_alignment?,
        center_axes_alignment: parts.center_axes_alignment?,
        excluded: parts.excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cloud(rows: &[&[f64]]) -> PointCloud {
        PointCloud::from_rows(rows).unwrap()
    }

    /// Symmetric pairs ±a along coordinate axes; the centered covariance then
    /// has eigenvalues exactly `lambdas` (each pair contributes 2a²/(m-1)).
    fn with_eigenvalues(lambdas: &[f64], dim: usize) -> PointCloud {
        let m = 2 * lambdas.len();
        let mut rows = Vec::new();
        for (i, l) in lambdas.iter().enumerate() {
            let a = (l * (m - 1) as f64 / 2.0).sqrt();
            for s in [1.0, -1.0] {
                let mut r = vec![0.0; dim];
                r[i] = s * a;
                rows.push(r);
            }
        }
        PointCloud::from_rows(&rows).unwrap()
    }

    #[test]
    fn pr_fixtures() {
        let two = with_eigenvalues(&[1.0, 1.0], 4);
        assert_relative_eq!(
            participation_ratio(&two).unwrap(),
            2.0,
            max_relative = 1e-12
        );
        let skew = with_eigenvalues(&[4.0, 1.0], 3);
        assert_relative_eq!(
            participation_ratio(&skew).unwrap(),
            25.0 / 17.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn pr_collapsed_and_degenerate() {
        let same = cloud(&[&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]]);
        assert_eq!(participation_ratio(&same).unwrap(), 1.0);
        assert!(matches!(
            participation_ratio(&cloud(&[&[1.0]])),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn radius_fixtures() {
        assert_eq!(manifold_radius(&cloud(&[&[3.0, -1.0]])).unwrap(), 0.0);
        let tri = cloud(&[&[0.0, 0.0], &[3.0, 0.0], &[0.0, 4.0]]);
        assert_eq!(manifold_radius(&tri).unwrap(), 5.0);
        assert_eq!(manifold_radius(&tri.scaled(2.0)).unwrap(), 10.0);
    }

    #[test]
    fn spectrum_sign_rule() {
        let s = spectrum(&cloud(&[&[-1.0, 0.0], &[1.0, 0.0]])).unwrap();
        assert_eq!(s.centroid.as_slice(), [0.0, 0.0]);
        assert_eq!(s.eigenvalues.len(), 1);
        assert_relative_eq!(s.eigenvalues[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(s.axis(0)[0], 1.0, max_relative = 1e-12);
        assert!(s.axis(0)[1].abs() < 1e-12);
    }

    #[test]
    fn spectrum_rank_one() {
        let dir = [0.6, -0.8, 0.0];
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|t| dir.iter().map(|d| d * (t as f64 - 2.0)).collect())
            .collect();
        let s = spectrum(&PointCloud::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(s.eigenvalues.len(), 3);
        assert!(s.eigenvalues[1] <= 1e-6 * s.eigenvalues[0]);
        assert_eq!(s.rank(), 1);
        // Sign rule: first coordinate positive.
        assert_relative_eq!(s.axis(0)[0], 0.6, max_relative = 1e-10);
        // Axes still orthonormal when completed in the null space.
        let gram = s.principal_axes.transpose() * &s.principal_axes;
        assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-9);
    }

    #[test]
    fn gram_path_axes_orthonormal() {
        // m = 4 <= D = 6: Gram route, only 3 axes kept.
        let p = cloud(&[
            &[1.0, 0.0, 2.0, 0.0, 0.0, 1.0],
            &[0.0, 1.0, 0.0, 3.0, 0.0, 0.0],
            &[2.0, 2.0, 1.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0, 4.0, 1.0],
        ]);
        let s = spectrum(&p).unwrap();
        assert_eq!(s.eigenvalues.len(), 3);
        let g = s.principal_axes.transpose() * &s.principal_axes;
        assert!((g - DMatrix::identity(3, 3)).amax() < 1e-9);
        assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    fn set(ms: Vec<PointCloud>) -> ManifoldSet {
        ManifoldSet::unnamed(ms).unwrap()
    }

    #[test]
    fn alignment_extremes() {
        // Both vary along x: identical top axis.
        let a = cloud(&[&[-1.0, 0.0, 5.0], &[1.0, 0.0, 5.0], &[0.0, 0.1, 5.0]]);
        let b_same = a.map(|r| vec![r[0] * 2.0, r[1], r[2] - 9.0]).unwrap();
        assert_relative_eq!(
            axes_alignment(&set(vec![a.clone(), b_same]), 1).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        // Orthogonal top axes: x versus y.
        let c = cloud(&[&[0.0, -1.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.1]]);
        assert!(axes_alignment(&set(vec![a, c]), 1).unwrap() < 1e-12);
    }

    #[test]
    fn center_axes_extremes() {
        // Centroid (3,0,0), variation along x.
        let along = cloud(&[
            &[2.0, 0.0, 0.0],
            &[4.0, 0.0, 0.0],
            &[3.0, 0.01, 0.0],
            &[3.0, -0.01, 0.0],
        ]);
        // Centroid (0,3,0), variation along x.
        let across = cloud(&[
            &[-1.0, 3.0, 0.0],
            &[1.0, 3.0, 0.0],
            &[0.0, 3.0, 0.01],
            &[0.0, 3.0, -0.01],
        ]);
        let v = center_axes_alignment(
            &set(vec![along.clone(), along.clone()]),
            1,
            Centering::Origin,
        )
        .unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-9);
        let v = center_axes_alignment(
            &set(vec![across.clone(), across.clone()]),
            1,
            Centering::Origin,
        )
        .unwrap();
        assert!(v < 1e-9);
        // Same set twice: global mean equals each centroid.
        let err =
            center_axes_alignment(&set(vec![across.clone(), across]), 1, Centering::GlobalMean)
                .unwrap_err();
        assert!(matches!(err, Error::DegenerateDirection { .. }));
    }

    #[test]
    fn rank_error_names_manifold() {
        let a = cloud(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let line = cloud(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]]);
        let s = ManifoldSet::new(vec![a, line], vec!["ok".into(), "flat".into()]).unwrap();
        match axes_alignment(&s, 2) {
            Err(Error::Rank { manifold, .. }) => assert_eq!(manifold, "flat"),
            other => panic!("expected rank error, got {other:?}"),
        }
        match axes_alignment(&s, 3) {
            Err(Error::Rank { manifold, .. }) => assert_eq!(manifold, "ok"),
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn summary_excludes_single_points() {
        let a = cloud(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let b = cloud(&[&[5.0, 5.0], &[7.0, 5.0], &[5.0, 6.0]]);
        let lone = cloud(&[&[9.0, 9.0]]);
        let s = ManifoldSet::new(
            vec![a.clone(), b.clone(), lone],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let summary = summarize_geometry(&s, 1, Centering::Origin).unwrap();
        assert_eq!(summary.excluded, ["c"]);
        let ra = manifold_radius(&a).unwrap();
        let rb = manifold_radius(&b).unwrap();
        assert_relative_eq!(summary.mean_radius, (ra + rb) / 3.0, max_relative = 1e-12);
        let d = (participation_ratio(&a).unwrap() + participation_ratio(&b).unwrap()) / 2.0;
        assert_relative_eq!(summary.mean_dimension, d, max_relative = 1e-12);
    }
}
