//! Manifold capacity `α = P / D*` by Monte-Carlo random projection.
//!
//! A trial draws a class `μ` uniformly and a Gaussian projection `S` into
//! `d_proj` dimensions, labels the projected points one-vs-rest, and asks
//! whether a hyperplane through the origin separates them. `F(d_proj)` is the
//! success rate; `D*` is the midpoint of a logistic fitted to `F` around its
//! 0.5 crossing.
//!
//! Every trial owns an RNG stream seeded from `(seed, d_proj, trial_index)`,
//! so estimates do not depend on thread count or scheduling.

mod cover;
mod fit;
pub mod simplex;

pub use cover::{cover_count, cover_probability};
pub use fit::{fit_logistic, LogisticFit};

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::ManifoldSet;
use simplex::separate_columns;

/// One-vs-rest labeling: `+1` for points of `class_index`, `-1` otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DichotomySpec {
    class_index: usize,
    signs: Vec<i8>,
}

impl DichotomySpec {
    pub fn one_vs_rest(labels: &[usize], class_index: usize) -> Result<Self> {
        let signs: Vec<i8> = labels
            .iter()
            .map(|&l| if l == class_index { 1 } else { -1 })
            .collect();
        if !signs.contains(&1) || !signs.contains(&-1) {
            return Err(Error::validation(
                "dichotomy",
                format!("class {class_index} leaves one side of the dichotomy empty"),
            ));
        }
        Ok(DichotomySpec { class_index, signs })
    }

    pub fn class_index(&self) -> usize {
        self.class_index
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }
}

/// `f_hat = successes / trials` at one projection dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FCurveEntry {
    pub d_proj: usize,
    pub trials: usize,
    pub successes: usize,
    pub f_hat: f64,
}

impl FCurveEntry {
    fn new(d_proj: usize, trials: usize, successes: usize) -> Self {
        FCurveEntry {
            d_proj,
            trials,
            successes,
            f_hat: successes as f64 / trials as f64,
        }
    }

    /// Binomial standard error of `f_hat`.
    pub fn std_error(&self) -> f64 {
        (self.f_hat * (1.0 - self.f_hat) / self.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FCurve {
    /// Strictly increasing in `d_proj`.
    pub entries: Vec<FCurveEntry>,
    pub seed: u64,
    pub n_points: usize,
    pub n_classes: usize,
}

impl FCurve {
    fn from_map(
        map: &BTreeMap<usize, FCurveEntry>,
        seed: u64,
        n_points: usize,
        n_classes: usize,
    ) -> Self {
        FCurve {
            entries: map.values().copied().collect(),
            seed,
            n_points,
            n_classes,
        }
    }

    pub fn get(&self, d_proj: usize) -> Option<&FCurveEntry> {
        self.entries.iter().find(|e| e.d_proj == d_proj)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityStatus {
    Ok,
    /// `F(1) >= 0.5`: the transition lies at or below one dimension.
    SaturatedLow,
    /// `F(D) < 0.5`: not separable even without projection.
    NotSeparableAtFullDim,
}

impl CapacityStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CapacityStatus::Ok => "ok",
            CapacityStatus::SaturatedLow => "saturated_low",
            CapacityStatus::NotSeparableAtFullDim => "not_separable_at_full_dim",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub alpha: f64,
    pub d_star: f64,
    pub status: CapacityStatus,
    /// Fine-grid evaluations the fit was made on (plus the full-dimension check).
    pub curve: FCurve,
    /// Coarse probes used to bracket the transition.
    pub probes: Vec<FCurveEntry>,
    pub fit: Option<LogisticFit>,
    /// Set when the fit residual exceeds `max_fit_residual`.
    pub fit_warning: Option<String>,
    pub points_per_class: Option<usize>,
    pub centered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CapacityConfig {
    pub n_coarse: usize,
    pub n_fine: usize,
    pub grid_size: usize,
    pub seed: u64,
    /// Cap on points per class before estimation; `None` keeps all.
    pub points_per_class: Option<usize>,
    /// Subtract the global mean before projecting.
    pub center: bool,
    pub max_fit_residual: f64,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        CapacityConfig {
            n_coarse: 50,
            n_fine: 200,
            grid_size: 9,
            seed: 0,
            points_per_class: Some(50),
            center: false,
            max_fit_residual: 0.15,
        }
    }
}

impl CapacityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_coarse == 0 || self.n_fine == 0 {
            return Err(Error::validation("trials", "trial counts must be >= 1"));
        }
        if self.grid_size < 2 {
            return Err(Error::validation("grid_size", "must be >= 2"));
        }
        if self.points_per_class == Some(0) {
            return Err(Error::validation("points_per_class", "must be >= 1"));
        }
        Ok(())
    }
}

/// Per-trial seed: SplitMix64 finalizer chained over the three coordinates.
pub fn trial_seed(seed: u64, d_proj: usize, trial_index: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(seed) ^ d_proj as u64) ^ trial_index as u64)
}

pub fn trial_rng(seed: u64, d_proj: usize, trial_index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(seed, d_proj, trial_index))
}

/// Decides whether some `w` satisfies `sign_i (w·z_i) >= 1` for all rows
/// `z_i` of `points` (`N x d`).
pub fn is_separable(points: &DMatrix<f64>, signs: &[i8]) -> Result<bool> {
    let (n, d) = points.shape();
    if n < 2 || d == 0 {
        return Err(Error::validation(
            "points",
            format!("need N >= 2 and d >= 1, got {n}x{d}"),
        ));
    }
    if signs.len() != n {
        return Err(Error::validation(
            "signs",
            format!("{} signs for {n} points", signs.len()),
        ));
    }
    if signs.iter().any(|s| *s != 1 && *s != -1) {
        return Err(Error::validation("signs", "entries must be +1 or -1"));
    }
    if !signs.contains(&1) || !signs.contains(&-1) {
        return Err(Error::validation("signs", "both signs must be present"));
    }
    let mut y = points.transpose();
    for (mut col, &s) in y.column_iter_mut().zip(signs) {
        if s < 0 {
            col.neg_mut();
        }
    }
    Ok(separate_columns(&y)?.is_separable())
}

/// Outcome of one projection trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub class_index: usize,
    pub separable: bool,
}

/// Stacked points of a manifold set in a coordinate system with at most
/// `N` rows.
///
/// For `D > N` the points are replaced by the `R` factor of `Xᵀ = Q R`. A
/// Gaussian `S` (`d x D`) acting on `Q R` equals in distribution a Gaussian
/// `d x N` matrix acting on `R`, so trials sample the same law at `O(d N²)`
/// rather than `O(d D N)` cost. Projecting to `d >= rank` dimensions is
/// injective with probability one and leaves separability unchanged, so
/// those trials test the unprojected points directly.
#[derive(Debug, Clone)]
pub struct ProjectionBasis {
    coords: DMatrix<f64>,
    labels: Vec<usize>,
    n_classes: usize,
    ambient_dim: usize,
}

impl ProjectionBasis {
    pub fn new(set: &ManifoldSet) -> Self {
        let (stacked, labels) = set.stacked();
        let n = stacked.len();
        let dim = stacked.dim();
        // Columns are points.
        let xt = DMatrix::from_column_slice(dim, n, stacked.as_slice());
        let coords = if dim > n { xt.qr().r() } else { xt };
        ProjectionBasis {
            coords,
            labels,
            n_classes: set.num_classes(),
            ambient_dim: dim,
        }
    }

    pub fn n_points(&self) -> usize {
        self.labels.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Draws `μ`, then (if needed) the projection, then tests separability.
    pub fn sample_trial<R: Rng + ?Sized>(
        &self,
        d_proj: usize,
        rng: &mut R,
    ) -> Result<TrialOutcome> {
        if d_proj == 0 || d_proj > self.ambient_dim {
            return Err(Error::validation(
                "d_proj",
                format!("must lie in 1..={}, got {d_proj}", self.ambient_dim),
            ));
        }
        let class_index = rng.random_range(0..self.n_classes);
        let r = self.coords.nrows();
        let mut z = if d_proj >= r {
            self.coords.clone()
        } else {
            let mut g = DMatrix::<f64>::zeros(d_proj, r);
            // Row-major draw order.
            for i in 0..d_proj {
                for j in 0..r {
                    g[(i, j)] = rng.sample(StandardNormal);
                }
            }
            g * &self.coords
        };
        for (mut col, &l) in z.column_iter_mut().zip(&self.labels) {
            if l != class_index {
                col.neg_mut();
            }
        }
        let separable = separate_columns(&z)
            .map_err(|e| Error::Estimator(format!("d_proj={d_proj}, class={class_index}: {e}")))?
            .is_separable();
        Ok(TrialOutcome {
            class_index,
            separable,
        })
    }

    pub fn trial(&self, d_proj: usize, seed: u64, trial_index: usize) -> Result<TrialOutcome> {
        let mut rng = trial_rng(seed, d_proj, trial_index);
        self.sample_trial(d_proj, &mut rng).map_err(|e| match e {
            Error::Estimator(msg) => {
                Error::Estimator(format!("seed={seed}, trial={trial_index}, {msg}"))
            }
            other => other,
        })
    }

    pub fn estimate_f(&self, d_proj: usize, n_trials: usize, seed: u64) -> Result<FCurveEntry> {
        if n_trials == 0 {
            return Err(Error::validation("n_trials", "must be >= 1"));
        }
        let outcomes: Vec<Result<TrialOutcome>> = (0..n_trials)
            .into_par_iter()
            .map(|t| self.trial(d_proj, seed, t))
            .collect();
        let mut successes = 0;
        for o in outcomes {
            successes += usize::from(o?.separable);
        }
        Ok(FCurveEntry::new(d_proj, n_trials, successes))
    }
}

/// One trial on `set`; see [`ProjectionBasis::sample_trial`].
pub fn sample_trial<R: Rng + ?Sized>(
    set: &ManifoldSet,
    d_proj: usize,
    rng: &mut R,
) -> Result<bool> {
    Ok(ProjectionBasis::new(set)
        .sample_trial(d_proj, rng)?
        .separable)
}

pub fn estimate_f(
    set: &ManifoldSet,
    d_proj: usize,
    n_trials: usize,
    seed: u64,
) -> Result<FCurveEntry> {
    ProjectionBasis::new(set).estimate_f(d_proj, n_trials, seed)
}

/// `grid_size` integers spread evenly over `[lo, hi]`, deduplicated.
fn integer_grid(lo: usize, hi: usize, grid_size: usize) -> Vec<usize> {
    if hi - lo < grid_size {
        return (lo..=hi).collect();
    }
    let mut out: Vec<usize> = (0..grid_size)
        .map(|i| {
            let t = i as f64 / (grid_size - 1) as f64;
            (lo as f64 + t * (hi - lo) as f64).round() as usize
        })
        .collect();
    out.dedup();
    out
}

struct Search<'a> {
    basis: &'a ProjectionBasis,
    seed: u64,
    n_coarse: usize,
    n_fine: usize,
    coarse: BTreeMap<usize, FCurveEntry>,
    fine: BTreeMap<usize, FCurveEntry>,
}

impl Search<'_> {
    fn coarse(&mut self, d: usize) -> Result<f64> {
        if let Some(e) = self.coarse.get(&d) {
            return Ok(e.f_hat);
        }
        let e = self.basis.estimate_f(d, self.n_coarse, self.seed)?;
        self.coarse.insert(d, e);
        Ok(e.f_hat)
    }

    fn fine(&mut self, d: usize) -> Result<f64> {
        if let Some(e) = self.fine.get(&d) {
            return Ok(e.f_hat);
        }
        let e = self.basis.estimate_f(d, self.n_fine, self.seed)?;
        self.fine.insert(d, e);
        Ok(e.f_hat)
    }
}

/// Brackets the 0.5 crossing of `F` with coarse probes (doubling, then
/// bisection), widens the bracket to where the coarse estimate leaves
/// `[0.1, 0.9]`, evaluates an even grid across it with `n_fine` trials per
/// point and fits a logistic. `D*` is the fitted midpoint.
pub fn find_critical_dimension(
    set: &ManifoldSet,
    config: &CapacityConfig,
) -> Result<CapacityEstimate> {
    config.validate()?;
    let basis = ProjectionBasis::new(set);
    let p = set.num_classes() as f64;
    let dim = basis.ambient_dim();
    let mut search = Search {
        basis: &basis,
        seed: config.seed,
        n_coarse: config.n_coarse,
        n_fine: config.n_fine,
        coarse: BTreeMap::new(),
        fine: BTreeMap::new(),
    };

    let finish = |search: Search<'_>,
                  status: CapacityStatus,
                  d_star: f64,
                  fit: Option<LogisticFit>,
                  fit_warning: Option<String>| CapacityEstimate {
        alpha: p / d_star,
        d_star,
        status,
        curve: FCurve::from_map(
            &search.fine,
            config.seed,
            basis.n_points(),
            basis.n_classes(),
        ),
        probes: search.coarse.values().copied().collect(),
        fit,
        fit_warning,
        points_per_class: None,
        centered: false,
    };

    if search.coarse(1)? >= 0.5 {
        return Ok(finish(
            search,
            CapacityStatus::SaturatedLow,
            1.0,
            None,
            None,
        ));
    }
    if dim < 2 || search.fine(dim)? < 0.5 {
        return Ok(finish(
            search,
            CapacityStatus::NotSeparableAtFullDim,
            dim as f64,
            None,
            None,
        ));
    }

    // Invariant: F(lo) < 0.5 <= F(hi), with F(dim) known from the fine check.
    let (mut lo, mut hi) = (1usize, dim);
    let mut d = 2;
    while d < dim {
        if search.coarse(d)? >= 0.5 {
            hi = d;
            break;
        }
        lo = d;
        d *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if search.coarse(mid)? >= 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let mut low = lo;
    let mut step = 1;
    while low > 1 && search.coarse(low)? > 0.1 {
        low = low.saturating_sub(step).max(1);
        step *= 2;
    }
    let mut high = hi;
    step = 1;
    while high < dim {
        let f = if high == dim {
            search.fine(high)?
        } else {
            search.coarse(high)?
        };
        if f >= 0.9 {
            break;
        }
        high = (high + step).min(dim);
        step *= 2;
    }

    let grid = integer_grid(low, high, config.grid_size);
    let mut points = Vec::with_capacity(grid.len());
    for &d in &grid {
        points.push((d as f64, search.fine(d)?));
    }
    let fit = fit_logistic(&points)?;
    let fit_warning = (fit.residual > config.max_fit_residual).then(|| {
        format!(
            "logistic fit residual {:.4} exceeds {:.4}",
            fit.residual, config.max_fit_residual
        )
    });
    let (status, d_star) = if fit.midpoint <= 1.0 {
        (CapacityStatus::SaturatedLow, 1.0)
    } else if fit.midpoint >= dim as f64 {
        (CapacityStatus::NotSeparableAtFullDim, dim as f64)
    } else {
        (CapacityStatus::Ok, fit.midpoint)
    };
    Ok(finish(search, status, d_star, Some(fit), fit_warning))
}

/// Applies the per-class cap and optional centering from `config`, then
/// estimates `α = P / D*`.
pub fn manifold_capacity(set: &ManifoldSet, config: &CapacityConfig) -> Result<CapacityEstimate> {
    config.validate()?;
    let mut work = match config.points_per_class {
        Some(cap) => set.subsampled(cap),
        None => set.clone(),
    };
    if config.center {
        work = work.centered();
    }
    let mut est = find_critical_dimension(&work, config)?;
    est.points_per_class = config.points_per_class;
    est.centered = config.center;
    Ok(est)
}
