//! Layerwise analysis of EMBX tensors, baseline normalization and
//! plot-ready output.

mod compare;
mod emit;

pub use compare::{
    coherence_pairs, normalize, rows_for_condition, tag_coherence, task_of_scheme, Coherence,
    ComparisonReport, ComparisonRow, ConditionReports,
};
pub use emit::{emit, emit_to_vec, format_sig9, parse_json_rows, Format, CSV_HEADER};

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::capacity::{manifold_capacity, CapacityConfig, CapacityEstimate, CapacityStatus};
use crate::embx::{write_embx, EmbeddingTensor};
use crate::error::{Error, Result};
use crate::manifold::group_manifolds;
use crate::stats::{geometry_parts, Centering, GeometryRequest, DEFAULT_K_AXES};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Capacity,
    Dimension,
    Radius,
    AxesAlignment,
    CenterAxesAlignment,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Capacity,
        Metric::Dimension,
        Metric::Radius,
        Metric::AxesAlignment,
        Metric::CenterAxesAlignment,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Capacity => "capacity",
            Metric::Dimension => "dimension",
            Metric::Radius => "radius",
            Metric::AxesAlignment => "axes_alignment",
            Metric::CenterAxesAlignment => "center_axes_alignment",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::validation("metrics", format!("unknown metric {s:?}")))
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `all` or an explicit list of layer indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LayerSelection {
    #[default]
    All,
    List(Vec<usize>),
}

impl LayerSelection {
    /// Sorted, deduplicated layer indices; errors on out-of-range entries.
    pub fn resolve(&self, num_layers: usize) -> Result<Vec<usize>> {
        match self {
            LayerSelection::All => Ok((0..num_layers).collect()),
            LayerSelection::List(list) => {
                let set: BTreeSet<usize> = list.iter().copied().collect();
                if let Some(&bad) = set.iter().find(|&&l| l >= num_layers) {
                    return Err(Error::Index {
                        index: bad,
                        len: num_layers,
                    });
                }
                Ok(set.into_iter().collect())
            }
        }
    }
}

impl FromStr for LayerSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "all" {
            return Ok(LayerSelection::All);
        }
        let list = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::validation("layers", format!("bad layer index {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if list.is_empty() {
            return Err(Error::validation("layers", "empty layer list"));
        }
        Ok(LayerSelection::List(list))
    }
}

impl TryFrom<String> for LayerSelection {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LayerSelection> for String {
    fn from(l: LayerSelection) -> String {
        match l {
            LayerSelection::All => "all".into(),
            LayerSelection::List(v) => v
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(","),
        }
    }
}

/// Every knob of one analysis run. Loadable from TOML; all fields optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub scheme: String,
    pub layers: LayerSelection,
    pub metrics: BTreeSet<Metric>,
    pub k_axes: usize,
    pub centering: Centering,
    /// Per-class cap applied before capacity estimation; 0 or absent keeps
    /// every point.
    pub points_per_class: Option<usize>,
    pub seed: u64,
    pub trials_coarse: usize,
    pub trials_fine: usize,
    pub grid: usize,
    /// Subtract the global mean before capacity estimation.
    pub center_capacity: bool,
    pub max_fit_residual: f64,
    /// Worker threads; `None` uses the global pool. Never affects results.
    pub workers: Option<usize>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let cap = CapacityConfig::default();
        AnalysisConfig {
            scheme: String::new(),
            layers: LayerSelection::All,
            metrics: Metric::ALL.into_iter().collect(),
            k_axes: DEFAULT_K_AXES,
            centering: Centering::Origin,
            points_per_class: cap.points_per_class,
            seed: cap.seed,
            trials_coarse: cap.n_coarse,
            trials_fine: cap.n_fine,
            grid: cap.grid_size,
            center_capacity: cap.center,
            max_fit_residual: cap.max_fit_residual,
            workers: None,
        }
    }
}

impl AnalysisConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::validation("config", e.to_string()))
    }

    pub fn capacity_config(&self) -> CapacityConfig {
        CapacityConfig {
            n_coarse: self.trials_coarse,
            n_fine: self.trials_fine,
            grid_size: self.grid,
            seed: self.seed,
            points_per_class: self.points_per_class.filter(|&c| c > 0),
            center: self.center_capacity,
            max_fit_residual: self.max_fit_residual,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scheme.is_empty() {
            return Err(Error::validation("scheme", "no label scheme given"));
        }
        if self.metrics.is_empty() {
            return Err(Error::validation("metrics", "at least one metric required"));
        }
        if self.k_axes == 0 {
            return Err(Error::validation("k_axes", "must be >= 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::validation("workers", "must be >= 1"));
        }
        self.capacity_config().validate()
    }

    /// SHA-256 of the canonical JSON form, ignoring `workers`.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.workers = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub input_digest: String,
    pub config_digest: String,
    pub seed: u64,
    pub tool_version: String,
}

/// One metric at one layer: a value with status `ok` (or a flag such as
/// `not_separable_at_full_dim`), or no value and an `error: ...` status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub value: Option<f64>,
    pub status: String,
}

impl MetricResult {
    fn from_result(r: Result<f64>) -> Self {
        match r {
            Ok(v) => MetricResult {
                value: Some(v),
                status: "ok".into(),
            },
            Err(e) => MetricResult {
                value: None,
                status: format!("error: {e}"),
            },
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub layer: usize,
    pub scheme: String,
    pub metrics: BTreeMap<Metric, MetricResult>,
    /// Layer-level flags, e.g. classes excluded as single points.
    pub flags: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity: Option<CapacityEstimate>,
    pub provenance: Provenance,
}

impl LayerReport {
    pub fn value(&self, metric: Metric) -> Option<f64> {
        self.metrics.get(&metric).and_then(|m| m.value)
    }

    /// True when any metric carries a flag or an error.
    pub fn is_flagged(&self) -> bool {
        self.metrics.values().any(|m| !m.is_ok())
    }
}

struct HashWriter(Sha256);

impl Write for HashWriter {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.update(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

/// SHA-256 of the tensor's EMBX encoding (equal to the digest of the file it
/// was read from).
pub fn tensor_digest(tensor: &EmbeddingTensor) -> Result<String> {
    let mut w = HashWriter(Sha256::new());
    write_embx(tensor, &mut w)?;
    Ok(hex::encode(w.0.finalize()))
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::validation("workers", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn analyze_layer(
    tensor: &EmbeddingTensor,
    layer: usize,
    config: &AnalysisConfig,
    provenance: &Provenance,
) -> Result<LayerReport> {
    let set = group_manifolds(tensor, layer, &config.scheme)?;
    let wants = |m: Metric| config.metrics.contains(&m);
    let request = GeometryRequest {
        dimension: wants(Metric::Dimension),
        radius: wants(Metric::Radius),
        axes_alignment: wants(Metric::AxesAlignment),
        center_axes_alignment: wants(Metric::CenterAxesAlignment),
    };
    let parts = geometry_parts(&set, config.k_axes, config.centering, request);

    let mut metrics = BTreeMap::new();
    let mut flags: Vec<String> = parts
        .excluded
        .iter()
        .map(|name| format!("excluded_single_point:{name}"))
        .collect();
    for (metric, part) in [
        (Metric::Dimension, parts.mean_dimension),
        (Metric::Radius, parts.mean_radius),
        (Metric::AxesAlignment, parts.axes_alignment),
        (Metric::CenterAxesAlignment, parts.center_axes_alignment),
    ] {
        if wants(metric) {
            metrics.insert(metric, MetricResult::from_result(part));
        }
    }

    let mut capacity = None;
    if wants(Metric::Capacity) {
        let result = match manifold_capacity(&set, &config.capacity_config()) {
            Ok(est) => {
                let mut status = est.status.as_str().to_string();
                if let Some(w) = &est.fit_warning {
                    flags.push(format!("capacity_fit_warning:{w}"));
                    if est.status == CapacityStatus::Ok {
                        status = "fit_warning".into();
                    }
                }
                let r = MetricResult {
                    value: Some(est.alpha),
                    status,
                };
                capacity = Some(est);
                r
            }
            Err(e) => MetricResult::from_result(Err(e)),
        };
        metrics.insert(Metric::Capacity, result);
    }

    Ok(LayerReport {
        layer,
        scheme: config.scheme.clone(),
        metrics,
        flags,
        capacity,
        provenance: provenance.clone(),
    })
}

/// Computes the requested metrics for every selected layer, in ascending
/// layer order. Estimation problems become flagged entries rather than
/// errors; only configuration problems (unknown scheme, bad layer) fail.
pub fn analyze(tensor: &EmbeddingTensor, config: &AnalysisConfig) -> Result<Vec<LayerReport>> {
    config.validate()?;
    tensor.header.labels(&config.scheme)?;
    let layers = config.layers.resolve(tensor.header.shape.num_layers)?;
    let provenance = Provenance {
        input_digest: tensor_digest(tensor)?,
        config_digest: config.digest(),
        seed: config.seed,
        tool_version: TOOL_VERSION.to_string(),
    };
    with_workers(config.workers, || {
        layers
            .par_iter()
            .map(|&l| analyze_layer(tensor, l, config, &provenance))
            .collect::<Result<Vec<_>>>()
    })?
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_selection_parsing() {
        assert_eq!(
            "all".parse::<LayerSelection>().unwrap(),
            LayerSelection::All
        );
        let l: LayerSelection = "3, 1,3".parse().unwrap();
        assert_eq!(l.resolve(4).unwrap(), vec![1, 3]);
        assert!(matches!(l.resolve(3), Err(Error::Index { index: 3, .. })));
        assert!("1,x".parse::<LayerSelection>().is_err());
    }

    #[test]
    fn metric_names_roundtrip() {
        for m in Metric::ALL {
            assert_eq!(m.as_str().parse::<Metric>().unwrap(), m);
        }
        assert!("volume".parse::<Metric>().is_err());
    }

    #[test]
    fn config_from_toml() {
        let c = AnalysisConfig::from_toml(
            r#"
            scheme = "sentiment_gold"
            layers = "0,2"
            metrics = ["radius", "capacity"]
            k_axes = 3
            centering = "global_mean"
            seed = 7
            "#,
        )
        .unwrap();
        assert_eq!(c.layers, LayerSelection::List(vec![0, 2]));
        assert_eq!(c.metrics.len(), 2);
        assert_eq!(c.centering, Centering::GlobalMean);
        assert_eq!(c.trials_fine, 200);
        assert!(AnalysisConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn digest_ignores_workers() {
        let mut a = AnalysisConfig {
            scheme: "s".into(),
            ..AnalysisConfig::default()
        };
        let d = a.digest();
        a.workers = Some(8);
        assert_eq!(a.digest(), d);
        a.seed = 1;
        assert_ne!(a.digest(), d);
    }

    #[test]
    fn empty_metrics_rejected() {
        let c = AnalysisConfig {
            scheme: "s".into(),
            metrics: BTreeSet::new(),
            ..AnalysisConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
