use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{LayerReport, Metric};
use crate::embx::EmbxHeader;
use crate::error::{Error, Result};

/// Baseline magnitudes below this are treated as zero.
const ZERO_BASELINE: f64 = 1e-12;

const SCHEME_SUFFIXES: [&str; 3] = ["_gold", "_letter", "_shuffled"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Coherence {
    #[serde(rename = "coherent")]
    Coherent,
    #[serde(rename = "incoherent")]
    Incoherent,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl Coherence {
    pub fn as_str(&self) -> &'static str {
        match self {
            Coherence::Coherent => "coherent",
            Coherence::Incoherent => "incoherent",
            Coherence::NotApplicable => "n/a",
        }
    }
}

/// Task a label scheme belongs to: `sentiment_gold`, `sentiment_letter` and
/// `sentiment_shuffled` all map to `sentiment`.
pub fn task_of_scheme(scheme: &str) -> &str {
    SCHEME_SUFFIXES
        .iter()
        .find_map(|s| scheme.strip_suffix(s))
        .filter(|t| !t.is_empty())
        .unwrap_or(scheme)
}

/// Coherent iff the prompted task is the task whose labels define the
/// manifolds. Both names must belong to `declared`.
pub fn tag_coherence(
    prompt_task: &str,
    manifold_task: &str,
    declared: &BTreeSet<String>,
) -> Result<Coherence> {
    for t in [prompt_task, manifold_task] {
        if !declared.contains(t) {
            return Err(Error::UnknownTask(t.to_string()));
        }
    }
    Ok(if prompt_task == manifold_task {
        Coherence::Coherent
    } else {
        Coherence::Incoherent
    })
}

/// Every (prompt task, manifold task) pair over `tasks`, tagged.
pub fn coherence_pairs(tasks: &BTreeSet<String>) -> Vec<(String, String, Coherence)> {
    let mut out = Vec::with_capacity(tasks.len() * tasks.len());
    for p in tasks {
        for m in tasks {
            let c = tag_coherence(p, m, tasks).expect("both drawn from the set");
            out.push((p.clone(), m.clone(), c));
        }
    }
    out
}

/// Layer reports of one condition (one input file), possibly across several
/// label schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReports {
    pub descriptor: String,
    /// Task the prompt asked for; `None` for raw sentences.
    pub prompt_task: Option<String>,
    /// Tasks named by the header's label schemes plus the prompt task.
    pub declared_tasks: BTreeSet<String>,
    /// Descriptor with `demo_seed` replaced by `mean`, when the condition has
    /// a demonstration seed. Conditions sharing it are averaged.
    pub mean_group: Option<String>,
    pub reports: Vec<LayerReport>,
}

impl ConditionReports {
    pub fn new(header: &EmbxHeader, reports: Vec<LayerReport>) -> Self {
        let prompt_task = header
            .condition_params
            .get("task")
            .and_then(|v| v.as_str())
            .map(str::to_string);
        let mut declared_tasks: BTreeSet<String> = header
            .label_schemes
            .keys()
            .map(|s| task_of_scheme(s).to_string())
            .collect();
        declared_tasks.extend(prompt_task.clone());
        let mean_group = header.condition_params.contains_key("demo_seed").then(|| {
            let mut h = header.clone();
            h.condition_params
                .insert("demo_seed".into(), serde_json::Value::String("mean".into()));
            h.condition_descriptor()
        });
        ConditionReports {
            descriptor: header.condition_descriptor(),
            prompt_task,
            declared_tasks,
            mean_group,
            reports,
        }
    }

    fn coherence(&self, scheme: &str) -> Result<Coherence> {
        match &self.prompt_task {
            None => Ok(Coherence::NotApplicable),
            Some(p) => tag_coherence(p, task_of_scheme(scheme), &self.declared_tasks),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub condition: String,
    pub scheme: String,
    pub coherence: Coherence,
    pub layer: usize,
    pub metric: Metric,
    pub value: Option<f64>,
    pub normalized_value: Option<f64>,
    pub status: String,
}

impl ComparisonRow {
    pub(crate) fn sort_key(&self) -> (&str, &str, usize, Metric) {
        (&self.condition, &self.scheme, self.layer, self.metric)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    }

    /// True when any row carries a non-`ok` status.
    pub fn is_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.status != "ok")
    }
}

/// Unnormalized rows of one condition.
pub fn rows_for_condition(cond: &ConditionReports) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::new();
    for rep in &cond.reports {
        let coherence = cond.coherence(&rep.scheme)?;
        for (&metric, res) in &rep.metrics {
            let mut status = res.status.clone();
            let value = match res.value {
                Some(v) if !v.is_finite() => {
                    add_flag(&mut status, "non_finite");
                    None
                }
                v => v,
            };
            rows.push(ComparisonRow {
                condition: cond.descriptor.clone(),
                scheme: rep.scheme.clone(),
                coherence,
                layer: rep.layer,
                metric,
                value,
                normalized_value: None,
                status,
            });
        }
    }
    Ok(rows)
}

fn add_flag(status: &mut String, flag: &str) {
    if status == "ok" {
        *status = flag.to_string();
    } else {
        status.push(';');
        status.push_str(flag);
    }
}

type Key = (usize, Metric, String);

fn apply_baseline(row: &mut ComparisonRow, baseline: &BTreeMap<Key, Option<f64>>) -> Result<()> {
    let key = (row.layer, row.metric, row.scheme.clone());
    let Some(&base) = baseline.get(&key) else {
        return Err(Error::Alignment {
            layer: row.layer,
            metric: row.metric.to_string(),
            scheme: row.scheme.clone(),
        });
    };
    match (row.value, base) {
        (_, None) => add_flag(&mut row.status, "baseline_unavailable"),
        (_, Some(b)) if b.abs() < ZERO_BASELINE => add_flag(&mut row.status, "baseline_zero"),
        (Some(v), Some(b)) => row.normalized_value = Some(v / b),
        (None, Some(_)) => {}
    }
    Ok(())
}

/// Normalizes every condition by `baseline`, matching on
/// (layer, metric, scheme). The baseline's own rows are included and
/// normalize to 1. Conditions that share a `mean_group` also get mean rows.
pub fn normalize(
    conditions: &[ConditionReports],
    baseline: &ConditionReports,
) -> Result<ComparisonReport> {
    let base_rows = rows_for_condition(baseline)?;
    let base_map: BTreeMap<Key, Option<f64>> = base_rows
        .iter()
        .map(|r| ((r.layer, r.metric, r.scheme.clone()), r.value))
        .collect();

    let mut rows = Vec::new();
    let mut groups: BTreeMap<(String, String, usize, Metric), Vec<ComparisonRow>> = BTreeMap::new();
    let mut group_sizes: BTreeMap<String, usize> = BTreeMap::new();
    for cond in conditions
        .iter()
        .filter(|c| c.descriptor != baseline.descriptor)
    {
        let cond_rows = rows_for_condition(cond)?;
        if let Some(g) = &cond.mean_group {
            *group_sizes.entry(g.clone()).or_default() += 1;
            for r in &cond_rows {
                groups
                    .entry((g.clone(), r.scheme.clone(), r.layer, r.metric))
                    .or_default()
                    .push(r.clone());
            }
        }
        rows.extend(cond_rows);
    }
    rows.extend(base_rows);

    for ((group, scheme, layer, metric), members) in groups {
        let expected = group_sizes[&group];
        if expected < 2 {
            continue;
        }
        let values: Vec<f64> = members.iter().filter_map(|r| r.value).collect();
        let coherence = if members.iter().all(|r| r.coherence == members[0].coherence) {
            members[0].coherence
        } else {
            Coherence::NotApplicable
        };
        let (value, status) = if values.len() == expected && members.len() == expected {
            (
                Some(values.iter().sum::<f64>() / expected as f64),
                "ok".to_string(),
            )
        } else {
            (
                None,
                format!("incomplete_mean:{}/{}", values.len(), expected),
            )
        };
        rows.push(ComparisonRow {
            condition: group,
            scheme,
            coherence,
            layer,
            metric,
            value,
            normalized_value: None,
            status,
        });
    }

    for row in &mut rows {
        apply_baseline(row, &base_map)?;
    }
    let mut report = ComparisonReport { rows };
    report.sort();
    report.rows.dedup_by(|a, b| a.sort_key() == b.sort_key());
    Ok(report)
}
