// Normalizing prompted conditions by the raw-sentence baseline, with each
// row tagged coherent (prompted task defines the manifolds) or incoherent.

use std::collections::BTreeSet;
use std::io;

use manifold_capacity::embx::{Condition, EmbeddingTensor};
use manifold_capacity::pipeline::{
    analyze, coherence_pairs, emit, normalize, AnalysisConfig, ConditionReports, Format, Metric,
};
use manifold_capacity::synth::{generate_gaussian_manifolds, SynthSpec};
use manifold_capacity::Result;

const TASKS: [&str; 3] = ["sentiment", "topic", "emotion"];

/// A tensor whose points carry one gold label scheme per task. `radius`
/// stands in for how tightly the prompt clusters the classes.
fn tensor(radius: f64, condition: Condition, task: Option<&str>) -> Result<EmbeddingTensor> {
    let spec = SynthSpec {
        n_classes: 3,
        points_per_class: 30,
        ambient_dim: 32,
        intrinsic_dim: 2,
        radius_scale: radius,
        seed: 4,
        ..SynthSpec::default()
    };
    let mut t = generate_gaussian_manifolds(&spec)?.to_tensor("sentiment_gold")?;
    let base = t.header.labels("sentiment_gold")?.to_vec();
    // Other schemes relabel the same points by rotating class names.
    for (shift, name) in [(1, "topic_gold"), (2, "emotion_gold")] {
        let labels = base
            .iter()
            .enumerate()
            .map(|(i, l)| {
                if i % 3 == shift {
                    format!("{l}_x")
                } else {
                    l.clone()
                }
            })
            .collect();
        t.header.label_schemes.insert(name.into(), labels);
    }
    t.header.condition = condition;
    if let Some(task) = task {
        t.header.condition_params.insert("task".into(), task.into());
    }
    Ok(t)
}

fn reports(t: &EmbeddingTensor) -> Result<ConditionReports> {
    let mut all = Vec::new();
    for task in TASKS {
        let config = AnalysisConfig {
            scheme: format!("{task}_gold"),
            metrics: [Metric::Radius, Metric::Dimension].into_iter().collect(),
            ..AnalysisConfig::default()
        };
        all.extend(analyze(t, &config)?);
    }
    Ok(ConditionReports::new(&t.header, all))
}

pub fn run() -> Result<()> {
    let tasks: BTreeSet<String> = TASKS.iter().map(|s| s.to_string()).collect();
    for (prompt, manifold, tag) in coherence_pairs(&tasks) {
        eprintln!(
            "{prompt:>9} prompt, {manifold:>9} manifolds: {}",
            tag.as_str()
        );
    }

    let baseline = reports(&tensor(1.0, Condition::Raw, None)?)?;
    let prompted = reports(&tensor(0.6, Condition::Instruction, Some("sentiment"))?)?;
    let report = normalize(&[prompted], &baseline)?;
    emit(&report, Format::Csv, io::stdout().lock())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
