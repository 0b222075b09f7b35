// Layerwise analysis of a multi-layer tensor, emitted as CSV.
//
// The synthetic "model" shrinks its class manifolds layer by layer, so
// capacity rises with depth.

use std::io;

use manifold_capacity::embx::{Condition, EmbeddingKind, EmbeddingTensor, EmbxHeader, Shape};
use manifold_capacity::pipeline::{
    analyze, emit, rows_for_condition, AnalysisConfig, ComparisonReport, ConditionReports, Format,
};
use manifold_capacity::synth::{generate_gaussian_manifolds, SynthSpec};
use manifold_capacity::Result;

/// Stacks one synthetic set per radius into a tensor with one layer each.
pub fn shrinking_layers(radii: &[f64], scheme: &str, seed: u64) -> Result<EmbeddingTensor> {
    let sets = radii
        .iter()
        .map(|&r| {
            let spec = SynthSpec {
                n_classes: 4,
                points_per_class: 25,
                ambient_dim: 48,
                intrinsic_dim: 3,
                radius_scale: r,
                seed,
                ..SynthSpec::default()
            };
            Ok(generate_gaussian_manifolds(&spec)?.set)
        })
        .collect::<Result<Vec<_>>>()?;
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
    let data = sets
        .iter()
        .flat_map(|s| {
            s.stacked()
                .0
                .as_slice()
                .iter()
                .map(|&v| v as f32)
                .collect::<Vec<_>>()
        })
        .collect();
    EmbeddingTensor::new(header, data)
}

pub fn run() -> Result<()> {
    let tensor = shrinking_layers(&[2.0, 1.0, 0.5, 0.25], "toy", 9)?;
    let config = AnalysisConfig {
        scheme: "toy".into(),
        k_axes: 3,
        ..AnalysisConfig::default()
    };
    let reports = analyze(&tensor, &config)?;
    eprintln!("input digest {}", reports[0].provenance.input_digest);
    let cond = ConditionReports::new(&tensor.header, reports);
    let report = ComparisonReport {
        rows: rows_for_condition(&cond)?,
    };
    emit(&report, Format::Csv, io::stdout().lock())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
