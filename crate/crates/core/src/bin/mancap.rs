//! Command-line front end. Exit codes: 0 success, 1 validation error,
//! 2 results written but flagged, 3 I/O error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use manifold_capacity::capacity::{
    cover_probability, manifold_capacity, CapacityEstimate, CapacityStatus, ProjectionBasis,
};
use manifold_capacity::embx::{read_embx_file, write_embx_file, EmbeddingTensor};
use manifold_capacity::manifold::group_manifolds;
use manifold_capacity::pipeline::{
    analyze, emit, normalize, rows_for_condition, with_workers, AnalysisConfig, ComparisonReport,
    ConditionReports, Format, LayerSelection, Metric,
};
use manifold_capacity::stats::Centering;
use manifold_capacity::synth::{
    generate_gaussian_manifolds, generate_point_classes, manifolds_to_tensor, SynthSpec,
};
use manifold_capacity::Error;

#[derive(Parser)]
#[command(
    name = "mancap",
    version,
    about = "Manifold capacity and geometry of layerwise embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Layerwise metrics for one or more EMBX files.
    Analyze(AnalyzeArgs),
    /// Metrics normalized by a baseline condition, tagged coherent/incoherent.
    Compare(CompareArgs),
    /// Write a synthetic EMBX file with controlled geometry.
    Synth(SynthArgs),
    /// Empirical separability of Gaussian points against the Cover count.
    ValidateCover(CoverArgs),
    /// Full capacity curve for one layer.
    CapacityCurve(CurveArgs),
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Declarative TOML config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Label scheme (comma-separated list accepted by `compare`).
    #[arg(long)]
    scheme: Option<String>,
    /// `all` or comma-separated indices.
    #[arg(long)]
    layers: Option<String>,
    /// Comma-separated subset of capacity,dimension,radius,axes_alignment,center_axes_alignment.
    #[arg(long)]
    metrics: Option<String>,
    #[arg(long)]
    k_axes: Option<usize>,
    /// Per-class cap for capacity; 0 keeps every point.
    #[arg(long)]
    points_per_class: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials_coarse: Option<usize>,
    #[arg(long)]
    trials_fine: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    /// origin | global-mean
    #[arg(long)]
    centering: Option<String>,
    /// Subtract the global mean before capacity estimation.
    #[arg(long)]
    center_capacity: bool,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// csv | json
    #[arg(long, default_value = "csv")]
    format: String,
    /// Defaults to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// EMBX files, one per condition.
    #[arg(long, num_args = 1.., required = true)]
    input: Vec<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// EMBX files, one per condition.
    #[arg(long, num_args = 1.., required = true)]
    input: Vec<PathBuf>,
    /// EMBX file of the raw-sentence condition.
    #[arg(long)]
    baseline: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "synthetic")]
    scheme: String,
    #[arg(long, default_value_t = 5)]
    classes: usize,
    #[arg(long, default_value_t = 50)]
    points: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    intrinsic_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 1.0)]
    centroid_scale: f64,
    /// Fraction of each class frame shared across classes.
    #[arg(long, default_value_t = 0.0)]
    shared_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// One standard-normal point per class instead of Gaussian clouds.
    #[arg(long)]
    point_classes: bool,
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long, value_delimiter = ',', default_value = "3,4,5,8")]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    d: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    /// Ambient dimension of the Gaussian points.
    #[arg(long, default_value_t = 200)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.04)]
    tolerance: f64,
}

#[derive(Args)]
struct CurveArgs {
    /// EMBX file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    layer: usize,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutputArgs,
}

enum Outcome {
    Clean,
    Flagged,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_io() {
        3
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => run_analyze(a),
        Command::Compare(a) => run_compare(a),
        Command::Synth(a) => run_synth(a),
        Command::ValidateCover(a) => run_cover(a),
        Command::CapacityCurve(a) => run_curve(a),
    };
    match result {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Flagged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("mancap: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

impl ConfigArgs {
    fn build(&self) -> Result<AnalysisConfig, Error> {
        let mut c = match &self.config {
            Some(p) => AnalysisConfig::from_toml(&std::fs::read_to_string(p)?)?,
            None => AnalysisConfig::default(),
        };
        if let Some(s) = &self.scheme {
            c.scheme = s.clone();
        }
        if let Some(l) = &self.layers {
            c.layers = l.parse::<LayerSelection>()?;
        }
        if let Some(m) = &self.metrics {
            c.metrics = m
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(str::parse::<Metric>)
                .collect::<Result<_, _>>()?;
        }
        if let Some(k) = self.k_axes {
            c.k_axes = k;
        }
        if let Some(p) = self.points_per_class {
            c.points_per_class = Some(p);
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(t) = self.trials_coarse {
            c.trials_coarse = t;
        }
        if let Some(t) = self.trials_fine {
            c.trials_fine = t;
        }
        if let Some(g) = self.grid {
            c.grid = g;
        }
        if let Some(s) = &self.centering {
            c.centering = s.parse::<Centering>()?;
        }
        if self.center_capacity {
            c.center_capacity = true;
        }
        if self.workers.is_some() {
            c.workers = self.workers;
        }
        Ok(c)
    }
}

fn schemes(config: &AnalysisConfig) -> Vec<String> {
    config
        .scheme
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Analyzes one tensor under every scheme in the config.
fn condition(tensor: &EmbeddingTensor, config: &AnalysisConfig) -> Result<ConditionReports, Error> {
    let names = schemes(config);
    if names.is_empty() {
        config.validate()?;
    }
    let mut reports = Vec::new();
    for scheme in names {
        let c = AnalysisConfig {
            scheme,
            ..config.clone()
        };
        reports.extend(analyze(tensor, &c)?);
    }
    Ok(ConditionReports::new(&tensor.header, reports))
}

fn write_output(
    out: &OutputArgs,
    f: impl FnOnce(&mut dyn Write) -> Result<(), Error>,
) -> Result<(), Error> {
    match &out.output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn emit_report(report: &ComparisonReport, out: &OutputArgs) -> Result<Outcome, Error> {
    let format: Format = out.format.parse()?;
    write_output(out, |w| emit(report, format, w))?;
    Ok(if report.is_flagged() {
        Outcome::Flagged
    } else {
        Outcome::Clean
    })
}

fn load(path: &Path) -> Result<EmbeddingTensor, Error> {
    read_embx_file(path)
}

fn run_analyze(a: AnalyzeArgs) -> Result<Outcome, Error> {
    let config = a.config.build()?;
    let mut report = ComparisonReport::default();
    for path in &a.input {
        let tensor = load(path)?;
        report
            .rows
            .extend(rows_for_condition(&condition(&tensor, &config)?)?);
    }
    emit_report(&report, &a.out)
}

fn run_compare(a: CompareArgs) -> Result<Outcome, Error> {
    let config = a.config.build()?;
    let baseline = condition(&load(&a.baseline)?, &config)?;
    let conditions = a
        .input
        .iter()
        .map(|p| condition(&load(p)?, &config))
        .collect::<Result<Vec<_>, Error>>()?;
    emit_report(&normalize(&conditions, &baseline)?, &a.out)
}

fn run_synth(a: SynthArgs) -> Result<Outcome, Error> {
    let tensor = if a.point_classes {
        manifolds_to_tensor(
            &generate_point_classes(a.classes, a.dim, a.seed)?,
            &a.scheme,
        )?
    } else {
        let spec = SynthSpec {
            n_classes: a.classes,
            points_per_class: a.points,
            ambient_dim: a.dim,
            intrinsic_dim: a.intrinsic_dim,
            radius_scale: a.radius,
            centroid_scale: a.centroid_scale,
            shared_axes_fraction: a.shared_fraction,
            seed: a.seed,
        };
        generate_gaussian_manifolds(&spec)?.to_tensor(&a.scheme)?
    };
    let bytes = write_embx_file(&tensor, &a.output)?;
    eprintln!("wrote {} ({bytes} bytes)", a.output.display());
    Ok(Outcome::Clean)
}

fn run_cover(a: CoverArgs) -> Result<Outcome, Error> {
    let mut out = io::stdout().lock();
    writeln!(out, "n,d,trials,f_hat,cover,abs_diff,within_tolerance")?;
    let mut all_ok = true;
    for &n in &a.n {
        let basis = ProjectionBasis::new(&generate_point_classes(n, a.dim, a.seed)?);
        for &d in &a.d {
            let e = basis.estimate_f(d, a.trials, a.seed)?;
            let exact = cover_probability(n as u64, d as u64);
            let diff = (e.f_hat - exact).abs();
            let ok = diff <= a.tolerance;
            all_ok &= ok;
            writeln!(
                out,
                "{n},{d},{},{:.4},{exact:.4},{diff:.4},{ok}",
                e.trials, e.f_hat
            )?;
        }
    }
    Ok(if all_ok {
        Outcome::Clean
    } else {
        Outcome::Flagged
    })
}

fn write_curve(est: &CapacityEstimate, format: Format, w: &mut dyn Write) -> Result<(), Error> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, est)?;
            writeln!(w)?;
        }
        Format::Csv => {
            writeln!(w, "phase,d_proj,trials,successes,f_hat,std_error")?;
            for (phase, entries) in [("coarse", &est.probes), ("fine", &est.curve.entries)] {
                for e in entries.iter() {
                    writeln!(
                        w,
                        "{phase},{},{},{},{},{}",
                        e.d_proj,
                        e.trials,
                        e.successes,
                        e.f_hat,
                        e.std_error()
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn run_curve(a: CurveArgs) -> Result<Outcome, Error> {
    let config = a.config.build()?;
    config.validate()?;
    let format: Format = a.out.format.parse()?;
    let tensor = load(&a.input)?;
    let set = group_manifolds(&tensor, a.layer, &config.scheme)?;
    let est = with_workers(config.workers, || {
        manifold_capacity(&set, &config.capacity_config())
    })??;
    eprintln!(
        "layer {}: alpha={} d_star={} status={}",
        a.layer,
        est.alpha,
        est.d_star,
        est.status.as_str()
    );
    write_output(&a.out, |w| write_curve(&est, format, w))?;
    Ok(
        if est.status == CapacityStatus::Ok && est.fit_warning.is_none() {
            Outcome::Clean
        } else {
            Outcome::Flagged
        },
    )
}
