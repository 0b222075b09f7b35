use std::path::Path;
use std::process::{Command, Output};

fn mancap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mancap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn synth(path: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--output", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = mancap(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

const FAST: [&str; 6] = [
    "--trials-coarse",
    "20",
    "--trials-fine",
    "40",
    "--grid",
    "5",
];

#[test]
fn analyze_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("a.embx");
    synth(
        &input,
        &["--scheme", "toy", "--points", "20", "--dim", "16"],
    );
    let p = input.to_str().unwrap();

    let mut args = vec![
        "analyze",
        "--input",
        p,
        "--scheme",
        "toy",
        "--metrics",
        "radius,dimension",
    ];
    args.extend(FAST);
    let out = mancap(&args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "condition,scheme,coherence,layer,metric,value,normalized_value,status"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("raw,toy,n/a,0,dimension,"));

    let csv_path = dir.path().join("out.csv");
    let out = mancap(&[
        "compare",
        "--input",
        p,
        "--baseline",
        p,
        "--scheme",
        "toy",
        "--metrics",
        "radius",
        "--output",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(",1,ok"), "{text}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("a.embx");
    synth(&input, &["--scheme", "toy", "--points", "10", "--dim", "8"]);
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "scheme = \"toy\"\nmetrics = [\"radius\", \"dimension\"]\n",
    )
    .unwrap();
    let out = mancap(&[
        "analyze",
        "--input",
        input.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--metrics",
        "radius",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 1);
    assert_eq!(rows[0]["metric"], "radius");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let overlap = dir.path().join("overlap.embx");
    synth(
        &overlap,
        &[
            "--classes",
            "2",
            "--points",
            "40",
            "--dim",
            "6",
            "--intrinsic-dim",
            "6",
            "--centroid-scale",
            "0",
        ],
    );
    let p = overlap.to_str().unwrap();
    let mut args = vec![
        "analyze",
        "--input",
        p,
        "--scheme",
        "synthetic",
        "--metrics",
        "capacity",
    ];
    args.extend(FAST);
    let out = mancap(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("not_separable_at_full_dim"));

    let out = mancap(&["analyze", "--input", p, "--scheme", "missing"]);
    assert_eq!(out.status.code(), Some(1));
    let out = mancap(&[
        "analyze",
        "--input",
        p,
        "--scheme",
        "synthetic",
        "--layers",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = mancap(&[
        "analyze",
        "--input",
        p,
        "--scheme",
        "synthetic",
        "--metrics",
        "volume",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let missing = dir.path().join("nope.embx");
    let out = mancap(&[
        "analyze",
        "--input",
        missing.to_str().unwrap(),
        "--scheme",
        "synthetic",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn validate_cover_and_curve() {
    let out = mancap(&["validate-cover", "--n", "4", "--d", "2", "--trials", "500"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("4,2,500,"));

    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("p.embx");
    synth(
        &input,
        &["--point-classes", "--classes", "20", "--dim", "40"],
    );
    let out = mancap(&[
        "capacity-curve",
        "--input",
        input.to_str().unwrap(),
        "--scheme",
        "synthetic",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("phase,d_proj,trials,successes,f_hat,std_error\ncoarse,1,"));
}
