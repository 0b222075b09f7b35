use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::compare::{ComparisonReport, ComparisonRow};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "condition,scheme,coherence,layer,metric,value,normalized_value,status";

const SIG_DIGITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::validation(
                "format",
                format!("expected csv or json, got {s:?}"),
            )),
        }
    }
}

/// `%.9g`: nine significant digits, trailing zeros trimmed, exponent form
/// outside `[1e-4, 1e9)`.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG_DIGITS as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn round_sig9(v: Option<f64>) -> Option<f64> {
    v.map(|x| {
        if x.is_finite() {
            format_sig9(x).parse().expect("formatted float parses")
        } else {
            x
        }
    })
}

fn sorted_rows(report: &ComparisonReport) -> Vec<ComparisonRow> {
    let mut rows = report.rows.clone();
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    rows
}

fn opt(v: Option<f64>) -> String {
    v.map(format_sig9).unwrap_or_default()
}

/// Writes the report's rows, sorted by (condition, scheme, layer, metric).
pub fn emit<W: Write>(report: &ComparisonReport, format: Format, mut sink: W) -> Result<()> {
    let rows = sorted_rows(report);
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut sink);
            w.write_record(CSV_HEADER.split(','))?;
            for r in &rows {
                w.write_record([
                    r.condition.as_str(),
                    r.scheme.as_str(),
                    r.coherence.as_str(),
                    &r.layer.to_string(),
                    r.metric.as_str(),
                    &opt(r.value),
                    &opt(r.normalized_value),
                    r.status.as_str(),
                ])?;
            }
            w.flush()?;
        }
        Format::Json => {
            let rounded: Vec<ComparisonRow> = rows
                .into_iter()
                .map(|mut r| {
                    r.value = round_sig9(r.value);
                    r.normalized_value = round_sig9(r.normalized_value);
                    r
                })
                .collect();
            serde_json::to_writer_pretty(&mut sink, &rounded)?;
            sink.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn emit_to_vec(report: &ComparisonReport, format: Format) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    emit(report, format, &mut out)?;
    Ok(out)
}

/// Parses the JSON emitted by [`emit`] back into a report.
pub fn parse_json_rows(bytes: &[u8]) -> Result<ComparisonReport> {
    Ok(ComparisonReport {
        rows: serde_json::from_slice(bytes)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{Coherence, Metric};

    #[test]
    fn sig9_formatting() {
        let cases = [
            (1.0, "1"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333"),
            (2.0 / 3.0, "0.666666667"),
            (123456789.4, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (1e300, "1e+300"),
        ];
        for (v, s) in cases {
            assert_eq!(format_sig9(v), s, "{v}");
        }
    }

    fn row(cond: &str, layer: usize, metric: Metric, v: f64) -> ComparisonRow {
        ComparisonRow {
            condition: cond.into(),
            scheme: "s".into(),
            coherence: Coherence::NotApplicable,
            layer,
            metric,
            value: Some(v),
            normalized_value: Some(v / 3.0),
            status: "ok".into(),
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let out = emit_to_vec(&ComparisonReport::default(), Format::Csv).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn sorted_and_round_trips() {
        let report = ComparisonReport {
            rows: vec![
                row("raw", 2, Metric::Radius, 0.1234567891234),
                row("instruction", 0, Metric::Capacity, 1.0 / 7.0),
                row("raw", 0, Metric::Radius, 7e-9),
                ComparisonRow {
                    value: None,
                    normalized_value: None,
                    status: "error: rank, with comma".into(),
                    ..row("raw", 1, Metric::Dimension, 0.0)
                },
            ],
        };
        let csv = emit_to_vec(&report, Format::Csv).unwrap();
        assert_eq!(csv, emit_to_vec(&report, Format::Csv).unwrap());
        let text = String::from_utf8(csv.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[1].starts_with("instruction,s,n/a,0,capacity,0.142857143,"));
        assert!(lines[2].starts_with("raw,s,n/a,0,radius,7e-09,"));
        assert!(lines[3].contains("\"error: rank, with comma\""));

        let json = emit_to_vec(&report, Format::Json).unwrap();
        let parsed = parse_json_rows(&json).unwrap();
        assert_eq!(emit_to_vec(&parsed, Format::Csv).unwrap(), csv);
        assert_eq!(emit_to_vec(&parsed, Format::Json).unwrap(), json);
    }
}
