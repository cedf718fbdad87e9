//! Report serialization. Reals are rounded to six significant digits before
//! emission so outputs are stable across platforms and worker counts.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::harness::{AblationTable, HarnessError};
use crate::metrics::RunReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(HarnessError::Report(format!("unknown format `{other}`"))),
        }
    }
}

/// Column order of the CSV report. `row` is `class` for per-class AP rows
/// and `summary` for the run-level row.
pub const REPORT_CSV_COLUMNS: [&str; 25] = [
    "row",
    "class",
    "ap50",
    "frame_count",
    "failed_frames",
    "map50",
    "recall",
    "precision",
    "f1",
    "metric_score_threshold",
    "brightness_mse",
    "count_mae",
    "scene_f1",
    "semantic_frames",
    "semantic_excluded_frames",
    "cloud_queries",
    "compliance_rate",
    "latency_mean_ms",
    "latency_median_ms",
    "latency_p95_ms",
    "fps",
    "compute_total_gflops",
    "compute_per_frame_gflops",
    "cloud_route_fraction",
    "subset",
];

/// Rounds to six significant digits.
pub fn round6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}")
        .parse()
        .expect("scientific notation parses")
}

fn round_opt(x: Option<f64>) -> Option<f64> {
    x.map(round6)
}

/// Copy of `report` with every real rounded as emitted.
pub fn rounded(report: &RunReport) -> RunReport {
    RunReport {
        per_class_ap50: report
            .per_class_ap50
            .iter()
            .map(|(k, v)| (k.clone(), round6(*v)))
            .collect(),
        map50: round_opt(report.map50),
        recall: round_opt(report.recall),
        precision: round_opt(report.precision),
        f1: round_opt(report.f1),
        metric_score_threshold: round6(report.metric_score_threshold),
        brightness_mse: round_opt(report.brightness_mse),
        count_mae: round_opt(report.count_mae),
        scene_f1: round_opt(report.scene_f1),
        compliance_rate: round_opt(report.compliance_rate),
        latency_mean_ms: round6(report.latency_mean_ms),
        latency_median_ms: round6(report.latency_median_ms),
        latency_p95_ms: round6(report.latency_p95_ms),
        fps: round_opt(report.fps),
        compute_total_gflops: round6(report.compute_total_gflops),
        compute_per_frame_gflops: round6(report.compute_per_frame_gflops),
        cloud_route_fraction: round6(report.cloud_route_fraction),
        ..report.clone()
    }
}

fn num(x: f64) -> String {
    format!("{}", round6(x))
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn csv_rows(report: &RunReport, subset: &str) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = report
        .per_class_ap50
        .iter()
        .map(|(class, ap)| {
            let mut row = vec![String::new(); REPORT_CSV_COLUMNS.len()];
            row[0] = "class".into();
            row[1] = class.clone();
            row[2] = num(*ap);
            row[24] = subset.into();
            row
        })
        .collect();
    let r = report;
    rows.push(vec![
        "summary".into(),
        String::new(),
        String::new(),
        r.frame_count.to_string(),
        r.failed_frames.to_string(),
        opt(r.map50),
        opt(r.recall),
        opt(r.precision),
        opt(r.f1),
        num(r.metric_score_threshold),
        opt(r.brightness_mse),
        opt(r.count_mae),
        opt(r.scene_f1),
        r.semantic_frames.to_string(),
        r.semantic_excluded_frames.to_string(),
        r.cloud_queries.to_string(),
        opt(r.compliance_rate),
        num(r.latency_mean_ms),
        num(r.latency_median_ms),
        num(r.latency_p95_ms),
        opt(r.fps),
        num(r.compute_total_gflops),
        num(r.compute_per_frame_gflops),
        num(r.cloud_route_fraction),
        subset.into(),
    ]);
    rows
}

fn write_csv(rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| HarnessError::Report(e.to_string());
    w.write_record(REPORT_CSV_COLUMNS).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.into_inner()
        .map_err(|e| HarnessError::Report(e.to_string()))
}

fn write_json<T: Serialize>(value: &T) -> Result<Vec<u8>, HarnessError> {
    let mut out =
        serde_json::to_vec_pretty(value).map_err(|e| HarnessError::Report(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn emit_report(report: &RunReport, format: ReportFormat) -> Result<Vec<u8>, HarnessError> {
    match format {
        ReportFormat::Json => write_json(&rounded(report)),
        ReportFormat::Csv => write_csv(csv_rows(report, "")),
    }
}

/// Ablation output. JSON holds the baseline and one entry per subset; CSV
/// uses the report columns with `subset` set to `baseline` or the subset label.
pub fn emit_ablation(table: &AblationTable, format: ReportFormat) -> Result<Vec<u8>, HarnessError> {
    match format {
        ReportFormat::Json => {
            let t = AblationTable {
                baseline: rounded(&table.baseline),
                rows: table
                    .rows
                    .iter()
                    .map(|e| crate::harness::AblationEntry {
                        report: rounded(&e.report),
                        ..e.clone()
                    })
                    .collect(),
            };
            write_json(&t)
        }
        ReportFormat::Csv => {
            let mut rows = csv_rows(&table.baseline, "baseline");
            for e in &table.rows {
                rows.extend(csv_rows(&e.report, &e.subset));
            }
            write_csv(rows)
        }
    }
}

pub fn parse_report_json(bytes: &[u8]) -> Result<RunReport, HarnessError> {
    serde_json::from_slice(bytes).map_err(|e| HarnessError::Report(e.to_string()))
}

pub fn parse_ablation_json(bytes: &[u8]) -> Result<AblationTable, HarnessError> {
    serde_json::from_slice(bytes).map_err(|e| HarnessError::Report(e.to_string()))
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

/// Plain-text ablation table for terminals.
pub fn render_ablation(table: &AblationTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<48} {:>8} {:>8} {:>8} {:>11} {:>10}",
        "subset", "mAP50", "recall", "f1", "latency_ms", "gflops"
    );
    let line = |out: &mut String, name: &str, r: &RunReport| {
        let _ = writeln!(
            out,
            "{:<48} {:>8} {:>8} {:>8} {:>11.2} {:>10.3}",
            name,
            cell(r.map50),
            cell(r.recall),
            cell(r.f1),
            r.latency_mean_ms,
            r.compute_per_frame_gflops
        );
    };
    line(&mut out, "edge_only baseline", &table.baseline);
    for e in &table.rows {
        line(&mut out, &e.subset, &e.report);
    }
    out
}
