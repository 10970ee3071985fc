//! Report files: per-recommender timelines, the summary document, plot data,
//! comparison tables and bench results.
//!
//! Floats in CSV and JSON use Rust's shortest round-trip formatting, so every
//! summary number can be recomputed bit-exactly from the timeline files.

use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{MetricsSummary, TimelineEntry};
use crate::sim::{BenchPoint, FittedPoint, PolyFit, ScenarioReport};

/// Quotes a CSV field when it contains a separator or quote.
fn field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_owned()
    }
}

pub const TIMELINE_HEADER: [&str; 7] = ["t", "usage", "request", "target", "lower", "upper", "updated"];

/// File name for a recommender's timeline; parameter suffixes are flattened
/// to `_` so `ema5-3,beta=off` becomes `timeline_ema5-3_beta_off.csv`.
pub fn timeline_file_name(run_name: &str) -> String {
    let stem: String = run_name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect();
    format!("timeline_{stem}.csv")
}

pub fn timeline_csv(entries: &[TimelineEntry]) -> String {
    let mut out = TIMELINE_HEADER.join(",");
    out.push('\n');
    for e in entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            e.t,
            e.usage,
            e.request,
            e.target,
            e.lower,
            e.upper,
            u8::from(e.updated)
        );
    }
    out
}

pub fn read_timeline_csv(source: impl Read) -> Result<Vec<TimelineEntry>> {
    let mut reader = csv::Reader::from_reader(source);
    let header = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != TIMELINE_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", TIMELINE_HEADER.join(",")),
        });
    }
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut fields = [0u64; 7];
        for (slot, field) in fields.iter_mut().zip(record.iter()) {
            *slot = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid integer `{field}`"),
            })?;
        }
        let [t, usage, request, target, lower, upper, updated] = fields;
        if updated > 1 {
            return Err(Error::Parse {
                line,
                message: format!("`updated` must be 0 or 1, got {updated}"),
            });
        }
        entries.push(TimelineEntry {
            t,
            usage,
            request,
            target,
            lower,
            upper,
            updated: updated == 1,
        });
    }
    Ok(entries)
}

#[derive(Serialize)]
struct RunSummary<'a> {
    name: &'a str,
    timeline: String,
    policy: &'a crate::policy::PolicyConfig,
    summary: &'a MetricsSummary,
    cold: &'a Option<MetricsSummary>,
    warm: &'a Option<MetricsSummary>,
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    trace: &'a str,
    length: usize,
    split: Option<usize>,
    seed: Option<u64>,
    runs: Vec<RunSummary<'a>>,
}

/// The `summary.json` document. Keys appear in a fixed order.
pub fn summary_json(report: &ScenarioReport, seed: Option<u64>) -> String {
    let doc = SummaryDoc {
        trace: &report.trace,
        length: report.length,
        split: report.split,
        seed,
        runs: report
            .runs
            .iter()
            .map(|r| RunSummary {
                name: &r.name,
                timeline: timeline_file_name(&r.name),
                policy: &r.policy,
                summary: &r.summary,
                cold: &r.cold,
                warm: &r.warm,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("summary serializes");
    text.push('\n');
    text
}

/// Long-format metrics for plotting: one row per recommender and segment.
pub fn metrics_csv(report: &ScenarioReport) -> String {
    let mut out = String::from("recommender,segment,avg_slack,avg_insufficient,update_count,throttled_seconds\n");
    for run in &report.runs {
        let segments = [("all", Some(run.summary)), ("cold", run.cold), ("warm", run.warm)];
        for (segment, m) in segments {
            if let Some(m) = m {
                let _ = writeln!(
                    out,
                    "{},{segment},{},{},{},{}",
                    field(&run.name), m.avg_slack, m.avg_insufficient, m.update_count, m.throttled_seconds
                );
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonCell {
    pub workload: String,
    pub recommender: String,
    pub summary: MetricsSummary,
}

impl ComparisonCell {
    pub fn from_reports(reports: &[ScenarioReport]) -> Vec<ComparisonCell> {
        reports
            .iter()
            .flat_map(|report| {
                report.runs.iter().map(|run| ComparisonCell {
                    workload: report.trace.clone(),
                    recommender: run.name.clone(),
                    summary: run.summary,
                })
            })
            .collect()
    }
}

pub fn comparison_csv(cells: &[ComparisonCell]) -> String {
    let mut out = String::from("workload,recommender,avg_slack,avg_insufficient\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            field(&c.workload),
            field(&c.recommender), c.summary.avg_slack, c.summary.avg_insufficient
        );
    }
    out
}

fn unique<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen: Vec<&str> = Vec::new();
    for item in items {
        if !seen.contains(&item) {
            seen.push(item);
        }
    }
    seen
}

/// Workload rows by recommender columns; each cell is
/// `avg_slack / avg_insufficient`, then a totals row of their sums.
pub fn comparison_text(cells: &[ComparisonCell]) -> String {
    let workloads = unique(cells.iter().map(|c| c.workload.as_str()));
    let recommenders = unique(cells.iter().map(|c| c.recommender.as_str()));
    let cell = |w: &str, r: &str| {
        cells
            .iter()
            .find(|c| c.workload == w && c.recommender == r)
            .map_or_else(|| "-".to_owned(), |c| format!("{:.2} / {:.2}", c.summary.avg_slack, c.summary.avg_insufficient))
    };

    let mut rows: Vec<Vec<String>> = Vec::new();
    rows.push(
        std::iter::once("workload (slack / insufficient)".to_owned())
            .chain(recommenders.iter().map(|r| r.to_string()))
            .collect(),
    );
    for w in &workloads {
        rows.push(
            std::iter::once(w.to_string())
                .chain(recommenders.iter().map(|r| cell(w, r)))
                .collect(),
        );
    }
    rows.push(
        std::iter::once("total (slack + insufficient)".to_owned())
            .chain(recommenders.iter().map(|r| {
                let sum: f64 = cells.iter().filter(|c| c.recommender == *r).map(|c| c.summary.total()).sum();
                format!("{sum:.2}")
            }))
            .collect(),
    );

    let columns = rows[0].len();
    let widths: Vec<usize> = (0..columns)
        .map(|i| rows.iter().map(|row| row[i].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, text)| {
                if i == 0 {
                    format!("{text:<w$}", w = widths[i])
                } else {
                    format!("{text:>w$}", w = widths[i])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn bench_csv(points: &[BenchPoint]) -> String {
    let mut out = String::from("instances,duration,calls,cpu_seconds,utilization,ns_per_call\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.instances, p.duration, p.calls, p.cpu_seconds, p.utilization, p.ns_per_call
        );
    }
    out
}

pub fn bench_fit_csv(fit: &PolyFit, fitted: &[FittedPoint]) -> String {
    let mut out = String::new();
    let coefficients: Vec<String> = fit.coefficients.iter().map(f64::to_string).collect();
    let _ = writeln!(out, "# utilization = polynomial in instances, coefficients (lowest degree first): {}", coefficients.join(" "));
    out.push_str("instances,utilization,extrapolated\n");
    for p in fitted {
        let _ = writeln!(out, "{},{},{}", p.instances, p.utilization, p.extrapolated);
    }
    out
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes one timeline per recommender, `summary.json` and `metrics.csv`.
pub fn write_scenario(dir: &Path, report: &ScenarioReport, seed: Option<u64>) -> Result<Vec<PathBuf>> {
    let mut written = Vec::with_capacity(report.runs.len() + 2);
    for run in &report.runs {
        written.push(write_file(dir, &timeline_file_name(&run.name), &timeline_csv(run.timeline.entries()))?);
    }
    written.push(write_file(dir, "summary.json", &summary_json(report, seed))?);
    written.push(write_file(dir, "metrics.csv", &metrics_csv(report))?);
    Ok(written)
}
