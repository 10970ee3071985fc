use std::io::Read;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{round_millicores, CpuSample, Millicores};

/// Exact header expected on trace CSV files.
pub const TRACE_HEADER: [&str; 2] = ["t_seconds", "usage_millicores"];

/// A named, non-empty usage series at a 1-second cadence starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trace {
    name: String,
    samples: Vec<CpuSample>,
}

impl Trace {
    /// Builds a trace from per-second usage values.
    pub fn from_usage(name: impl Into<String>, usage: impl IntoIterator<Item = Millicores>) -> Result<Self> {
        let samples: Vec<CpuSample> = usage
            .into_iter()
            .enumerate()
            .map(|(t, u)| CpuSample::from_millicores(t as u64, u))
            .collect();
        Self::new(name, samples)
    }

    pub fn new(name: impl Into<String>, samples: Vec<CpuSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("a trace needs at least one sample"));
        }
        for pair in samples.windows(2) {
            if pair[1].t() != pair[0].t() + 1 {
                return Err(Error::ordering(format!(
                    "trace cadence broken between t={} and t={}",
                    pair[0].t(),
                    pair[1].t()
                )));
            }
        }
        Ok(Trace {
            name: name.into(),
            samples,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn samples(&self) -> &[CpuSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn usage(&self) -> impl Iterator<Item = Millicores> + '_ {
        self.samples.iter().map(CpuSample::usage)
    }

    /// Reads a `t_seconds,usage_millicores` CSV.
    ///
    /// Rows must be sorted by time. The result is resampled to one sample per
    /// whole second from the first row's time (rebased to 0): each second takes
    /// the most recent row at or before it, so gaps hold the previous value.
    pub fn from_csv(name: impl Into<String>, source: impl Read) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(source);
        let header = reader.headers().map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        if header.iter().collect::<Vec<_>>() != TRACE_HEADER {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{}`", TRACE_HEADER.join(",")),
            });
        }

        let mut rows: Vec<(f64, f64)> = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let parse = |idx: usize, what: &str| -> Result<f64> {
                let field = record.get(idx).unwrap_or_default();
                let value: f64 = field.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("invalid {what} `{field}`"),
                })?;
                if !value.is_finite() || value < 0.0 {
                    return Err(Error::Parse {
                        line,
                        message: format!("{what} must be a non-negative number, got `{field}`"),
                    });
                }
                Ok(value)
            };
            if record.len() != 2 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 2 fields, found {}", record.len()),
                });
            }
            let t = parse(0, "time")?;
            let usage = parse(1, "usage")?;
            if let Some(&(prev, _)) = rows.last() {
                if t <= prev {
                    return Err(Error::ordering(format!(
                        "line {line}: t={t} does not follow t={prev}"
                    )));
                }
            }
            rows.push((t, usage));
        }
        let Some(&(first, _)) = rows.first() else {
            return Err(Error::domain("trace file has no rows"));
        };

        let last_second = (rows[rows.len() - 1].0 - first).floor() as u64;
        let mut samples = Vec::with_capacity(last_second as usize + 1);
        let mut row = 0;
        for second in 0..=last_second {
            while row + 1 < rows.len() && rows[row + 1].0 - first <= second as f64 {
                row += 1;
            }
            samples.push(CpuSample::from_millicores(second, round_millicores(rows[row].1)));
        }
        Self::new(name, samples)
    }

    /// Writes the trace in the ingestion CSV format.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", TRACE_HEADER.join(","));
        for s in &self.samples {
            out.push_str(&format!("{},{}\n", s.t(), s.usage()));
        }
        out
    }
}
