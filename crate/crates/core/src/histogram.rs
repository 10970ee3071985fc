//! Exponentially bucketed histogram with half-life weight decay.
//!
//! Bucket `0` covers `[0, first_bucket_size)`; bucket `n` starts at
//! `first_bucket_size * (ratio^n - 1) / (ratio - 1)` so each bucket is `ratio`
//! times wider than the previous one. Values at or above `max_value` land in
//! the last bucket.
//!
//! Decay uses relative weights: a sample added at time `t` carries weight
//! `2^((t - reference) / half_life)`, so newer samples weigh exponentially
//! more. This is equivalent to halving every older weight once per half-life
//! and keeps insertion O(1). The reference time is moved forward every
//! [`RESCALE_INTERVAL`] additions to keep the raw weights representable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Additions between two reference-time rescales.
pub const RESCALE_INTERVAL: u64 = 10_000;

/// Largest decay exponent accepted before forcing a rescale.
const MAX_EXPONENT: f64 = 64.0;

/// Weights below this fraction of the total are dropped after a rescale.
const NEGLIGIBLE_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    pub first_bucket_size: f64,
    pub ratio: f64,
    pub max_value: f64,
    /// Seconds after which a sample's relative weight halves.
    pub half_life: f64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        HistogramConfig {
            first_bucket_size: 10.0,
            ratio: 1.05,
            max_value: 1_000_000.0,
            half_life: 86_400.0,
        }
    }
}

impl HistogramConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.first_bucket_size, self.ratio, self.max_value, self.half_life]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("histogram parameters must be finite"));
        }
        if self.first_bucket_size <= 0.0 {
            return Err(Error::config("first bucket size must be positive"));
        }
        if self.ratio <= 1.0 {
            return Err(Error::config("bucket ratio must be greater than 1"));
        }
        if self.max_value <= self.first_bucket_size {
            return Err(Error::config("max value must exceed the first bucket size"));
        }
        if self.half_life <= 0.0 {
            return Err(Error::config("half-life must be positive"));
        }
        Ok(())
    }

    /// Number of buckets needed so that `max_value` falls inside the last one.
    pub fn bucket_count(&self) -> usize {
        let n = ((self.max_value * (self.ratio - 1.0) / self.first_bucket_size + 1.0).ln()
            / self.ratio.ln())
        .ceil();
        n as usize + 1
    }
}

#[derive(Debug, Clone)]
pub struct DecayingHistogram {
    config: HistogramConfig,
    starts: Vec<f64>,
    weights: Vec<f64>,
    total_weight: f64,
    reference_time: Option<f64>,
    last_time: Option<f64>,
    additions_since_rescale: u64,
}

impl DecayingHistogram {
    pub fn new(config: HistogramConfig) -> Result<Self> {
        config.validate()?;
        let count = config.bucket_count();
        let starts = (0..count)
            .map(|n| {
                config.first_bucket_size * (config.ratio.powi(n as i32) - 1.0)
                    / (config.ratio - 1.0)
            })
            .collect();
        Ok(DecayingHistogram {
            config,
            starts,
            weights: vec![0.0; count],
            total_weight: 0.0,
            reference_time: None,
            last_time: None,
            additions_since_rescale: 0,
        })
    }

    pub fn config(&self) -> &HistogramConfig {
        &self.config
    }

    pub fn bucket_count(&self) -> usize {
        self.starts.len()
    }

    /// Left boundary of bucket `n`.
    pub fn bucket_start(&self, n: usize) -> f64 {
        self.starts[n]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn reference_time(&self) -> Option<f64> {
        self.reference_time
    }

    pub fn is_empty(&self) -> bool {
        self.total_weight <= 0.0
    }

    pub fn bucket_index(&self, value: f64) -> Result<usize> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::domain(format!("cannot bucket value {value}")));
        }
        let last = self.starts.len() - 1;
        if value < self.config.first_bucket_size {
            return Ok(0);
        }
        if value >= self.config.max_value {
            return Ok(last);
        }
        let guess = ((value * (self.config.ratio - 1.0) / self.config.first_bucket_size + 1.0)
            .ln()
            / self.config.ratio.ln())
        .floor() as usize;
        // The closed form can be off by one near a boundary; settle against the table.
        let mut n = guess.min(last);
        while n > 0 && self.starts[n] > value {
            n -= 1;
        }
        while n < last && self.starts[n + 1] <= value {
            n += 1;
        }
        Ok(n)
    }

    /// Adds one sample observed at time `t` (seconds).
    pub fn add_sample(&mut self, value: f64, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::domain(format!("sample time {t} is not finite")));
        }
        if let Some(last) = self.last_time {
            if t < last {
                return Err(Error::ordering(format!(
                    "histogram sample at t={t} precedes t={last}"
                )));
            }
        }
        let bucket = self.bucket_index(value)?;
        let reference = *self.reference_time.get_or_insert(t);
        if self.additions_since_rescale >= RESCALE_INTERVAL
            || (t - reference) / self.config.half_life > MAX_EXPONENT
        {
            self.rescale_to_reference(t);
        }
        let reference = self.reference_time.unwrap_or(t);
        let weight = ((t - reference) / self.config.half_life).exp2();
        self.weights[bucket] += weight;
        self.total_weight += weight;
        self.last_time = Some(t);
        self.additions_since_rescale += 1;
        Ok(())
    }

    /// Start of the first bucket whose cumulative weight reaches `p` of the
    /// total. Exact ties resolve to the earlier bucket.
    pub fn percentile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::domain(format!("percentile {p} outside (0, 1]")));
        }
        if self.is_empty() {
            return Err(Error::domain("percentile of an empty histogram"));
        }
        let threshold = p * self.total_weight;
        let mut cumulative = 0.0;
        let mut last_nonempty = 0;
        for (n, &w) in self.weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            cumulative += w;
            last_nonempty = n;
            if cumulative >= threshold {
                return Ok(self.starts[n]);
            }
        }
        // Rounding left the cumulative sum a hair under p * total.
        Ok(self.starts[last_nonempty])
    }

    /// Moves the reference time forward, scaling every weight by
    /// `2^((old - new) / half_life)`. Percentiles are unaffected. Requests to
    /// move the reference backwards are ignored.
    pub fn rescale_to_reference(&mut self, new_reference: f64) {
        let Some(old) = self.reference_time else {
            self.reference_time = Some(new_reference);
            return;
        };
        if new_reference <= old {
            return;
        }
        let factor = ((old - new_reference) / self.config.half_life).exp2();
        let mut total = 0.0;
        for w in &mut self.weights {
            *w *= factor;
            total += *w;
        }
        let floor = total * NEGLIGIBLE_WEIGHT;
        let mut kept = 0.0;
        for w in &mut self.weights {
            if *w < floor {
                *w = 0.0;
            }
            kept += *w;
        }
        self.total_weight = kept;
        self.reference_time = Some(new_reference);
        self.additions_since_rescale = 0;
    }

    /// Sum of bucket weights, recomputed from scratch.
    pub fn recomputed_total(&self) -> f64 {
        self.weights.iter().sum()
    }
}
