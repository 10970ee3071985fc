//! The stock VPA recommender: percentiles of a decaying usage histogram,
//! with confidence multipliers on the bounds.

use serde::{Deserialize, Serialize};

use super::confidence::{ConfidenceMultiplier, SECONDS_PER_DAY};
use crate::error::Result;
use crate::histogram::{DecayingHistogram, HistogramConfig};
use crate::model::{CpuSample, Recommendation, Recommender, SampleClock};

pub const TARGET_PERCENTILE: f64 = 0.9;
pub const LOWER_PERCENTILE: f64 = 0.5;
pub const UPPER_PERCENTILE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VpaConfig {
    pub histogram: HistogramConfig,
    pub confidence: ConfidenceMultiplier,
}

impl Default for VpaConfig {
    fn default() -> Self {
        VpaConfig {
            histogram: HistogramConfig::default(),
            confidence: ConfidenceMultiplier {
                history_unit: SECONDS_PER_DAY,
                upper_cap: 1e6,
            },
        }
    }
}

impl VpaConfig {
    pub fn validate(&self) -> Result<()> {
        self.histogram.validate()?;
        self.confidence.validate()
    }
}

#[derive(Debug, Clone)]
pub struct VpaRecommender {
    name: String,
    confidence: ConfidenceMultiplier,
    histogram: DecayingHistogram,
    clock: SampleClock,
}

impl VpaRecommender {
    pub fn new(config: VpaConfig) -> Result<Self> {
        config.validate()?;
        Ok(VpaRecommender {
            name: "vpa".to_owned(),
            confidence: config.confidence,
            histogram: DecayingHistogram::new(config.histogram)?,
            clock: SampleClock::default(),
        })
    }

    pub fn histogram(&self) -> &DecayingHistogram {
        &self.histogram
    }
}

impl Recommender for VpaRecommender {
    fn name(&self) -> &str {
        &self.name
    }

    fn observe(&mut self, sample: CpuSample) -> Result<Recommendation> {
        self.clock.advance(sample.t())?;
        self.histogram
            .add_sample(sample.usage() as f64, sample.t() as f64)?;

        let d = self.confidence.history_length(self.clock.elapsed());
        let target = self.histogram.percentile(TARGET_PERCENTILE)?;
        let lower = self.histogram.percentile(LOWER_PERCENTILE)? * self.confidence.lower(d);
        let upper = self.histogram.percentile(UPPER_PERCENTILE)? * self.confidence.upper(d);
        Ok(Recommendation::from_real(target, lower, upper))
    }
}
