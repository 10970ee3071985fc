//! Holt-Winters recommender with a fixed preset during warm-up.

use serde::{Deserialize, Serialize};

use super::holt_winters::{HoltWinters, SmoothingParams};
use crate::error::{Error, Result};
use crate::model::{CpuSample, Millicores, Recommendation, Recommender, SampleClock};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HwConfig {
    /// Samples per season.
    pub season_length: usize,
    pub error_buffer: f64,
    /// Returned as target, lower and upper until two seasons are observed.
    pub preset: Millicores,
    pub params: SmoothingParams,
    /// Refit smoothing parameters by least squares on every observation.
    pub fit: bool,
}

impl Default for HwConfig {
    fn default() -> Self {
        HwConfig {
            season_length: 60,
            error_buffer: 120.0,
            preset: 500,
            params: SmoothingParams::default(),
            fit: false,
        }
    }
}

impl HwConfig {
    pub fn validate(&self) -> Result<()> {
        if self.season_length == 0 {
            return Err(Error::config("season length must be positive"));
        }
        if !(self.error_buffer.is_finite() && self.error_buffer >= 0.0) {
            return Err(Error::config("error buffer must be non-negative"));
        }
        self.params.validate()
    }

    pub fn warmup_samples(&self) -> usize {
        2 * self.season_length
    }
}

#[derive(Debug, Clone)]
pub struct HwRecommender {
    config: HwConfig,
    history: Vec<f64>,
    model: Option<HoltWinters>,
    clock: SampleClock,
}

impl HwRecommender {
    pub fn new(config: HwConfig) -> Result<Self> {
        config.validate()?;
        Ok(HwRecommender {
            config,
            history: Vec::new(),
            model: None,
            clock: SampleClock::default(),
        })
    }

    pub fn model(&self) -> Option<&HoltWinters> {
        self.model.as_ref()
    }

    /// One-step forecast, if the model is initialised.
    pub fn forecast(&self) -> Option<f64> {
        self.model.as_ref().map(|m| m.forecast(1))
    }

    fn refit(&mut self, y: f64) -> Result<()> {
        let season = self.config.season_length;
        if self.config.fit {
            self.model = Some(HoltWinters::fit_least_squares(&self.history, season)?);
        } else if let Some(model) = &mut self.model {
            // Same result as refitting from the initial seasons with fixed parameters.
            model.update(y);
        } else {
            self.model = Some(HoltWinters::fit(&self.history, season, self.config.params)?);
        }
        Ok(())
    }
}

impl Recommender for HwRecommender {
    fn name(&self) -> &str {
        "hw"
    }

    fn observe(&mut self, sample: CpuSample) -> Result<Recommendation> {
        self.clock.advance(sample.t())?;
        let y = sample.usage() as f64;
        self.history.push(y);
        if self.history.len() < self.config.warmup_samples() {
            return Ok(Recommendation::flat(self.config.preset));
        }
        self.refit(y)?;
        let forecast = self.forecast().unwrap_or_default().max(0.0);
        let buffer = self.config.error_buffer;
        Ok(Recommendation::from_real(
            forecast + buffer,
            (forecast - buffer).max(0.0),
            forecast + 2.0 * buffer,
        ))
    }
}
