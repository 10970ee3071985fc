//! Additive Holt-Winters (triple exponential smoothing).
//!
//! ```text
//! level:    L_t = a (y_t - S_{t-m}) + (1 - a)(L_{t-1} + T_{t-1})
//! trend:    T_t = b (L_t - L_{t-1}) + (1 - b) T_{t-1}
//! seasonal: S_t = g (y_t - L_t) + (1 - g) S_{t-m}
//! forecast: y_{t+h} = L_t + h T_t + S_{t+h-m}
//! ```
//!
//! The model is initialised from the first two seasons: trend is the change
//! in season means per sample, level is the second season's mean carried to
//! its last sample, and each seasonal index is the mean deviation of that
//! phase from its season's trend line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams {
            alpha: 0.5,
            beta: 0.1,
            gamma: 0.1,
        }
    }
}

impl SmoothingParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

const GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[derive(Debug, Clone)]
pub struct HoltWinters {
    params: SmoothingParams,
    level: f64,
    trend: f64,
    seasonal: Vec<f64>,
    observed: usize,
}

impl HoltWinters {
    /// Initialises from the first two seasons of `history` and absorbs the rest.
    pub fn fit(history: &[f64], season: usize, params: SmoothingParams) -> Result<Self> {
        if season == 0 {
            return Err(Error::config("season length must be positive"));
        }
        if history.len() < 2 * season {
            return Err(Error::domain(format!(
                "Holt-Winters needs {} samples to initialise, got {}",
                2 * season,
                history.len()
            )));
        }
        let m = season as f64;
        let first = &history[..season];
        let second = &history[season..2 * season];
        let mean1 = first.iter().sum::<f64>() / m;
        let mean2 = second.iter().sum::<f64>() / m;
        let trend = (mean2 - mean1) / m;
        let level = mean2 + trend * (m - 1.0) / 2.0;
        let seasonal = first
            .iter()
            .zip(second)
            .enumerate()
            .map(|(j, (a, b))| {
                let drift = trend * (j as f64 - (m - 1.0) / 2.0);
                ((a - mean1 - drift) + (b - mean2 - drift)) / 2.0
            })
            .collect();
        let mut model = HoltWinters {
            params,
            level,
            trend,
            seasonal,
            observed: 2 * season,
        };
        for &y in &history[2 * season..] {
            model.update(y);
        }
        Ok(model)
    }

    /// Fits with the smoothing parameters from a coarse grid that minimise
    /// the squared one-step errors over `history`.
    pub fn fit_least_squares(history: &[f64], season: usize) -> Result<Self> {
        let mut best: Option<(f64, SmoothingParams)> = None;
        for &alpha in &GRID {
            for &beta in &GRID {
                for &gamma in &GRID {
                    let params = SmoothingParams { alpha, beta, gamma };
                    let sse = Self::one_step_sse(history, season, params)?;
                    if best.is_none_or(|(b, _)| sse < b) {
                        best = Some((sse, params));
                    }
                }
            }
        }
        let params = best.map(|(_, p)| p).unwrap_or_default();
        Self::fit(history, season, params)
    }

    fn one_step_sse(history: &[f64], season: usize, params: SmoothingParams) -> Result<f64> {
        let mut model = Self::fit(&history[..2 * season], season, params)?;
        let mut sse = 0.0;
        for &y in &history[2 * season..] {
            let err = y - model.forecast(1);
            sse += err * err;
            model.update(y);
        }
        Ok(sse)
    }

    pub fn params(&self) -> SmoothingParams {
        self.params
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn trend(&self) -> f64 {
        self.trend
    }

    pub fn seasonal(&self) -> &[f64] {
        &self.seasonal
    }

    /// Number of observations absorbed, including the initialisation seasons.
    pub fn observed(&self) -> usize {
        self.observed
    }

    pub fn update(&mut self, y: f64) {
        let SmoothingParams { alpha, beta, gamma } = self.params;
        let phase = self.observed % self.seasonal.len();
        let previous_season = self.seasonal[phase];
        let level = alpha * (y - previous_season) + (1.0 - alpha) * (self.level + self.trend);
        self.trend = beta * (level - self.level) + (1.0 - beta) * self.trend;
        self.seasonal[phase] = gamma * (y - level) + (1.0 - gamma) * previous_season;
        self.level = level;
        self.observed += 1;
    }

    /// Forecast `h >= 1` steps past the last observation.
    pub fn forecast(&self, h: usize) -> f64 {
        let phase = (self.observed + h - 1) % self.seasonal.len();
        self.level + h as f64 * self.trend + self.seasonal[phase]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_forecasts_itself() {
        let model = HoltWinters::fit(&[250.0; 150], 60, SmoothingParams::default()).unwrap();
        assert!((model.forecast(1) - 250.0).abs() < 1e-9);
        assert!(model.trend().abs() < 1e-12);
    }

    #[test]
    fn periodic_series_is_forecast_exactly() {
        let season = 12;
        let series: Vec<f64> = (0..100)
            .map(|i| 400.0 + 150.0 * (2.0 * std::f64::consts::PI * (i % season) as f64 / season as f64).sin())
            .collect();
        let mut model = HoltWinters::fit(&series[..24], season, SmoothingParams::default()).unwrap();
        for &y in &series[24..] {
            assert!((model.forecast(1) - y).abs() < 1e-9);
            model.update(y);
        }
    }

    #[test]
    fn linear_trend_is_tracked() {
        let series: Vec<f64> = (0..40).map(|i| 100.0 + 5.0 * i as f64).collect();
        let model = HoltWinters::fit(&series, 4, SmoothingParams::default()).unwrap();
        assert!((model.forecast(1) - 300.0).abs() < 1e-6);
        assert!((model.trend() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn needs_two_seasons() {
        assert!(HoltWinters::fit(&[1.0; 10], 6, SmoothingParams::default()).is_err());
        assert!(HoltWinters::fit(&[1.0; 10], 0, SmoothingParams::default()).is_err());
    }

    #[test]
    fn least_squares_fit_is_no_worse_than_default() {
        let series: Vec<f64> = (0..90)
            .map(|i| 300.0 + if i % 10 < 3 { 500.0 } else { 0.0 } + (i as f64 * 1.7).sin() * 30.0)
            .collect();
        let fitted = HoltWinters::fit_least_squares(&series, 10).unwrap();
        let sse_fit = HoltWinters::one_step_sse(&series, 10, fitted.params()).unwrap();
        let sse_default = HoltWinters::one_step_sse(&series, 10, SmoothingParams::default()).unwrap();
        assert!(sse_fit <= sse_default);
    }
}
