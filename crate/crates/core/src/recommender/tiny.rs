//! SMA and EMA "tiny autoscalers".
//!
//! A load tracker smooths raw usage into one representation per sample; the
//! predictor extrapolates a line through the last `trackers` representations
//! and takes the maximum of that and `beta` times the current representation
//! (the bottoming term), so predictions never fall off a cliff when load
//! flattens or drops.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::confidence::ConfidenceMultiplier;
use crate::error::{Error, Result};
use crate::model::{CpuSample, Recommendation, Recommender, SampleClock};

pub const DEFAULT_BETA: f64 = 1.2;
pub const DEFAULT_HORIZON: u32 = 1;
/// Seconds per unit of history length for the tiny recommenders' bounds.
pub const DEFAULT_HISTORY_UNIT: f64 = 60.0;
pub const DEFAULT_UPPER_CAP: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackerKind {
    Sma,
    Ema,
}

impl fmt::Display for TrackerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrackerKind::Sma => f.write_str("sma"),
            TrackerKind::Ema => f.write_str("ema"),
        }
    }
}

/// Smooths raw usage samples over a window of `size` observations.
#[derive(Debug, Clone)]
pub struct LoadTracker {
    kind: TrackerKind,
    size: usize,
    alpha: f64,
    window: VecDeque<f64>,
    seen: u64,
    ema: f64,
}

impl LoadTracker {
    /// `alpha` defaults to `2 / size` (the window holds `n + 1 = size` samples).
    pub fn new(kind: TrackerKind, size: usize, alpha: Option<f64>) -> Result<Self> {
        if size < 2 {
            return Err(Error::config(format!("tracker size {size} must be at least 2")));
        }
        let alpha = alpha.unwrap_or(2.0 / size as f64);
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::config(format!("smoothing constant {alpha} outside (0, 1]")));
        }
        Ok(LoadTracker {
            kind,
            size,
            alpha,
            window: VecDeque::with_capacity(size),
            seen: 0,
            ema: 0.0,
        })
    }

    pub fn kind(&self) -> TrackerKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn window(&self) -> &VecDeque<f64> {
        &self.window
    }

    /// Feeds one sample and returns the new representation.
    pub fn push(&mut self, value: f64) -> f64 {
        if self.window.len() == self.size {
            self.window.pop_front();
        }
        self.window.push_back(value);
        self.seen += 1;
        match self.kind {
            TrackerKind::Sma => window_mean(&self.window),
            TrackerKind::Ema => {
                self.ema = if self.seen <= self.size as u64 {
                    window_mean(&self.window)
                } else {
                    self.alpha * value + (1.0 - self.alpha) * self.ema
                };
                self.ema
            }
        }
    }
}

fn window_mean(window: &VecDeque<f64>) -> f64 {
    window.iter().sum::<f64>() / window.len() as f64
}

/// Arithmetic mean of a window of usage samples.
pub fn sma(window: &[f64]) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::domain("moving average of an empty window"));
    }
    Ok(window.iter().sum::<f64>() / window.len() as f64)
}

/// Line through `(i - q, oldest)` and `(i, newest)` evaluated at `i + k`.
///
/// With `m = (newest - oldest) / q` and `a = oldest - m (i - q)` this is
/// `m (i + k) + a`; it is evaluated as `oldest + m (q + k)`, which is the same
/// line without the cancellation of large sample indices.
pub fn extrapolate(oldest: f64, newest: f64, q: usize, horizon: u32) -> f64 {
    if q == 0 {
        return newest;
    }
    let slope = (newest - oldest) / q as f64;
    oldest + slope * (q as f64 + f64::from(horizon))
}

/// Keeps the last `trackers` representations and produces predictions.
#[derive(Debug, Clone)]
pub struct LoadPredictor {
    trackers: usize,
    horizon: u32,
    beta: Option<f64>,
    outputs: VecDeque<f64>,
}

impl LoadPredictor {
    /// `beta = None` disables bottoming (the untuned predictor).
    pub fn new(trackers: usize, horizon: u32, beta: Option<f64>) -> Result<Self> {
        if trackers < 2 {
            return Err(Error::config(format!("tracker count {trackers} must be at least 2")));
        }
        if horizon < 1 {
            return Err(Error::config("prediction horizon must be at least 1"));
        }
        if let Some(b) = beta {
            if !(b.is_finite() && b >= 1.0) {
                return Err(Error::config(format!("beta {b} must be >= 1")));
            }
        }
        Ok(LoadPredictor {
            trackers,
            horizon,
            beta,
            outputs: VecDeque::with_capacity(trackers),
        })
    }

    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    pub fn outputs(&self) -> &VecDeque<f64> {
        &self.outputs
    }

    pub fn push(&mut self, representation: f64) {
        if self.outputs.len() == self.trackers {
            self.outputs.pop_front();
        }
        self.outputs.push_back(representation);
    }

    /// Predicted demand, never negative. Zero before any representation.
    pub fn predict(&self) -> f64 {
        let (Some(&oldest), Some(&newest)) = (self.outputs.front(), self.outputs.back()) else {
            return 0.0;
        };
        let q = self.outputs.len() - 1;
        let line = extrapolate(oldest, newest, q, self.horizon);
        let prediction = match self.beta {
            Some(beta) => line.max(beta * newest),
            None => line,
        };
        prediction.max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TinyConfig {
    pub tracker: TrackerKind,
    /// Load tracker window length.
    pub size: usize,
    /// Number of tracker outputs used for extrapolation.
    pub trackers: usize,
    /// Bottoming multiplier; `None` disables the bottoming term.
    pub beta: Option<f64>,
    pub horizon: u32,
    pub alpha: Option<f64>,
    pub confidence: ConfidenceMultiplier,
}

impl TinyConfig {
    pub fn new(tracker: TrackerKind, size: usize, trackers: usize) -> Self {
        TinyConfig {
            tracker,
            size,
            trackers,
            beta: Some(DEFAULT_BETA),
            horizon: DEFAULT_HORIZON,
            alpha: None,
            confidence: ConfidenceMultiplier {
                history_unit: DEFAULT_HISTORY_UNIT,
                upper_cap: DEFAULT_UPPER_CAP,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trackers > self.size {
            return Err(Error::config(format!(
                "tracker count {} exceeds tracker size {}",
                self.trackers, self.size
            )));
        }
        if self.alpha.is_some() && self.tracker == TrackerKind::Sma {
            return Err(Error::config("alpha only applies to EMA trackers"));
        }
        LoadTracker::new(self.tracker, self.size, self.alpha)?;
        LoadPredictor::new(self.trackers, self.horizon, self.beta)?;
        self.confidence.validate()
    }

    /// `ema5-3` style label.
    pub fn label(&self) -> String {
        format!("{}{}-{}", self.tracker, self.size, self.trackers)
    }
}

#[derive(Debug, Clone)]
pub struct TinyRecommender {
    name: String,
    tracker: LoadTracker,
    predictor: LoadPredictor,
    confidence: ConfidenceMultiplier,
    clock: SampleClock,
}

impl TinyRecommender {
    pub fn new(config: TinyConfig) -> Result<Self> {
        config.validate()?;
        Ok(TinyRecommender {
            name: config.label(),
            tracker: LoadTracker::new(config.tracker, config.size, config.alpha)?,
            predictor: LoadPredictor::new(config.trackers, config.horizon, config.beta)?,
            confidence: config.confidence,
            clock: SampleClock::default(),
        })
    }

    pub fn tracker(&self) -> &LoadTracker {
        &self.tracker
    }

    pub fn predictor(&self) -> &LoadPredictor {
        &self.predictor
    }
}

impl Recommender for TinyRecommender {
    fn name(&self) -> &str {
        &self.name
    }

    fn observe(&mut self, sample: CpuSample) -> Result<Recommendation> {
        self.clock.advance(sample.t())?;
        let representation = self.tracker.push(sample.usage() as f64);
        self.predictor.push(representation);
        let target = self.predictor.predict();
        let d = self.confidence.history_length(self.clock.elapsed());
        Ok(Recommendation::from_real(
            target,
            target * self.confidence.lower(d),
            target * self.confidence.upper(d),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn predictor_with(outputs: &[f64], beta: Option<f64>) -> LoadPredictor {
        let mut p = LoadPredictor::new(outputs.len().max(2), 1, beta).unwrap();
        for &l in outputs {
            p.push(l);
        }
        p
    }

    /// `m (i + k) + a` evaluated literally.
    fn literal_line(l: &[f64], i: f64, k: f64) -> (f64, f64, f64) {
        let q = (l.len() - 1) as f64;
        let m = (l[l.len() - 1] - l[0]) / q;
        let a = l[0] - m * (i - q);
        (m, a, m * (i + k) + a)
    }

    #[test]
    fn sma_examples() {
        assert_eq!(sma(&[100.0, 200.0, 300.0]).unwrap(), 200.0);
        assert_eq!(sma(&[50.0]).unwrap(), 50.0);
        assert_eq!(sma(&[0.0; 5]).unwrap(), 0.0);
        assert!(sma(&[]).is_err());
    }

    #[test]
    fn ema_recursion_step() {
        let mut t = LoadTracker::new(TrackerKind::Ema, 5, None).unwrap();
        assert_eq!(t.alpha(), 0.4);
        for _ in 0..5 {
            t.push(100.0);
        }
        let next = t.push(200.0);
        assert!((next - 140.0).abs() < 1e-12);
    }

    #[test]
    fn ema_mean_branch_during_warmup() {
        let mut t = LoadTracker::new(TrackerKind::Ema, 5, None).unwrap();
        let outputs: Vec<f64> = [10.0, 20.0, 30.0, 40.0, 50.0].iter().map(|&v| t.push(v)).collect();
        assert_eq!(outputs, vec![10.0, 15.0, 20.0, 25.0, 30.0]);
    }

    #[test]
    fn constant_stream_is_a_fixed_point() {
        for kind in [TrackerKind::Sma, TrackerKind::Ema] {
            let mut t = LoadTracker::new(kind, 4, None).unwrap();
            for _ in 0..50 {
                assert_eq!(t.push(321.0), 321.0);
            }
        }
    }

    #[test]
    fn rising_load_extrapolation_wins() {
        let l = [100.0, 150.0, 200.0];
        let (m, a, line) = literal_line(&l, 10.0, 1.0);
        assert_eq!((m, a, line), (50.0, -300.0, 250.0));
        assert_eq!(extrapolate(100.0, 200.0, 2, 1), 250.0);
        assert_eq!(predictor_with(&l, Some(1.2)).predict(), 250.0);
    }

    #[test]
    fn falling_load_bottoming_wins() {
        let l = [300.0, 200.0, 100.0];
        let (m, a, line) = literal_line(&l, 10.0, 1.0);
        assert_eq!((m, a, line), (-100.0, 1100.0, 0.0));
        assert!((predictor_with(&l, Some(1.2)).predict() - 120.0).abs() < 1e-12);
        assert_eq!(predictor_with(&l, None).predict(), 0.0);
    }

    #[test]
    fn flat_load_is_lifted_by_beta() {
        let p = predictor_with(&[80.0, 80.0], Some(1.2));
        assert!((p.predict() - 96.0).abs() < 1e-12);
        assert_eq!(predictor_with(&[80.0, 80.0], None).predict(), 80.0);
    }

    #[test]
    fn single_output_uses_flat_line() {
        let p = predictor_with(&[50.0], Some(1.5));
        assert_eq!(p.predict(), 75.0);
        assert_eq!(predictor_with(&[50.0], None).predict(), 50.0);
    }

    #[test]
    fn config_validation() {
        assert!(TinyConfig::new(TrackerKind::Ema, 1, 1).validate().is_err());
        assert!(TinyConfig::new(TrackerKind::Ema, 3, 4).validate().is_err());
        assert!(TinyConfig::new(TrackerKind::Sma, 3, 1).validate().is_err());
        let mut c = TinyConfig::new(TrackerKind::Ema, 5, 3);
        c.beta = Some(0.9);
        assert!(c.validate().is_err());
        c.beta = Some(1.2);
        c.alpha = Some(1.5);
        assert!(c.validate().is_err());
        assert_eq!(TinyConfig::new(TrackerKind::Ema, 5, 3).label(), "ema5-3");
    }

    #[test]
    fn constant_usage_steady_state_target() {
        let mut r = TinyRecommender::new(TinyConfig::new(TrackerKind::Ema, 5, 3)).unwrap();
        let mut rec = None;
        for t in 0..100 {
            rec = Some(r.observe(CpuSample::from_millicores(t, 500)).unwrap());
        }
        assert_eq!(rec.unwrap().target(), 600);
    }

    #[test]
    fn no_history_bounds_are_maximally_permissive() {
        let mut r = TinyRecommender::new(TinyConfig::new(TrackerKind::Sma, 3, 2)).unwrap();
        let rec = r.observe(CpuSample::from_millicores(0, 100)).unwrap();
        assert_eq!(rec.target(), 120);
        assert_eq!(rec.lower(), 0);
        assert_eq!(rec.upper(), 12_000);
    }

    #[test]
    fn step_response() {
        for size in 2..=10usize {
            for kind in [TrackerKind::Sma, TrackerKind::Ema] {
                let mut t = LoadTracker::new(kind, size, None).unwrap();
                for _ in 0..size {
                    t.push(0.0);
                }
                let mut last = 0.0;
                for _ in 0..size {
                    last = t.push(1000.0);
                }
                match kind {
                    TrackerKind::Sma => assert_eq!(last, 1000.0),
                    TrackerKind::Ema => assert!(last >= 860.0, "size {size}: {last}"),
                }
            }
        }
    }

    proptest! {
        #[test]
        fn bottoming_guarantee(
            stream in prop::collection::vec(0u64..4_000, 1..120),
            beta in 1.0f64..2.0,
            size in 2usize..8,
            extra in 0usize..6,
        ) {
            let trackers = 2 + extra % (size - 1);
            let mut config = TinyConfig::new(TrackerKind::Ema, size, trackers.min(size));
            config.beta = Some(beta);
            let mut tracker = LoadTracker::new(config.tracker, size, None).unwrap();
            let mut predictor = LoadPredictor::new(config.trackers, 1, Some(beta)).unwrap();
            for v in stream {
                let l = tracker.push(v as f64);
                predictor.push(l);
                prop_assert!(predictor.predict() >= beta * l);
            }
        }

        #[test]
        fn rising_outputs_never_predict_below_latest(
            start in 0.0f64..1000.0,
            steps in prop::collection::vec(0.0f64..200.0, 1..6),
        ) {
            let mut outputs = vec![start];
            for s in &steps {
                let next = outputs.last().unwrap() + s;
                outputs.push(next);
            }
            let p = predictor_with(&outputs, None);
            prop_assert!(p.predict() >= *outputs.last().unwrap() - 1e-9);
        }

        #[test]
        fn recommendation_bounds_are_ordered(
            stream in prop::collection::vec(0u64..10_000, 1..200),
            ema in any::<bool>(),
        ) {
            let kind = if ema { TrackerKind::Ema } else { TrackerKind::Sma };
            let mut r = TinyRecommender::new(TinyConfig::new(kind, 5, 3)).unwrap();
            for (t, v) in stream.into_iter().enumerate() {
                let rec = r.observe(CpuSample::from_millicores(t as u64, v)).unwrap();
                prop_assert!(rec.lower() <= rec.target() && rec.target() <= rec.upper());
            }
        }
    }
}
