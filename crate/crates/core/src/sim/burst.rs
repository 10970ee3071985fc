//! Synthetic serverless invocation traces.
//!
//! A profile repeats `[ramp up, hold peak, ramp down, idle gap]`; the first
//! repetition stands for a cold start and the rest for warm starts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::trace::Trace;
use crate::error::{Error, Result};
use crate::model::{round_millicores, Millicores};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstProfile {
    pub name: String,
    pub idle_millicores: Millicores,
    pub peak_millicores: Millicores,
    /// Seconds held at peak per invocation.
    pub burst_duration: u64,
    /// Idle seconds after each invocation.
    pub gap_duration: u64,
    pub repetitions: u32,
    pub ramp_seconds: u64,
    pub noise_std_dev: f64,
    pub seed: u64,
}

impl BurstProfile {
    pub fn validate(&self) -> Result<()> {
        if self.peak_millicores < self.idle_millicores {
            return Err(Error::domain(format!(
                "peak {}m below idle {}m",
                self.peak_millicores, self.idle_millicores
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::domain("a burst profile needs at least one repetition"));
        }
        if self.period() == 0 {
            return Err(Error::domain("a burst profile repetition cannot be empty"));
        }
        if !(self.noise_std_dev.is_finite() && self.noise_std_dev >= 0.0) {
            return Err(Error::domain("noise standard deviation must be non-negative"));
        }
        Ok(())
    }

    /// Seconds per repetition.
    pub fn period(&self) -> u64 {
        2 * self.ramp_seconds + self.burst_duration + self.gap_duration
    }

    pub fn total_seconds(&self) -> u64 {
        self.period() * u64::from(self.repetitions)
    }

    /// Length of the cold-start segment: the whole first repetition.
    pub fn cold_segment_len(&self) -> usize {
        self.period() as usize
    }

    /// Noise-free usage level at second `i` of one repetition.
    fn shape(&self, i: u64) -> f64 {
        let idle = self.idle_millicores as f64;
        let span = (self.peak_millicores - self.idle_millicores) as f64;
        let steps = (self.ramp_seconds + 1) as f64;
        let ramp = self.ramp_seconds;
        if i < ramp {
            idle + span * (i + 1) as f64 / steps
        } else if i < ramp + self.burst_duration {
            idle + span
        } else if i < 2 * ramp + self.burst_duration {
            let j = i - ramp - self.burst_duration;
            idle + span - span * (j + 1) as f64 / steps
        } else {
            idle
        }
    }

    pub fn generate(&self) -> Result<Trace> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noise = Normal::new(0.0, self.noise_std_dev)
            .map_err(|e| Error::domain(format!("noise distribution: {e}")))?;
        let period = self.period();
        let usage = (0..self.total_seconds()).map(|t| {
            let base = self.shape(t % period);
            let jitter = if self.noise_std_dev > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            round_millicores(base + jitter)
        });
        Trace::from_usage(self.name.clone(), usage)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

pub const DEFAULT_SEED: u64 = 42;

#[allow(clippy::too_many_arguments)]
fn profile(
    name: &str,
    idle: Millicores,
    peak: Millicores,
    burst: u64,
    gap: u64,
    reps: u32,
    ramp: u64,
    noise: f64,
) -> BurstProfile {
    BurstProfile {
        name: name.to_owned(),
        idle_millicores: idle,
        peak_millicores: peak,
        burst_duration: burst,
        gap_duration: gap,
        repetitions: reps,
        ramp_seconds: ramp,
        noise_std_dev: noise,
        seed: DEFAULT_SEED,
    }
}

/// Built-in profiles shaped after common serverless functions: image
/// rotation, logistic-regression training and video processing at several
/// input sizes. Each runs for roughly 15 to 25 minutes of invocations.
pub fn default_profiles() -> Vec<BurstProfile> {
    vec![
        profile("default-rotate", 20, 900, 240, 60, 4, 5, 40.0),
        profile("default-rotate-shorter", 20, 800, 15, 45, 15, 3, 40.0),
        profile("default-lr", 30, 1800, 600, 120, 2, 10, 60.0),
        profile("default-17m", 20, 1000, 15, 45, 15, 3, 50.0),
        profile("default-67m", 20, 1200, 90, 60, 8, 5, 50.0),
        profile("default-127m", 20, 1300, 240, 60, 4, 5, 50.0),
    ]
}

pub fn default_profile(name: &str) -> Option<BurstProfile> {
    default_profiles().into_iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trapezoid() -> BurstProfile {
        BurstProfile {
            name: "t".into(),
            idle_millicores: 0,
            peak_millicores: 1000,
            burst_duration: 15,
            gap_duration: 45,
            repetitions: 2,
            ramp_seconds: 3,
            noise_std_dev: 0.0,
            seed: 1,
        }
    }

    #[test]
    fn noiseless_trapezoid_pair() {
        let trace = trapezoid().generate().unwrap();
        assert_eq!(trace.len(), 2 * (15 + 45 + 2 * 3));
        let usage: Vec<u64> = trace.usage().collect();
        let mut one = vec![250, 500, 750];
        one.extend(std::iter::repeat_n(1000, 15));
        one.extend([750, 500, 250]);
        one.extend(std::iter::repeat_n(0, 45));
        let expected: Vec<u64> = one.iter().chain(one.iter()).copied().collect();
        assert_eq!(usage, expected);
    }

    #[test]
    fn same_seed_same_trace() {
        let p = BurstProfile {
            noise_std_dev: 80.0,
            ..trapezoid()
        };
        assert_eq!(p.generate().unwrap(), p.generate().unwrap());
        assert_ne!(p.generate().unwrap(), p.clone().with_seed(2).generate().unwrap());
    }

    #[test]
    fn idle_noise_is_centred() {
        let p = BurstProfile {
            idle_millicores: 500,
            peak_millicores: 1500,
            noise_std_dev: 50.0,
            repetitions: 40,
            ..trapezoid()
        };
        let trace = p.generate().unwrap();
        let period = p.period() as usize;
        let idle: Vec<f64> = trace
            .usage()
            .enumerate()
            .filter(|(t, _)| t % period >= period - p.gap_duration as usize)
            .map(|(_, u)| u as f64)
            .collect();
        let mean = idle.iter().sum::<f64>() / idle.len() as f64;
        let bound = 3.0 * 50.0 / (idle.len() as f64).sqrt();
        assert!((mean - 500.0).abs() < bound, "mean {mean}, bound {bound}");
    }

    #[test]
    fn invalid_profiles() {
        assert!(BurstProfile { peak_millicores: 0, idle_millicores: 5, ..trapezoid() }.generate().is_err());
        assert!(BurstProfile { repetitions: 0, ..trapezoid() }.generate().is_err());
        assert!(BurstProfile { noise_std_dev: -1.0, ..trapezoid() }.generate().is_err());
    }

    #[test]
    fn default_profiles_generate() {
        let profiles = default_profiles();
        assert_eq!(profiles.len(), 6);
        for p in profiles {
            let trace = p.generate().unwrap();
            assert_eq!(trace.len() as u64, p.total_seconds());
            assert!(p.cold_segment_len() < trace.len());
        }
        assert!(default_profile("default-17m").is_some());
        assert!(default_profile("nope").is_none());
    }
}
