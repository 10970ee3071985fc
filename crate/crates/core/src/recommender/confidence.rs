use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// History-length dependent multipliers that widen the bounds when little
/// data exists and converge to 1 as history grows.
///
/// `history_unit` is the number of seconds that count as one unit of history
/// length `d`; the VPA recommender measures in days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceMultiplier {
    pub history_unit: f64,
    /// Upper multiplier used with no history, and the ceiling afterwards.
    pub upper_cap: f64,
}

impl ConfidenceMultiplier {
    pub fn validate(&self) -> Result<()> {
        if !(self.history_unit.is_finite() && self.history_unit > 0.0) {
            return Err(Error::config("confidence history unit must be positive"));
        }
        if self.upper_cap.is_nan() || self.upper_cap < 1.0 {
            return Err(Error::config("upper bound cap must be at least 1"));
        }
        Ok(())
    }

    pub fn history_length(&self, elapsed_seconds: u64) -> f64 {
        elapsed_seconds as f64 / self.history_unit
    }

    /// `(1 + 0.001/d)^-2`, zero with no history.
    pub fn lower(&self, d: f64) -> f64 {
        if d <= 0.0 {
            0.0
        } else {
            (1.0 + 0.001 / d).powi(-2)
        }
    }

    /// `1 + 1/d`, capped.
    pub fn upper(&self, d: f64) -> f64 {
        if d <= 0.0 {
            self.upper_cap
        } else {
            (1.0 + 1.0 / d).min(self.upper_cap)
        }
    }
}
