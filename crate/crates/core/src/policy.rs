//! The gate between a recommendation stream and the applied CPU request.
//!
//! A new request is applied only when the current request falls outside the
//! recommendation's bounds, the cooldown since the last update has elapsed,
//! and the change is at least `min_change`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Millicores, Recommendation};

pub const DEFAULT_COOLDOWN: u64 = 10;
pub const DEFAULT_MIN_CHANGE: Millicores = 20;
pub const DEFAULT_INITIAL_REQUEST: Millicores = 500;
pub const DEFAULT_MIN_REQUEST: Millicores = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Seconds that must pass between two updates.
    pub cooldown: u64,
    pub min_change: Millicores,
    pub initial_request: Millicores,
    /// Floor applied to every new request so an allocation always exists.
    pub min_request: Millicores,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            cooldown: DEFAULT_COOLDOWN,
            min_change: DEFAULT_MIN_CHANGE,
            initial_request: DEFAULT_INITIAL_REQUEST,
            min_request: DEFAULT_MIN_REQUEST,
        }
    }
}

impl PolicyConfig {
    /// No cooldown and no minimum change.
    pub fn ungated() -> Self {
        PolicyConfig {
            cooldown: 0,
            min_change: 0,
            ..PolicyConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_request == 0 {
            return Err(Error::config("minimum request must be positive"));
        }
        if self.initial_request < self.min_request {
            return Err(Error::config(format!(
                "initial request {}m is below the minimum request {}m",
                self.initial_request, self.min_request
            )));
        }
        Ok(())
    }
}

/// Optional policy values layered over a recommender's defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyOverrides {
    pub cooldown: Option<u64>,
    pub min_change: Option<Millicores>,
    pub initial_request: Option<Millicores>,
    pub min_request: Option<Millicores>,
}

impl PolicyOverrides {
    pub fn apply(&self, base: PolicyConfig) -> PolicyConfig {
        PolicyConfig {
            cooldown: self.cooldown.unwrap_or(base.cooldown),
            min_change: self.min_change.unwrap_or(base.min_change),
            initial_request: self.initial_request.unwrap_or(base.initial_request),
            min_request: self.min_request.unwrap_or(base.min_request),
        }
    }

    /// `self` wins where both are set.
    pub fn or(self, other: PolicyOverrides) -> PolicyOverrides {
        PolicyOverrides {
            cooldown: self.cooldown.or(other.cooldown),
            min_change: self.min_change.or(other.min_change),
            initial_request: self.initial_request.or(other.initial_request),
            min_request: self.min_request.or(other.min_request),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateDecision {
    pub request: Millicores,
    pub updated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyState {
    config: PolicyConfig,
    current_request: Millicores,
    last_update: Option<u64>,
    last_call: Option<u64>,
}

impl PolicyState {
    pub fn new(config: PolicyConfig) -> Result<Self> {
        config.validate()?;
        Ok(PolicyState {
            config,
            current_request: config.initial_request,
            last_update: None,
            last_call: None,
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn current_request(&self) -> Millicores {
        self.current_request
    }

    pub fn last_update(&self) -> Option<u64> {
        self.last_update
    }

    /// Decides whether `rec` replaces the current request at time `t`.
    pub fn gate(&mut self, t: u64, rec: &Recommendation) -> Result<GateDecision> {
        if let Some(last) = self.last_call {
            if t < last {
                return Err(Error::ordering(format!("gate called at t={t} after t={last}")));
            }
        }
        self.last_call = Some(t);

        let current = self.current_request;
        let candidate = rec.target().max(self.config.min_request);
        let out_of_bounds = !rec.contains(current);
        let cooled_down = self
            .last_update
            .is_none_or(|last| t - last >= self.config.cooldown);
        let big_enough = candidate.abs_diff(current) >= self.config.min_change;

        if out_of_bounds && cooled_down && big_enough && candidate != current {
            self.current_request = candidate;
            self.last_update = Some(t);
            Ok(GateDecision {
                request: candidate,
                updated: true,
            })
        } else {
            Ok(GateDecision {
                request: current,
                updated: false,
            })
        }
    }
}
