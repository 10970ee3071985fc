//! The four recommenders and the `SPEC` grammar used to select them:
//! `vpa`, `hw`, `sma<size>-<trackers>` or `ema<size>-<trackers>`, each with
//! optional `,key=value` suffixes.

pub mod confidence;
pub mod holt_winters;
pub mod hw;
pub mod tiny;
pub mod vpa;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use confidence::ConfidenceMultiplier;
pub use holt_winters::{HoltWinters, SmoothingParams};
pub use hw::{HwConfig, HwRecommender};
pub use tiny::{LoadPredictor, LoadTracker, TinyConfig, TinyRecommender, TrackerKind};
pub use vpa::{VpaConfig, VpaRecommender};

use crate::error::{Error, Result};
use crate::model::Recommender;
use crate::policy::{PolicyConfig, PolicyOverrides};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RecommenderKind {
    Vpa(VpaConfig),
    Tiny(TinyConfig),
    Hw(HwConfig),
}

impl RecommenderKind {
    pub fn vpa() -> Self {
        RecommenderKind::Vpa(VpaConfig::default())
    }

    pub fn hw() -> Self {
        RecommenderKind::Hw(HwConfig::default())
    }

    pub fn ema(size: usize, trackers: usize) -> Self {
        RecommenderKind::Tiny(TinyConfig::new(TrackerKind::Ema, size, trackers))
    }

    pub fn sma(size: usize, trackers: usize) -> Self {
        RecommenderKind::Tiny(TinyConfig::new(TrackerKind::Sma, size, trackers))
    }

    pub fn label(&self) -> String {
        match self {
            RecommenderKind::Vpa(_) => "vpa".to_owned(),
            RecommenderKind::Hw(_) => "hw".to_owned(),
            RecommenderKind::Tiny(c) => c.label(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RecommenderKind::Vpa(c) => c.validate(),
            RecommenderKind::Tiny(c) => c.validate(),
            RecommenderKind::Hw(c) => c.validate(),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Recommender>> {
        Ok(match *self {
            RecommenderKind::Vpa(c) => Box::new(VpaRecommender::new(c)?),
            RecommenderKind::Tiny(c) => Box::new(TinyRecommender::new(c)?),
            RecommenderKind::Hw(c) => Box::new(HwRecommender::new(c)?),
        })
    }

    /// The stock VPA has no cooldown or minimum change; the others use the
    /// policy defaults.
    pub fn default_policy(&self) -> PolicyConfig {
        match self {
            RecommenderKind::Vpa(_) => PolicyConfig::ungated(),
            _ => PolicyConfig::default(),
        }
    }
}

/// A recommender kind plus any per-recommender policy values, as parsed from
/// one `--recommender` argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommenderSetup {
    pub name: String,
    pub kind: RecommenderKind,
    pub policy: PolicyOverrides,
}

impl RecommenderSetup {
    pub fn new(kind: RecommenderKind) -> Self {
        RecommenderSetup {
            name: kind.label(),
            kind,
            policy: PolicyOverrides::default(),
        }
    }

    pub fn with_policy(mut self, policy: PolicyOverrides) -> Self {
        self.policy = policy;
        self
    }

    /// Resolves the policy: per-recommender values, then `global`, then the
    /// kind's defaults.
    pub fn resolve_policy(&self, global: &PolicyOverrides) -> PolicyConfig {
        self.policy.or(*global).apply(self.kind.default_policy())
    }
}

impl fmt::Display for RecommenderSetup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl FromStr for RecommenderSetup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let text = s.trim();
        let mut parts = text.split(',').map(str::trim);
        let base = parts.next().unwrap_or_default().to_ascii_lowercase();
        let mut kind = parse_base(&base)?;
        let mut policy = PolicyOverrides::default();
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::config(format!("`{part}` in `{text}` is not key=value")))?;
            let key = key.trim().to_ascii_lowercase().replace('-', "_");
            let value = value.trim();
            if apply_policy_key(&mut policy, &key, value)? {
                continue;
            }
            apply_kind_key(&mut kind, &key, value)
                .map_err(|e| Error::config(format!("recommender `{text}`: {e}")))?;
        }
        kind.validate()
            .map_err(|e| Error::config(format!("recommender `{text}`: {e}")))?;
        Ok(RecommenderSetup {
            name: text.to_owned(),
            kind,
            policy,
        })
    }
}

fn parse_base(base: &str) -> Result<RecommenderKind> {
    match base {
        "vpa" => return Ok(RecommenderKind::vpa()),
        "hw" => return Ok(RecommenderKind::hw()),
        _ => {}
    }
    let (tracker, dims) = if let Some(rest) = base.strip_prefix("ema") {
        (TrackerKind::Ema, rest)
    } else if let Some(rest) = base.strip_prefix("sma") {
        (TrackerKind::Sma, rest)
    } else {
        return Err(Error::config(format!(
            "unknown recommender `{base}` (expected vpa, hw, sma<size>-<trackers> or ema<size>-<trackers>)"
        )));
    };
    let (size, trackers) = dims
        .split_once('-')
        .ok_or_else(|| Error::config(format!("`{base}` needs <size>-<trackers>")))?;
    let size = size
        .parse()
        .map_err(|_| Error::config(format!("bad tracker size in `{base}`")))?;
    let trackers = trackers
        .parse()
        .map_err(|_| Error::config(format!("bad tracker count in `{base}`")))?;
    Ok(RecommenderKind::Tiny(TinyConfig::new(tracker, size, trackers)))
}

fn apply_policy_key(policy: &mut PolicyOverrides, key: &str, value: &str) -> Result<bool> {
    let slot = match key {
        "cooldown" => &mut policy.cooldown,
        "min_change" => &mut policy.min_change,
        "initial_request" => &mut policy.initial_request,
        "min_request" => &mut policy.min_request,
        _ => return Ok(false),
    };
    *slot = Some(parse_num(key, value)?);
    Ok(true)
}

fn apply_kind_key(kind: &mut RecommenderKind, key: &str, value: &str) -> Result<()> {
    match kind {
        RecommenderKind::Vpa(c) => match key {
            "first_bucket" => c.histogram.first_bucket_size = parse_num(key, value)?,
            "ratio" => c.histogram.ratio = parse_num(key, value)?,
            "max_value" => c.histogram.max_value = parse_num(key, value)?,
            "half_life" => c.histogram.half_life = parse_num(key, value)?,
            "upper_cap" => c.confidence.upper_cap = parse_num(key, value)?,
            "history_unit" => c.confidence.history_unit = parse_num(key, value)?,
            _ => return Err(unknown_key(key)),
        },
        RecommenderKind::Tiny(c) => match key {
            "beta" => {
                c.beta = match value.to_ascii_lowercase().as_str() {
                    "off" | "none" => None,
                    _ => Some(parse_num(key, value)?),
                }
            }
            "k" | "horizon" => c.horizon = parse_num(key, value)?,
            "alpha" => c.alpha = Some(parse_num(key, value)?),
            "upper_cap" => c.confidence.upper_cap = parse_num(key, value)?,
            "history_unit" => c.confidence.history_unit = parse_num(key, value)?,
            _ => return Err(unknown_key(key)),
        },
        RecommenderKind::Hw(c) => match key {
            "season" => c.season_length = parse_num(key, value)?,
            "buffer" => c.error_buffer = parse_num(key, value)?,
            "preset" => c.preset = parse_num(key, value)?,
            "alpha" => c.params.alpha = parse_num(key, value)?,
            "beta" => c.params.beta = parse_num(key, value)?,
            "gamma" => c.params.gamma = parse_num(key, value)?,
            "fit" => c.fit = parse_num(key, value)?,
            _ => return Err(unknown_key(key)),
        },
    }
    Ok(())
}

fn unknown_key(key: &str) -> Error {
    Error::config(format!("unknown parameter `{key}`"))
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("invalid value `{value}` for `{key}`")))
}
