//! Run configuration, read from TOML and overlaid by command-line values.
//!
//! ```toml
//! profile = "default-17m"          # or: trace = "bursty.csv"; either may be a list
//! recommenders = ["ema5-3", "vpa,history_unit=3600"]
//! cooldown = 10
//! min_change = 20
//! initial_request = 500
//! seed = 7
//! out = "results"
//! ```

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::policy::PolicyOverrides;
use crate::recommender::RecommenderSetup;
use crate::sim::{default_profile, default_profiles, BurstProfile, Trace};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D, T>(de: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

/// Every field is optional so a file and the command line can each supply a
/// part; [`RunConfig::overlay`] merges them.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, deserialize_with = "one_or_many")]
    pub trace: Vec<PathBuf>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub profile: Vec<String>,
    #[serde(default)]
    pub recommenders: Vec<String>,
    pub cooldown: Option<u64>,
    pub min_change: Option<u64>,
    pub initial_request: Option<u64>,
    pub min_request: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Cold/warm boundary in seconds; defaults to the first repetition for
    /// generated profiles.
    pub split: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    /// Values set in `flags` win. Lists are replaced, not appended, and a
    /// trace source given on the command line replaces both source kinds.
    pub fn overlay(self, flags: RunConfig) -> RunConfig {
        let flag_source = !flags.trace.is_empty() || !flags.profile.is_empty();
        let (trace, profile) = if flag_source {
            (flags.trace, flags.profile)
        } else {
            (self.trace, self.profile)
        };
        RunConfig {
            trace,
            profile,
            recommenders: if flags.recommenders.is_empty() {
                self.recommenders
            } else {
                flags.recommenders
            },
            cooldown: flags.cooldown.or(self.cooldown),
            min_change: flags.min_change.or(self.min_change),
            initial_request: flags.initial_request.or(self.initial_request),
            min_request: flags.min_request.or(self.min_request),
            seed: flags.seed.or(self.seed),
            out: flags.out.or(self.out),
            split: flags.split.or(self.split),
        }
    }

    pub fn policy(&self) -> PolicyOverrides {
        PolicyOverrides {
            cooldown: self.cooldown,
            min_change: self.min_change,
            initial_request: self.initial_request,
            min_request: self.min_request,
        }
    }

    /// Parses the recommender list, falling back to `default` when empty.
    pub fn setups(&self, default: &[&str]) -> Result<Vec<RecommenderSetup>> {
        let specs: Vec<&str> = if self.recommenders.is_empty() {
            default.to_vec()
        } else {
            self.recommenders.iter().map(String::as_str).collect()
        };
        if specs.is_empty() {
            return Err(Error::config("at least one recommender is required"));
        }
        let setups = specs.iter().map(|s| s.parse()).collect::<Result<Vec<RecommenderSetup>>>()?;
        for (i, a) in setups.iter().enumerate() {
            if setups[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::config(format!("recommender `{}` listed twice", a.name)));
            }
        }
        Ok(setups)
    }

    /// Every trace source, in order: files first, then profiles. With
    /// `default_all`, no source means all built-in profiles.
    pub fn sources(&self, default_all: bool) -> Result<Vec<TraceSource>> {
        let mut sources: Vec<TraceSource> = self.trace.iter().cloned().map(TraceSource::File).collect();
        for name in &self.profile {
            let profile = default_profile(name).ok_or_else(|| {
                let known: Vec<String> = default_profiles().into_iter().map(|p| p.name).collect();
                Error::config(format!("unknown profile `{name}` (known: {})", known.join(", ")))
            })?;
            sources.push(TraceSource::Profile(profile));
        }
        if sources.is_empty() && default_all {
            sources.extend(default_profiles().into_iter().map(TraceSource::Profile));
        }
        if let Some(seed) = self.seed {
            for s in &mut sources {
                if let TraceSource::Profile(p) = s {
                    p.seed = seed;
                }
            }
        }
        if sources.is_empty() {
            return Err(Error::config("no trace given: use a trace file or a profile"));
        }
        Ok(sources)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceSource {
    File(PathBuf),
    Profile(BurstProfile),
}

impl TraceSource {
    /// Loads the trace and, for generated profiles, the cold-segment length.
    pub fn load(&self) -> Result<(Trace, Option<usize>)> {
        match self {
            TraceSource::File(path) => {
                let file = File::open(path)
                    .map_err(|e| Error::config(format!("cannot open trace {}: {e}", path.display())))?;
                let name = path
                    .file_stem()
                    .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
                Ok((Trace::from_csv(name, file)?, None))
            }
            TraceSource::Profile(p) => Ok((p.generate()?, Some(p.cold_segment_len()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_file() {
        let c = RunConfig::from_toml(
            r#"
            profile = "default-17m"
            recommenders = ["ema5-3", "vpa"]
            cooldown = 5
            min_change = 30
            initial_request = 400
            seed = 7
            out = "results"
            split = 66
            "#,
        )
        .unwrap();
        assert_eq!(c.profile, vec!["default-17m"]);
        assert_eq!(c.cooldown, Some(5));
        assert_eq!(c.out.as_deref(), Some(Path::new("results")));
        assert_eq!(c.setups(&[]).unwrap().len(), 2);
        let sources = c.sources(false).unwrap();
        assert!(matches!(&sources[0], TraceSource::Profile(p) if p.seed == 7));
    }

    #[test]
    fn lists_and_unknown_keys() {
        let c = RunConfig::from_toml(r#"trace = ["a.csv", "b.csv"]"#).unwrap();
        assert_eq!(c.trace.len(), 2);
        assert!(RunConfig::from_toml("coldown = 5").is_err());
        assert!(RunConfig::from_toml("cooldown = -1").is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let file = RunConfig {
            profile: vec!["default-lr".into()],
            recommenders: vec!["vpa".into()],
            cooldown: Some(30),
            min_change: Some(50),
            seed: Some(1),
            ..RunConfig::default()
        };
        let flags = RunConfig {
            trace: vec!["x.csv".into()],
            cooldown: Some(3),
            ..RunConfig::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.trace, vec![PathBuf::from("x.csv")]);
        assert!(merged.profile.is_empty());
        assert_eq!(merged.recommenders, vec!["vpa"]);
        assert_eq!(merged.cooldown, Some(3));
        assert_eq!(merged.min_change, Some(50));
        assert_eq!(merged.seed, Some(1));
    }

    #[test]
    fn source_errors() {
        let c = RunConfig {
            profile: vec!["missing".into()],
            ..RunConfig::default()
        };
        assert!(matches!(c.sources(true), Err(Error::Config(_))));
        assert!(RunConfig::default().sources(false).is_err());
        assert_eq!(RunConfig::default().sources(true).unwrap().len(), 6);

        let err = TraceSource::File("/nonexistent/trace.csv".into()).load().unwrap_err();
        assert!(err.to_string().contains("/nonexistent/trace.csv"));
    }

    #[test]
    fn setups_use_defaults_and_reject_duplicates() {
        let c = RunConfig::default();
        assert_eq!(c.setups(&["vpa", "hw"]).unwrap().len(), 2);
        assert!(c.setups(&[]).is_err());
        let dup = RunConfig {
            recommenders: vec!["ema5-3".into(), "ema5-3".into()],
            ..RunConfig::default()
        };
        assert!(dup.setups(&[]).is_err());
    }
}
