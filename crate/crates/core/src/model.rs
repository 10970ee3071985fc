//! Shared domain types, the recommender contract and the slack / insufficient
//! CPU metrics.
//!
//! All CPU quantities crossing a public boundary are integer millicores
//! (`100` = 0.1 CPU). Recommenders compute in `f64` internally and round
//! half-up when they hand back a [`Recommendation`].

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CPU quantity in millicores.
pub type Millicores = u64;

/// Rounds a real millicore value half-up to an integer. Negative and NaN
/// inputs map to zero.
pub fn round_millicores(value: f64) -> Millicores {
    if value.is_nan() || value <= 0.0 {
        return 0;
    }
    let rounded = (value + 0.5).floor();
    if rounded >= u64::MAX as f64 {
        u64::MAX
    } else {
        rounded as u64
    }
}

/// One per-second CPU usage observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpuSample {
    t: u64,
    usage: Millicores,
}

impl CpuSample {
    /// Builds a sample, rejecting negative usage.
    pub fn new(t: u64, usage: i64) -> Result<Self> {
        if usage < 0 {
            return Err(Error::domain(format!(
                "negative CPU usage {usage}m at t={t}"
            )));
        }
        Ok(CpuSample {
            t,
            usage: usage as Millicores,
        })
    }

    pub fn from_millicores(t: u64, usage: Millicores) -> Self {
        CpuSample { t, usage }
    }

    /// Seconds since trace start.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn usage(&self) -> Millicores {
        self.usage
    }
}

/// A `(target, lower bound, upper bound)` triple with `lower <= target <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    target: Millicores,
    lower: Millicores,
    upper: Millicores,
}

impl Recommendation {
    pub fn new(target: Millicores, lower: Millicores, upper: Millicores) -> Result<Self> {
        if lower > target || target > upper {
            return Err(Error::domain(format!(
                "recommendation bounds out of order: lower={lower} target={target} upper={upper}"
            )));
        }
        Ok(Recommendation {
            target,
            lower,
            upper,
        })
    }

    /// All three values equal to `value`.
    pub fn flat(value: Millicores) -> Self {
        Recommendation {
            target: value,
            lower: value,
            upper: value,
        }
    }

    /// Builds a recommendation from real-valued estimates: the bounds are
    /// re-clamped around the target, then each value is rounded half-up.
    pub fn from_real(target: f64, lower: f64, upper: f64) -> Self {
        let target = if target.is_nan() { 0.0 } else { target.max(0.0) };
        let lower = if lower.is_nan() { 0.0 } else { lower.clamp(0.0, target) };
        let upper = if upper.is_nan() { target } else { upper.max(target) };
        Recommendation {
            target: round_millicores(target),
            lower: round_millicores(lower),
            upper: round_millicores(upper),
        }
    }

    pub fn target(&self) -> Millicores {
        self.target
    }

    pub fn lower(&self) -> Millicores {
        self.lower
    }

    pub fn upper(&self) -> Millicores {
        self.upper
    }

    pub fn contains(&self, request: Millicores) -> bool {
        self.lower <= request && request <= self.upper
    }
}

/// The uniform interface every recommender implements.
///
/// A recommender is driven by a single owner, one sample at a time, in
/// strictly increasing `t` order.
pub trait Recommender: Send {
    /// Short label such as `ema5-3` or `vpa`.
    fn name(&self) -> &str;

    /// Consumes one sample and returns the recommendation after it.
    fn observe(&mut self, sample: CpuSample) -> Result<Recommendation>;
}

/// Rejects samples whose timestamps do not strictly increase.
#[derive(Debug, Clone, Default)]
pub(crate) struct SampleClock {
    first: Option<u64>,
    last: Option<u64>,
}

impl SampleClock {
    pub(crate) fn advance(&mut self, t: u64) -> Result<()> {
        if let Some(last) = self.last {
            if t <= last {
                return Err(Error::ordering(format!(
                    "sample at t={t} does not follow t={last}"
                )));
            }
        }
        self.first.get_or_insert(t);
        self.last = Some(t);
        Ok(())
    }

    /// Seconds elapsed since the first sample (0 before any sample).
    pub(crate) fn elapsed(&self) -> u64 {
        match (self.first, self.last) {
            (Some(first), Some(last)) => last - first,
            _ => 0,
        }
    }
}

/// One simulated second: the request in force, the usage replayed and the
/// recommendation produced after observing that usage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub t: u64,
    pub usage: Millicores,
    pub request: Millicores,
    pub target: Millicores,
    pub lower: Millicores,
    pub upper: Millicores,
    /// The gate changed the request at the end of this second.
    pub updated: bool,
}

/// Per-second record of applied request vs. actual usage.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AllocationTimeline {
    entries: Vec<TimelineEntry>,
}

impl AllocationTimeline {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(capacity: usize) -> Self {
        AllocationTimeline {
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, entry: TimelineEntry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[TimelineEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn segment(&self, range: Range<usize>) -> &[TimelineEntry] {
        &self.entries[range]
    }
}

impl From<Vec<TimelineEntry>> for AllocationTimeline {
    fn from(entries: Vec<TimelineEntry>) -> Self {
        AllocationTimeline { entries }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub avg_slack: f64,
    pub avg_insufficient: f64,
    pub update_count: u64,
    pub throttled_seconds: u64,
}

impl MetricsSummary {
    pub fn total(&self) -> f64 {
        self.avg_slack + self.avg_insufficient
    }
}

/// Average slack and insufficient CPU over a timeline (or a slice of one).
///
/// Sums are accumulated as integers, so the result does not depend on entry
/// order.
pub fn compute_metrics(entries: &[TimelineEntry]) -> Result<MetricsSummary> {
    if entries.is_empty() {
        return Err(Error::domain("cannot compute metrics of an empty timeline"));
    }
    let mut slack: u128 = 0;
    let mut insufficient: u128 = 0;
    let mut throttled = 0u64;
    let mut updates = 0u64;
    for e in entries {
        if e.request >= e.usage {
            slack += u128::from(e.request - e.usage);
        } else {
            insufficient += u128::from(e.usage - e.request);
            throttled += 1;
        }
        updates += u64::from(e.updated);
    }
    let n = entries.len() as f64;
    Ok(MetricsSummary {
        avg_slack: slack as f64 / n,
        avg_insufficient: insufficient as f64 / n,
        update_count: updates,
        throttled_seconds: throttled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entries(usage: &[u64], request: &[u64]) -> Vec<TimelineEntry> {
        usage
            .iter()
            .zip(request)
            .enumerate()
            .map(|(t, (&usage, &request))| TimelineEntry {
                t: t as u64,
                usage,
                request,
                target: request,
                lower: request,
                upper: request,
                updated: false,
            })
            .collect()
    }

    #[test]
    fn metrics_worked_example() {
        let m = compute_metrics(&entries(&[100, 200, 300], &[250, 250, 250])).unwrap();
        assert!((m.avg_slack - 200.0 / 3.0).abs() < 1e-12);
        assert!((m.avg_insufficient - 50.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.throttled_seconds, 1);
        assert_eq!(format!("{:.2}", m.avg_slack), "66.67");
        assert_eq!(format!("{:.2}", m.avg_insufficient), "16.67");
    }

    #[test]
    fn exact_allocation_has_no_waste() {
        let m = compute_metrics(&entries(&[5, 80, 1200], &[5, 80, 1200])).unwrap();
        assert_eq!(m.avg_slack, 0.0);
        assert_eq!(m.avg_insufficient, 0.0);
        assert_eq!(m.throttled_seconds, 0);
    }

    #[test]
    fn idle_container_is_all_slack() {
        let m = compute_metrics(&entries(&[0, 0], &[10, 10])).unwrap();
        assert_eq!(m.avg_slack, 10.0);
        assert_eq!(m.avg_insufficient, 0.0);
    }

    #[test]
    fn empty_timeline_is_rejected() {
        assert!(matches!(compute_metrics(&[]), Err(Error::Domain(_))));
    }

    #[test]
    fn negative_usage_is_rejected() {
        assert!(matches!(CpuSample::new(3, -1), Err(Error::Domain(_))));
        assert_eq!(CpuSample::new(3, 7).unwrap().usage(), 7);
    }

    #[test]
    fn clock_rejects_regression() {
        let mut clock = SampleClock::default();
        clock.advance(4).unwrap();
        clock.advance(5).unwrap();
        assert!(matches!(clock.advance(5), Err(Error::Ordering(_))));
        assert!(matches!(clock.advance(2), Err(Error::Ordering(_))));
        assert_eq!(clock.elapsed(), 1);
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(round_millicores(0.5), 1);
        assert_eq!(round_millicores(1.49), 1);
        assert_eq!(round_millicores(2.5), 3);
        assert_eq!(round_millicores(-3.0), 0);
        assert_eq!(round_millicores(f64::NAN), 0);
    }

    #[test]
    fn from_real_reclamps_bounds() {
        let r = Recommendation::from_real(100.0, 150.0, 90.0);
        assert_eq!((r.lower(), r.target(), r.upper()), (100, 100, 100));
        assert!(Recommendation::new(10, 20, 30).is_err());
    }

    proptest! {
        #[test]
        fn slack_plus_insufficient_is_mean_abs_error(
            pairs in prop::collection::vec((0u64..5_000, 1u64..5_000), 1..40)
        ) {
            let (usage, request): (Vec<u64>, Vec<u64>) = pairs.iter().copied().unzip();
            let m = compute_metrics(&entries(&usage, &request)).unwrap();
            let brute: f64 = pairs
                .iter()
                .map(|&(u, r)| (r as f64 - u as f64).abs())
                .sum::<f64>() / pairs.len() as f64;
            prop_assert!((m.avg_slack + m.avg_insufficient - brute).abs() < 1e-9 * brute.max(1.0));
            prop_assert!(m.throttled_seconds as usize <= pairs.len());
        }

        #[test]
        fn metrics_ignore_entry_order(
            pairs in prop::collection::vec((0u64..5_000, 1u64..5_000), 1..40),
            seed in any::<u64>()
        ) {
            let (usage, request): (Vec<u64>, Vec<u64>) = pairs.iter().copied().unzip();
            let original = entries(&usage, &request);
            let mut shuffled = original.clone();
            // Deterministic Fisher-Yates driven by the proptest seed.
            let mut state = seed | 1;
            for i in (1..shuffled.len()).rev() {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                shuffled.swap(i, (state % (i as u64 + 1)) as usize);
            }
            prop_assert_eq!(compute_metrics(&original).unwrap(), compute_metrics(&shuffled).unwrap());
        }
    }
}
