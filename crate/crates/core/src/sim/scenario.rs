use serde::Serialize;

use super::trace::Trace;
use crate::error::{Error, Result};
use crate::model::{compute_metrics, AllocationTimeline, MetricsSummary, Recommender, TimelineEntry};
use crate::policy::{PolicyConfig, PolicyOverrides, PolicyState};
use crate::recommender::RecommenderSetup;

/// Replays `trace` through one recommender and gate.
///
/// The request recorded for second `t` is the one in force during that
/// second; the recommendation produced after observing `t` can only change
/// the request from `t + 1` on. Usage is replayed unchanged even when it
/// exceeds the request.
pub fn simulate(
    trace: &Trace,
    recommender: &mut dyn Recommender,
    policy: &PolicyConfig,
) -> Result<AllocationTimeline> {
    let mut gate = PolicyState::new(*policy)?;
    let mut timeline = AllocationTimeline::with_capacity(trace.len());
    for &sample in trace.samples() {
        let request = gate.current_request();
        let rec = recommender.observe(sample)?;
        let decision = gate.gate(sample.t(), &rec)?;
        timeline.push(TimelineEntry {
            t: sample.t(),
            usage: sample.usage(),
            request,
            target: rec.target(),
            lower: rec.lower(),
            upper: rec.upper(),
            updated: decision.updated,
        });
    }
    Ok(timeline)
}

#[derive(Debug, Clone, Serialize)]
pub struct RecommenderRun {
    pub name: String,
    pub policy: PolicyConfig,
    pub summary: MetricsSummary,
    /// Metrics over `[0, split)`, when a split was requested.
    pub cold: Option<MetricsSummary>,
    /// Metrics over `[split, len)`; absent when that range is empty.
    pub warm: Option<MetricsSummary>,
    #[serde(skip)]
    pub timeline: AllocationTimeline,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub trace: String,
    pub length: usize,
    pub split: Option<usize>,
    pub runs: Vec<RecommenderRun>,
}

impl ScenarioReport {
    pub fn run(&self, name: &str) -> Option<&RecommenderRun> {
        self.runs.iter().find(|r| r.name == name)
    }
}

fn run_one(
    trace: &Trace,
    setup: &RecommenderSetup,
    global: &PolicyOverrides,
    split: Option<usize>,
) -> Result<RecommenderRun> {
    let policy = setup.resolve_policy(global);
    let mut recommender = setup.kind.build()?;
    let timeline = simulate(trace, recommender.as_mut(), &policy)?;
    let summary = compute_metrics(timeline.entries())?;
    let (cold, warm) = match split {
        None => (None, None),
        Some(split) => {
            let cold = compute_metrics(timeline.segment(0..split))?;
            let warm = if split < timeline.len() {
                Some(compute_metrics(timeline.segment(split..timeline.len()))?)
            } else {
                None
            };
            (Some(cold), warm)
        }
    };
    Ok(RecommenderRun {
        name: setup.name.clone(),
        policy,
        summary,
        cold,
        warm,
        timeline,
    })
}

fn run(
    trace: &Trace,
    setups: &[RecommenderSetup],
    global: &PolicyOverrides,
    split: Option<usize>,
) -> Result<ScenarioReport> {
    if setups.is_empty() {
        return Err(Error::config("at least one recommender is required"));
    }
    let runs = setups
        .iter()
        .map(|s| run_one(trace, s, global, split))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioReport {
        trace: trace.name().to_owned(),
        length: trace.len(),
        split,
        runs,
    })
}

/// Runs every recommender over the whole trace, each with a fresh state.
pub fn run_scenario(
    trace: &Trace,
    setups: &[RecommenderSetup],
    global: &PolicyOverrides,
) -> Result<ScenarioReport> {
    run(trace, setups, global, None)
}

/// Like [`run_scenario`], additionally reporting metrics for the cold segment
/// `[0, split)` and the warm remainder.
pub fn run_cold_warm(
    trace: &Trace,
    setups: &[RecommenderSetup],
    global: &PolicyOverrides,
    split: usize,
) -> Result<ScenarioReport> {
    if split == 0 || split > trace.len() {
        return Err(Error::domain(format!(
            "split {split} outside 1..={} for trace `{}`",
            trace.len(),
            trace.name()
        )));
    }
    run(trace, setups, global, Some(split))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CpuSample, Recommendation};
    use crate::recommender::RecommenderKind;
    use crate::sim::BurstProfile;

    struct Fixed(u64);

    impl Recommender for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }

        fn observe(&mut self, _: CpuSample) -> Result<Recommendation> {
            Ok(Recommendation::flat(self.0))
        }
    }

    fn burst_trace(reps: u32) -> (BurstProfile, Trace) {
        let p = BurstProfile {
            name: "b".into(),
            idle_millicores: 50,
            peak_millicores: 1000,
            burst_duration: 15,
            gap_duration: 45,
            repetitions: reps,
            ramp_seconds: 3,
            noise_std_dev: 30.0,
            seed: 9,
        };
        let t = p.generate().unwrap();
        (p, t)
    }

    #[test]
    fn constant_allocation_closed_form() {
        let (_, trace) = burst_trace(3);
        let c = 400;
        let policy = PolicyConfig {
            initial_request: c,
            ..PolicyConfig::default()
        };
        let timeline = simulate(&trace, &mut Fixed(c), &policy).unwrap();
        let m = compute_metrics(timeline.entries()).unwrap();
        let n = trace.len() as f64;
        let slack: f64 = trace.usage().map(|u| c.saturating_sub(u) as f64).sum::<f64>() / n;
        let short: f64 = trace.usage().map(|u| u.saturating_sub(c) as f64).sum::<f64>() / n;
        assert_eq!(m.avg_slack, slack);
        assert_eq!(m.avg_insufficient, short);
        assert_eq!(m.update_count, 0);
    }

    #[test]
    fn recommendation_applies_one_second_later() {
        let trace = Trace::from_usage("x", [100; 5]).unwrap();
        let policy = PolicyConfig::ungated();
        let timeline = simulate(&trace, &mut Fixed(300), &policy).unwrap();
        let requests: Vec<u64> = timeline.entries().iter().map(|e| e.request).collect();
        assert_eq!(requests, vec![500, 300, 300, 300, 300]);
        assert!(timeline.entries()[0].updated);
    }

    #[test]
    fn constant_usage_ema_slack_converges() {
        let c = 500;
        let trace = Trace::from_usage("flat", std::iter::repeat_n(c, 600)).unwrap();
        let report = run_scenario(
            &trace,
            &[RecommenderSetup::new(RecommenderKind::ema(5, 3))],
            &PolicyOverrides::default(),
        )
        .unwrap();
        let tail = &report.runs[0].timeline.entries()[300..];
        let m = compute_metrics(tail).unwrap();
        assert!((m.avg_slack - 0.2 * c as f64).abs() < 1e-9, "{m:?}");
        assert_eq!(m.avg_insufficient, 0.0);
    }

    #[test]
    fn reports_are_deterministic_and_consistent() {
        let (_, trace) = burst_trace(4);
        let setups: Vec<RecommenderSetup> = ["vpa", "hw", "sma5-3", "ema5-3"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let global = PolicyOverrides::default();
        let a = run_scenario(&trace, &setups, &global).unwrap();
        let b = run_scenario(&trace, &setups, &global).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        for run in &a.runs {
            assert_eq!(run.timeline.len(), trace.len());
            assert_eq!(run.timeline.entries()[0].request, run.policy.initial_request);
            assert_eq!(run.summary, compute_metrics(run.timeline.entries()).unwrap());
        }
    }

    #[test]
    fn cold_warm_split() {
        let (p, trace) = burst_trace(2);
        let setups = vec![RecommenderSetup::new(RecommenderKind::hw())];
        let global = PolicyOverrides::default();
        let report = run_cold_warm(&trace, &setups, &global, p.cold_segment_len()).unwrap();
        let hw = &report.runs[0];
        let cold = &hw.timeline.entries()[..p.cold_segment_len()];
        assert!(cold.iter().all(|e| (e.target, e.lower, e.upper) == (500, 500, 500)));
        assert!(hw.warm.is_some());

        let (p, single) = burst_trace(1);
        let report = run_cold_warm(&single, &setups, &global, p.cold_segment_len()).unwrap();
        assert!(report.runs[0].warm.is_none());
        assert!(run_cold_warm(&single, &setups, &global, 0).is_err());
        assert!(run_cold_warm(&single, &setups, &global, single.len() + 1).is_err());
    }

    #[test]
    fn tiny_beats_hw_on_cold_start() {
        let (p, trace) = burst_trace(2);
        let setups: Vec<RecommenderSetup> = ["hw", "ema5-3"].iter().map(|s| s.parse().unwrap()).collect();
        let report = run_cold_warm(&trace, &setups, &PolicyOverrides::default(), p.cold_segment_len()).unwrap();
        let hw = report.run("hw").unwrap().cold.unwrap();
        let ema = report.run("ema5-3").unwrap().cold.unwrap();
        assert!(ema.avg_insufficient < hw.avg_insufficient, "ema {ema:?} hw {hw:?}");
    }

    #[test]
    fn empty_setup_list_is_rejected() {
        let (_, trace) = burst_trace(1);
        assert!(run_scenario(&trace, &[], &PolicyOverrides::default()).is_err());
    }
}
