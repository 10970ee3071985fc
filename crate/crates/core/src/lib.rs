//! CPU rightsizing for short-lived, bursty workloads.
//!
//! Four recommenders share one [`Recommender`] interface: a decaying-histogram
//! percentile recommender in the style of the Kubernetes VPA, two "tiny"
//! moving-average predictors (SMA and EMA) and additive Holt-Winters. A
//! [`PolicyState`] gates their output into an applied request, and the
//! [`sim`] module replays traces through the pair to measure slack and
//! insufficient CPU.

pub mod config;
pub mod error;
pub mod histogram;
pub mod model;
pub mod policy;
pub mod recommender;
pub mod report;
pub mod sim;

pub use error::{Error, Result};
pub use histogram::{DecayingHistogram, HistogramConfig};
pub use model::{
    compute_metrics, round_millicores, AllocationTimeline, CpuSample, MetricsSummary, Millicores,
    Recommendation, Recommender, TimelineEntry,
};
pub use policy::{GateDecision, PolicyConfig, PolicyOverrides, PolicyState};
pub use recommender::{RecommenderKind, RecommenderSetup};
