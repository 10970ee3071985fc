//! Trace replay, synthetic workloads and the overhead bench.

pub mod bench;
pub mod burst;
pub mod scenario;
pub mod trace;

pub use bench::{bench_overhead, fit_overhead, BenchPoint, FittedPoint, PolyFit};
pub use burst::{default_profile, default_profiles, BurstProfile};
pub use scenario::{run_cold_warm, run_scenario, simulate, RecommenderRun, ScenarioReport};
pub use trace::Trace;
