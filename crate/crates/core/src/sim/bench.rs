//! Measures the CPU overhead of running many tiny recommenders side by side.
//!
//! CPU time is the whole process's, so measurements are only meaningful when
//! nothing else runs in the process at the same time.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CpuSample, Recommender};
use crate::recommender::{TinyConfig, TinyRecommender, TrackerKind};

const STREAM_LEN: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchPoint {
    pub instances: usize,
    /// Simulated seconds each instance was driven for.
    pub duration: u64,
    pub calls: u64,
    pub cpu_seconds: f64,
    /// CPU seconds per simulated second, i.e. the fraction of one core the
    /// instances would use when fed at 1 Hz.
    pub utilization: f64,
    pub ns_per_call: f64,
}

/// Process CPU time in seconds.
pub fn process_cpu_seconds() -> f64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    assert_eq!(rc, 0, "clock_gettime(CLOCK_PROCESS_CPUTIME_ID) failed");
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

fn usage_stream(seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level: f64 = 300.0;
    (0..STREAM_LEN)
        .map(|_| {
            level = (level + rng.random_range(-60.0..60.0)).clamp(0.0, 2_000.0);
            level as u64
        })
        .collect()
}

fn measure_once(instances: usize, duration: u64, stream: &[u64]) -> Result<f64> {
    let config = TinyConfig::new(TrackerKind::Ema, 5, 3);
    let mut fleet = (0..instances)
        .map(|_| TinyRecommender::new(config))
        .collect::<Result<Vec<_>>>()?;
    let start = process_cpu_seconds();
    let mut sink = 0u64;
    for t in 0..duration {
        for (i, r) in fleet.iter_mut().enumerate() {
            let usage = stream[(t as usize + i * 31) % stream.len()];
            let rec = r.observe(CpuSample::from_millicores(t, usage))?;
            sink = sink.wrapping_add(rec.target());
        }
    }
    std::hint::black_box(sink);
    Ok(process_cpu_seconds() - start)
}

/// Drives `n` independent EMA5-3 recommenders for `duration` simulated
/// seconds, for each `n` in `counts`. Each point keeps the median CPU time
/// over `repeats` runs.
pub fn bench_overhead(counts: &[usize], duration: u64, repeats: usize) -> Result<Vec<BenchPoint>> {
    if repeats == 0 {
        return Err(Error::config("bench repeats must be positive"));
    }
    if duration == 0 {
        return Err(Error::config("bench duration must be positive"));
    }
    let stream = usage_stream(0x5eed);
    counts
        .iter()
        .map(|&instances| {
            let mut samples = (0..repeats)
                .map(|_| measure_once(instances, duration, &stream))
                .collect::<Result<Vec<_>>>()?;
            samples.sort_by(f64::total_cmp);
            let cpu_seconds = if instances == 0 { 0.0 } else { samples[repeats / 2] };
            let calls = instances as u64 * duration;
            Ok(BenchPoint {
                instances,
                duration,
                calls,
                cpu_seconds,
                utilization: cpu_seconds / duration as f64,
                ns_per_call: if calls == 0 { 0.0 } else { cpu_seconds * 1e9 / calls as f64 },
            })
        })
        .collect()
}

/// Least-squares polynomial in the instance count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyFit {
    /// Lowest degree first.
    pub coefficients: Vec<f64>,
}

impl PolyFit {
    pub fn fit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::domain("fit inputs differ in length"));
        }
        let mut distinct = xs.to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() <= degree {
            return Err(Error::config(format!(
                "a degree-{degree} fit needs at least {} distinct counts",
                degree + 1
            )));
        }
        let design = DMatrix::from_fn(xs.len(), degree + 1, |r, c| xs[r].powi(c as i32));
        let rhs = DVector::from_column_slice(ys);
        let solution = design
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::domain(format!("least-squares fit failed: {e}")))?;
        Ok(PolyFit {
            coefficients: solution.iter().copied().collect(),
        })
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FittedPoint {
    pub instances: usize,
    pub utilization: f64,
    /// Not a measured count: the value comes from the fit alone.
    pub extrapolated: bool,
}

/// Fits utilization against instance count and evaluates the fit at every
/// measured count plus each of `extra`.
pub fn fit_overhead(points: &[BenchPoint], degree: usize, extra: &[usize]) -> Result<(PolyFit, Vec<FittedPoint>)> {
    let xs: Vec<f64> = points.iter().map(|p| p.instances as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.utilization).collect();
    let fit = PolyFit::fit(&xs, &ys, degree)?;
    let mut counts: Vec<usize> = points.iter().map(|p| p.instances).chain(extra.iter().copied()).collect();
    counts.sort_unstable();
    counts.dedup();
    let fitted = counts
        .into_iter()
        .map(|n| FittedPoint {
            instances: n,
            utilization: fit.eval(n as f64),
            extrapolated: !points.iter().any(|p| p.instances == n),
        })
        .collect();
    Ok((fit, fitted))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_instances_cost_nothing() {
        let points = bench_overhead(&[0], 100, 1).unwrap();
        assert_eq!(points[0].calls, 0);
        assert_eq!(points[0].cpu_seconds, 0.0);
        assert_eq!(points[0].ns_per_call, 0.0);
    }

    #[test]
    fn call_count_scales_with_instances() {
        let points = bench_overhead(&[5, 10], 50, 1).unwrap();
        assert_eq!(points[1].calls, 2 * points[0].calls);
    }

    #[test]
    fn fit_recovers_polynomials() {
        let xs = [10.0, 50.0, 100.0, 200.0];
        let line: Vec<f64> = xs.iter().map(|x| 0.5 + 0.002 * x).collect();
        let fit = PolyFit::fit(&xs, &line, 1).unwrap();
        assert!((fit.coefficients[0] - 0.5).abs() < 1e-9);
        assert!((fit.coefficients[1] - 0.002).abs() < 1e-12);
        assert!((fit.eval(2000.0) - 4.5).abs() < 1e-9);

        let quad: Vec<f64> = xs.iter().map(|x| 1.0 - x + 0.01 * x * x).collect();
        let fit = PolyFit::fit(&xs, &quad, 2).unwrap();
        assert_eq!(fit.degree(), 2);
        assert!((fit.eval(300.0) - (1.0 - 300.0 + 900.0)).abs() < 1e-6);
    }

    #[test]
    fn fit_needs_enough_points() {
        assert!(PolyFit::fit(&[10.0, 10.0], &[1.0, 2.0], 1).is_err());
        assert!(PolyFit::fit(&[10.0], &[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn extrapolated_points_are_flagged() {
        let points = bench_overhead(&[10, 50, 100], 200, 1).unwrap();
        let (fit, fitted) = fit_overhead(&points, 1, &[2000]).unwrap();
        assert_eq!(fit.coefficients.len(), 2);
        assert_eq!(fitted.len(), 4);
        assert!(fitted.iter().filter(|p| p.extrapolated).all(|p| p.instances == 2000));
        assert_eq!(fitted.iter().filter(|p| p.extrapolated).count(), 1);
    }
}
