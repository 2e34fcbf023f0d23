//! Monte Carlo estimation of error probabilities and stopping times,
//! exponent sweeps over the threshold scale n, and statistical property
//! checks on unstopped trajectories.
//!
//! Every batch of trials is split into per-trial random streams and
//! aggregated in trial order, so results do not depend on the worker count.

mod estimates;
mod properties;
mod sweep;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use estimates::{
    estimate_alpha, estimate_alpha_is, estimate_beta_direct, estimate_beta_is, worst_case_beta,
    BetaMethod, ErrorEstimates, ProbeEstimate, RateEstimate,
};
pub use properties::{property_suite, CheckResult, PropertyOptions, PropertyReport};
pub use sweep::{exponent_sweep, ExponentReport, SweepRow, SweepSettings, CSV_HEADER};

use crate::error::{Error, Result};

/// Trial count, base seed and degree of parallelism for one batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McOptions {
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_workers() -> usize {
    1
}

impl McOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        McOptions { trials, seed, workers: 1 }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    /// Same trials and workers under a seed derived from this one and `tag`.
    pub fn derive(&self, tag: u64) -> Self {
        McOptions { seed: derive_seed(self.seed, tag), ..*self }
    }
}

pub(crate) fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag.wrapping_add(1) << 32);
    rng.next_u64()
}

/// A mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// Sample mean and standard error of the mean.
    pub fn of_mean(samples: impl IntoIterator<Item = f64>) -> Self {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for x in samples {
            n += 1;
            sum += x;
            sum_sq += x * x;
        }
        if n == 0 {
            return Estimate { value: f64::NAN, se: f64::NAN };
        }
        let mean = sum / n as f64;
        let var = if n > 1 { ((sum_sq - n as f64 * mean * mean) / (n - 1) as f64).max(0.0) } else { 0.0 };
        Estimate { value: mean, se: (var / n as f64).sqrt() }
    }

    /// Binomial proportion with SE = sqrt(p (1 - p) / N).
    pub fn proportion(hits: usize, trials: usize) -> Self {
        let p = hits as f64 / trials as f64;
        Estimate { value: p, se: (p * (1.0 - p) / trials as f64).sqrt() }
    }
}

/// Maps `f` over trial indices 0..count on `workers` threads, results in index order.
pub(crate) fn par_trials<T, F>(workers: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if workers <= 1 {
        return (0..count as u64).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..count as u64).into_par_iter().map(f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportion_standard_error() {
        let e = Estimate::proportion(25, 100);
        assert_eq!(e.value, 0.25);
        assert!((e.se - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert_eq!(Estimate::proportion(0, 10).se, 0.0);
    }

    #[test]
    fn mean_standard_error() {
        let e = Estimate::of_mean([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.value, 2.5);
        // sample variance 5/3
        assert!((e.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn parallel_map_keeps_order() {
        let one = par_trials(1, 100, |i| Ok(i * i)).unwrap();
        let four = par_trials(4, 100, |i| Ok(i * i)).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(1, 5), derive_seed(1, 5));
    }
}
