//! Reproducible Monte Carlo engine.
//!
//! Every trial draws from its own counter-based stream keyed by
//! `(seed, trial index)`, so no RNG state crosses trial boundaries and the
//! result cannot depend on how trials are scheduled across threads. Trials
//! are grouped into fixed-size batches; batch partials are merged in batch
//! order, which makes the reduction bit-identical for any worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Trials per reduction batch. Fixed so that the merge tree does not depend
/// on the worker count.
const BATCH: u64 = 4096;

/// Monte Carlo run configuration.
#[derive(Debug, Clone)]
pub struct McConfig {
    /// Number of trials.
    pub trials: u64,
    /// Base seed; combined with the trial index to key each stream.
    pub seed: u64,
    /// Two-sided confidence level for [`McEstimate::ci`], default 0.997 (≈3σ).
    pub ci_level: f64,
    /// Parallelism hint: 1 forces sequential execution, anything larger
    /// lets batches run on the global thread pool.
    pub workers: usize,
}

impl McConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        McConfig { trials, seed, ci_level: 0.997, workers: default_workers() }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }
}

/// Number of logical CPUs, used as the default worker hint.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Two-sided confidence interval at `level` (e.g. 0.997 for ≈3σ).
    pub fn ci(&self, level: f64) -> (f64, f64) {
        let z = z_for_level(level);
        (self.mean - z * self.std_error, self.mean + z * self.std_error)
    }

    /// True when `value` lies within `k_sigma` standard errors of the mean.
    pub fn covers(&self, value: f64, k_sigma: f64) -> bool {
        (value - self.mean).abs() <= k_sigma * self.std_error
    }
}

/// Normal quantile for a two-sided confidence level.
pub fn z_for_level(level: f64) -> f64 {
    let level = level.clamp(1e-9, 1.0 - 1e-12);
    Normal::standard().inverse_cdf(0.5 + level / 2.0)
}

/// The deterministic per-trial stream: ChaCha8 keyed by the run seed with
/// the trial index as the stream number.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

// ---------------------------------------------------------------------------
// Deterministic batched map-reduce
// ---------------------------------------------------------------------------

/// Runs `trials` indexed trials and reduces them deterministically.
///
/// `fold` absorbs one trial into a batch accumulator; `merge` combines two
/// batch accumulators. Batches are fixed-size and merged left-to-right in
/// index order, so the result is identical for any worker count. This is the
/// primitive under [`estimate`]; sweep code with richer accumulators (e.g.
/// per-grid-point sums) uses it directly.
pub fn map_reduce_trials<A, Fold, Merge>(
    trials: u64,
    workers: usize,
    init: impl Fn() -> A + Sync,
    fold: Fold,
    merge: Merge,
) -> A
where
    A: Send,
    Fold: Fn(A, u64) -> A + Sync,
    Merge: Fn(A, A) -> A,
{
    let n_batches = trials.div_ceil(BATCH).max(1);
    let run_batch = |b: u64| {
        let lo = b * BATCH;
        let hi = ((b + 1) * BATCH).min(trials);
        (lo..hi).fold(init(), &fold)
    };
    let partials: Vec<A> = if workers <= 1 {
        (0..n_batches).map(run_batch).collect()
    } else {
        (0..n_batches).into_par_iter().map(run_batch).collect()
    };
    partials
        .into_iter()
        .reduce(merge)
        .unwrap_or_else(init)
}

/// Welford moment accumulator with Chan's parallel merge; the merge order is
/// fixed by the batching, so results are exactly reproducible.
#[derive(Debug, Clone, Copy)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Moments { count: 0, mean: 0.0, m2: 0.0 }
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let n1 = self.count as f64;
        let n2 = other.count as f64;
        let n = n1 + n2;
        let delta = other.mean - self.mean;
        Moments {
            count: self.count + other.count,
            mean: self.mean + delta * n2 / n,
            m2: self.m2 + other.m2 + delta * delta * n1 * n2 / n,
        }
    }

    /// Sample variance (n−1 denominator); 0 for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl Default for Moments {
    fn default() -> Self {
        Self::new()
    }
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

/// Estimates the mean of `trial_fn` over `config.trials` trials.
///
/// `trial_fn` must be a pure function of its `(trial index, stream)`
/// arguments; under that contract the estimate is bit-reproducible for any
/// worker count.
pub fn estimate<F>(config: &McConfig, trial_fn: F) -> McEstimate
where
    F: Fn(u64, &mut ChaCha8Rng) -> f64 + Sync,
{
    let moments = map_reduce_trials(
        config.trials,
        config.workers,
        Moments::new,
        |mut acc, t| {
            let mut rng = trial_rng(config.seed, t);
            acc.push(trial_fn(t, &mut rng));
            acc
        },
        Moments::merge,
    );
    McEstimate {
        mean: moments.mean,
        std_error: moments.std_error(),
        trials: config.trials,
        seed: config.seed,
    }
}

/// Fallible variant of [`estimate`]: the first trial error aborts the run,
/// tagged with its trial index.
pub fn try_estimate<F>(config: &McConfig, trial_fn: F) -> Result<McEstimate>
where
    F: Fn(u64, &mut ChaCha8Rng) -> Result<f64> + Sync,
{
    type Acc = std::result::Result<Moments, (u64, Error)>;
    let acc: Acc = map_reduce_trials(
        config.trials,
        config.workers,
        || Ok(Moments::new()),
        |acc: Acc, t| {
            let mut m = acc?;
            let mut rng = trial_rng(config.seed, t);
            match trial_fn(t, &mut rng) {
                Ok(x) => {
                    m.push(x);
                    Ok(m)
                }
                Err(e) => Err((t, e)),
            }
        },
        |a, b| match (a, b) {
            (Ok(x), Ok(y)) => Ok(x.merge(y)),
            (Err(e), _) | (_, Err(e)) => Err(e),
        },
    );
    match acc {
        Ok(m) => Ok(McEstimate {
            mean: m.mean,
            std_error: m.std_error(),
            trials: config.trials,
            seed: config.seed,
        }),
        Err((index, e)) => Err(Error::Trial { index, source: Box::new(e) }),
    }
}

/// Estimates the mean of `a − b` with common random numbers: both trial
/// functions see identical per-trial streams, so shared randomness cancels
/// in the difference.
pub fn paired_estimate<Fa, Fb>(config: &McConfig, trial_a: Fa, trial_b: Fb) -> McEstimate
where
    Fa: Fn(u64, &mut ChaCha8Rng) -> f64 + Sync,
    Fb: Fn(u64, &mut ChaCha8Rng) -> f64 + Sync,
{
    estimate(config, |t, _| {
        let mut rng_a = trial_rng(config.seed, t);
        let mut rng_b = trial_rng(config.seed, t);
        trial_a(t, &mut rng_a) - trial_b(t, &mut rng_b)
    })
}
