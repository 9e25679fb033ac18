//! Point estimates, moment accumulators and seeded random substreams for the
//! Monte Carlo oracles.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::Serialize;

use crate::error::{Error, Result};

/// Trials per independently seeded block.
pub const BLOCK_SIZE: u64 = 1 << 16;

/// Largest number of rounds a sampled geometric variable may reach.
pub const GEOMETRIC_CAP: u64 = 1_000_000_000;

/// Named random substreams; each (label, block) pair owns its own stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    LoadingA = 1,
    LoadingB = 2,
    Flips = 3,
    Detectors = 4,
    Source = 5,
    Photons = 6,
}

pub fn substream(seed: u64, stream: Stream, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 40) | block);
    rng
}

/// Splits `trials` into `(block index, block length)` pairs.
pub fn blocks(trials: u64) -> Vec<(u64, u64)> {
    let n = trials.div_ceil(BLOCK_SIZE);
    (0..n)
        .map(|b| (b, BLOCK_SIZE.min(trials - b * BLOCK_SIZE)))
        .collect()
}

/// Maps `f` over `items` and keeps their order; runs on the rayon pool when
/// the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    F: Fn(&I) -> T,
{
    items.iter().map(f).collect()
}

/// Number of rounds up to and including the first success.
pub struct Rounds {
    dist: Geometric,
    eta: f64,
}

impl Rounds {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::domain("loading probability", eta, "must lie in (0, 1]"));
        }
        let dist = Geometric::new(eta).map_err(|_| Error::domain("loading probability", eta, "must lie in (0, 1]"))?;
        Ok(Rounds { dist, eta })
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        let failures = self.dist.sample(rng);
        if failures >= GEOMETRIC_CAP {
            return Err(Error::SamplingCap {
                cap: GEOMETRIC_CAP,
                eta: self.eta,
            });
        }
        Ok(failures + 1)
    }
}

/// Point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    /// `|value − expected| ≤ k·σ`, with a floor of `1e-12` for degenerate samples.
    pub fn within(&self, expected: f64, k_sigma: f64) -> bool {
        (self.value - expected).abs() <= k_sigma * self.std_error + 1e-12 * expected.abs().max(1.0)
    }

    /// Distance from `expected` in units of the standard error.
    pub fn z_score(&self, expected: f64) -> f64 {
        let d = self.value - expected;
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }
}

/// Running sums for a sample mean.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn estimate(&self) -> Estimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        Estimate {
            value: mean,
            std_error: (var / n).sqrt(),
        }
    }
}

/// Running sums for a ratio of means `Σx / Σy`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RatioMoments {
    pub n: u64,
    pub sx: f64,
    pub sy: f64,
    pub sxx: f64,
    pub syy: f64,
    pub sxy: f64,
}

impl RatioMoments {
    #[inline]
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.syy += y * y;
        self.sxy += x * y;
    }

    pub fn merge(&mut self, o: &RatioMoments) {
        self.n += o.n;
        self.sx += o.sx;
        self.sy += o.sy;
        self.sxx += o.sxx;
        self.syy += o.syy;
        self.sxy += o.sxy;
    }

    /// Delta-method standard error of `Σx/Σy`.
    pub fn estimate(&self) -> Estimate {
        let n = self.n as f64;
        if self.sy == 0.0 {
            return Estimate {
                value: f64::NAN,
                std_error: f64::INFINITY,
            };
        }
        let r = self.sx / self.sy;
        let ybar = self.sy / n;
        // Σ (x − r y)² / (n − 1)
        let resid = (self.sxx - 2.0 * r * self.sxy + r * r * self.syy).max(0.0);
        let var = resid / (n - 1.0).max(1.0);
        Estimate {
            value: r,
            std_error: (var / n).sqrt() / ybar,
        }
    }
}

/// Success fraction of Bernoulli events.
pub fn proportion(successes: u64, trials: u64) -> Estimate {
    if trials == 0 {
        return Estimate {
            value: f64::NAN,
            std_error: f64::INFINITY,
        };
    }
    let p = successes as f64 / trials as f64;
    Estimate {
        value: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
    }
}
