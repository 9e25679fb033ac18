//! Order statistics of the two geometric loading times `N_A`, `N_B`.
//!
//! `N_K` counts rounds up to and including the first successful load, so it
//! takes values in `{1, 2, …}` with mean `1/η_K`. Closed forms are paired with
//! [`mc_loading_oracle`], which samples the pair directly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{blocks, par_map, substream, Estimate, Moments, Rounds, Stream};

fn check_eta(name: &'static str, eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(name, eta, "loading probability must lie in (0, 1]"))
    }
}

fn check_pair(eta_a: f64, eta_b: f64) -> Result<()> {
    check_eta("eta_a", eta_a)?;
    check_eta("eta_b", eta_b)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain("delta", delta, "must be >= 0"))
    }
}

/// `η_A + η_B − η_Aη_B = 1 − (1−η_A)(1−η_B)`.
#[inline]
fn either(eta_a: f64, eta_b: f64) -> f64 {
    eta_a + eta_b - eta_a * eta_b
}

/// `P_0 = Pr{N_A = N_B}`.
pub fn p_equal(eta_a: f64, eta_b: f64) -> Result<f64> {
    check_pair(eta_a, eta_b)?;
    Ok(eta_a * eta_b / either(eta_a, eta_b))
}

/// `Pr{|N_A − N_B| = k}`.
pub fn loading_distribution(eta_a: f64, eta_b: f64, k: u64) -> Result<f64> {
    let p0 = p_equal(eta_a, eta_b)?;
    if k == 0 {
        return Ok(p0);
    }
    let k = k as i32;
    Ok(((1.0 - eta_a).powi(k) + (1.0 - eta_b).powi(k)) * p0)
}

/// `E{|N_A − N_B|}`.
pub fn expected_abs_diff(eta_a: f64, eta_b: f64) -> Result<f64> {
    check_pair(eta_a, eta_b)?;
    let d = either(eta_a, eta_b);
    Ok(eta_a * (1.0 - eta_b) / (eta_b * d) + eta_b * (1.0 - eta_a) / (eta_a * d))
}

/// `N_L = E{max(N_A, N_B)}`.
pub fn expected_max(eta_a: f64, eta_b: f64) -> Result<f64> {
    let diff = expected_abs_diff(eta_a, eta_b)?;
    Ok(0.5 * (diff + 1.0 / eta_a + 1.0 / eta_b))
}

/// `E{exp(−|N_A − N_B|·δ)}`.
pub fn decay_expectation(eta_a: f64, eta_b: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let p0 = p_equal(eta_a, eta_b)?;
    let damp = (-delta).exp();
    Ok(p0 * (1.0 / (1.0 - damp * (1.0 - eta_a)) + 1.0 / (1.0 - damp * (1.0 - eta_b)) - 1.0))
}

/// Mean hold time of the early memory, `E{|N_A − N_B|}·T`.
pub fn storage_time(eta_a: f64, eta_b: f64, period: f64) -> Result<f64> {
    if !(period >= 0.0) {
        return Err(Error::domain("period", period, "must be >= 0"));
    }
    Ok(expected_abs_diff(eta_a, eta_b)? * period)
}

/// `Pr{N_A ≥ N_B}` and `S_{A<B}(δ) = E{1[N_A<N_B]·exp(−(N_B−N_A)δ)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderOverlap {
    pub prob_a_ge_b: f64,
    pub s_a_lt_b: f64,
}

pub fn order_and_overlap(eta_a: f64, eta_b: f64, delta: f64) -> Result<OrderOverlap> {
    check_pair(eta_a, eta_b)?;
    check_delta(delta)?;
    let d = either(eta_a, eta_b);
    let damp = (-delta).exp();
    Ok(OrderOverlap {
        prob_a_ge_b: eta_b / d,
        s_a_lt_b: eta_a * eta_b * (1.0 - eta_b) * damp / ((1.0 - (1.0 - eta_b) * damp) * d),
    })
}

/// Closed-form loading statistics at one `(η_A, η_B, δ, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadingStats {
    pub p_equal: f64,
    pub expected_max: f64,
    pub expected_abs_diff: f64,
    pub storage_time: f64,
    pub prob_a_ge_b: f64,
    pub decay_expectation: f64,
    pub s_a_lt_b: f64,
}

impl LoadingStats {
    pub fn closed_form(eta_a: f64, eta_b: f64, delta: f64, period: f64) -> Result<Self> {
        let oo = order_and_overlap(eta_a, eta_b, delta)?;
        Ok(LoadingStats {
            p_equal: p_equal(eta_a, eta_b)?,
            expected_max: expected_max(eta_a, eta_b)?,
            expected_abs_diff: expected_abs_diff(eta_a, eta_b)?,
            storage_time: storage_time(eta_a, eta_b, period)?,
            prob_a_ge_b: oo.prob_a_ge_b,
            decay_expectation: decay_expectation(eta_a, eta_b, delta)?,
            s_a_lt_b: oo.s_a_lt_b,
        })
    }
}

/// Sampled counterpart of [`LoadingStats`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalLoadingStats {
    pub p_equal: Estimate,
    pub expected_max: Estimate,
    pub expected_abs_diff: Estimate,
    pub storage_time: Estimate,
    pub prob_a_ge_b: Estimate,
    pub decay_expectation: Estimate,
    pub s_a_lt_b: Estimate,
    pub trials: u64,
    pub seed: u64,
}

impl EmpiricalLoadingStats {
    /// `(field name, estimate, closed form)` for every statistic.
    pub fn compare(&self, closed: &LoadingStats) -> [(&'static str, Estimate, f64); 7] {
        [
            ("p_equal", self.p_equal, closed.p_equal),
            ("expected_max", self.expected_max, closed.expected_max),
            ("expected_abs_diff", self.expected_abs_diff, closed.expected_abs_diff),
            ("storage_time", self.storage_time, closed.storage_time),
            ("prob_a_ge_b", self.prob_a_ge_b, closed.prob_a_ge_b),
            ("decay_expectation", self.decay_expectation, closed.decay_expectation),
            ("s_a_lt_b", self.s_a_lt_b, closed.s_a_lt_b),
        ]
    }
}

#[derive(Default, Clone, Copy)]
struct LoadingAcc {
    equal: Moments,
    max: Moments,
    diff: Moments,
    a_ge_b: Moments,
    decay: Moments,
    overlap: Moments,
}

impl LoadingAcc {
    fn merge(&mut self, o: &LoadingAcc) {
        self.equal.merge(&o.equal);
        self.max.merge(&o.max);
        self.diff.merge(&o.diff);
        self.a_ge_b.merge(&o.a_ge_b);
        self.decay.merge(&o.decay);
        self.overlap.merge(&o.overlap);
    }
}

/// Samples `trials` independent `(N_A, N_B)` pairs and estimates every
/// [`LoadingStats`] field. Deterministic in `seed`, independent of thread count.
pub fn mc_loading_oracle(
    eta_a: f64,
    eta_b: f64,
    delta: f64,
    period: f64,
    trials: u64,
    seed: u64,
) -> Result<EmpiricalLoadingStats> {
    check_pair(eta_a, eta_b)?;
    check_delta(delta)?;
    if trials == 0 {
        return Err(Error::domain("trials", 0.0, "must be >= 1"));
    }
    let ra = Rounds::new(eta_a)?;
    let rb = Rounds::new(eta_b)?;
    let parts: Vec<Result<LoadingAcc>> = par_map(&blocks(trials), |&(block, len)| {
            let mut rng_a = substream(seed, Stream::LoadingA, block);
            let mut rng_b = substream(seed, Stream::LoadingB, block);
            let mut acc = LoadingAcc::default();
            for _ in 0..len {
                let na = ra.sample(&mut rng_a)?;
                let nb = rb.sample(&mut rng_b)?;
                let diff = na.abs_diff(nb) as f64;
                acc.equal.push((na == nb) as u8 as f64);
                acc.max.push(na.max(nb) as f64);
                acc.diff.push(diff);
                acc.a_ge_b.push((na >= nb) as u8 as f64);
                let decay = (-diff * delta).exp();
                acc.decay.push(decay);
                acc.overlap.push(if na < nb { decay } else { 0.0 });
            }
            Ok(acc)
    });
    let mut total = LoadingAcc::default();
    for part in parts {
        total.merge(&part?);
    }
    let diff = total.diff.estimate();
    Ok(EmpiricalLoadingStats {
        p_equal: total.equal.estimate(),
        expected_max: total.max.estimate(),
        expected_abs_diff: diff,
        storage_time: Estimate {
            value: diff.value * period,
            std_error: diff.std_error * period,
        },
        prob_a_ge_b: total.a_ge_b.estimate(),
        decay_expectation: total.decay.estimate(),
        s_a_lt_b: total.overlap.estimate(),
        trials,
        seed,
    })
}
