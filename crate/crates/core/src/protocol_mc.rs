//! Event-level Monte Carlo of the directly heralded protocol.
//!
//! Each trial runs one full cycle: both memories are loaded after geometric
//! numbers of rounds, the stored qubits pick up background, misalignment and
//! dephasing flips, the early memory's retrieval efficiency decays over its
//! hold time, and the two retrieved photons go through the four-detector BSM.
//! Nothing here reuses the closed-form yield or QBER expressions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bsm::{classify, sample_clicks, Basis};
use crate::engine::{holding_rounds, loading_prob_direct};
use crate::error::{Error, Result};
use crate::loading::{self, LoadingStats};
use crate::misalignment::{background_flip_prob, misalignment_z_indirect};
use crate::params::{Heralding, Leg, SystemConfig};
use crate::rates::RateBreakdown;
use crate::stats::{blocks, par_map, substream, Estimate, Moments, RatioMoments, Rounds, Stream};

/// Result of the middle BSM for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BsmOutcome {
    SuccessCorrect,
    SuccessError,
    Failure,
}

/// Everything sampled in one loading-and-measurement cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub rounds_a: u64,
    pub rounds_b: u64,
    pub background_loaded_a: bool,
    pub background_loaded_b: bool,
    pub flipped_a: bool,
    pub flipped_b: bool,
    pub retrieved_a: bool,
    pub retrieved_b: bool,
    pub basis: Basis,
    pub bsm_outcome: BsmOutcome,
}

/// How a loaded memory's stored qubit can flip before readout.
#[derive(Debug, Clone, Copy)]
struct FlipModel {
    /// Probability the memory holds an unpolarized background excitation.
    background: f64,
    /// Flip probability of a legitimately loaded memory.
    setup: f64,
}

impl FlipModel {
    /// Samples whether the stored bit is flipped; `dephase` is the flip
    /// probability from dephasing, applied only to X-basis states.
    fn sample(&self, rng: &mut ChaCha8Rng, basis: Basis, dephase: f64) -> (bool, bool) {
        let background = self.background > 0.0 && rng.random::<f64>() < self.background;
        if background {
            // a maximally mixed qubit reads out as a fair coin in either basis
            return (true, rng.random::<bool>());
        }
        let mut flip = self.setup > 0.0 && rng.random::<f64>() < self.setup;
        if basis == Basis::X && dephase > 0.0 && rng.random::<f64>() < dephase {
            flip = !flip;
        }
        (false, flip)
    }
}

/// Fixed per-configuration quantities shared by every trial.
struct Setup {
    rounds: [Rounds; 2],
    flips: [FlipModel; 2],
    eta_m: f64,
    period: f64,
    t1: crate::params::DecayTime,
    t2: crate::params::DecayTime,
    p_dc: f64,
    n_read: u64,
}

impl Setup {
    fn direct(config: &SystemConfig) -> Result<Self> {
        config.validate()?;
        if config.heralding != Heralding::Direct {
            return Err(Error::config(
                "protocol.heralding",
                "the event-level simulation covers direct heralding",
                format!("{:?}", config.heralding).to_lowercase(),
            ));
        }
        let eta_w = config.memory.writing_efficiency.get();
        let p_bg = config.per_pulse().p_bg;
        let leg = |leg: Leg| -> Result<(Rounds, FlipModel)> {
            let eta = loading_prob_direct(config, leg, None)?;
            let flips = FlipModel {
                background: background_flip_prob(eta, eta_w, p_bg)?,
                setup: config.leg_misalignment(leg),
            };
            Ok((Rounds::new(eta)?, flips))
        };
        let (ra, fa) = leg(Leg::A)?;
        let (rb, fb) = leg(Leg::B)?;
        Ok(Setup {
            rounds: [ra, rb],
            flips: [fa, fb],
            eta_m: config.memory.reading_efficiency_0.get() * config.detector.efficiency.get(),
            period: config.source.repetition_period,
            t1: config.memory.amplitude_decay_time,
            t2: config.memory.coherence_time,
            p_dc: config.per_pulse().p_dc,
            n_read: holding_rounds(config)?,
        })
    }
}

struct Rngs {
    load_a: ChaCha8Rng,
    load_b: ChaCha8Rng,
    flips: ChaCha8Rng,
    detectors: ChaCha8Rng,
    source: ChaCha8Rng,
}

impl Rngs {
    fn new(seed: u64, block: u64) -> Self {
        Rngs {
            load_a: substream(seed, Stream::LoadingA, block),
            load_b: substream(seed, Stream::LoadingB, block),
            flips: substream(seed, Stream::Flips, block),
            detectors: substream(seed, Stream::Detectors, block),
            source: substream(seed, Stream::Source, block),
        }
    }
}

fn run_trial(s: &Setup, r: &mut Rngs) -> Result<TrialRecord> {
    let na = s.rounds[0].sample(&mut r.load_a)?;
    let nb = s.rounds[1].sample(&mut r.load_b)?;
    let hold = na.abs_diff(nb) as f64 * s.period;
    let basis = if r.source.random::<bool>() { Basis::X } else { Basis::Z };
    let bit_a = r.source.random::<bool>();
    let bit_b = r.source.random::<bool>();

    let dephase = 0.5 * (1.0 - s.t2.survival(hold));
    let (early_a, early_b) = (na < nb, nb < na);
    let (bg_a, flip_a) = s.flips[0].sample(&mut r.flips, basis, if early_a { dephase } else { 0.0 });
    let (bg_b, flip_b) = s.flips[1].sample(&mut r.flips, basis, if early_b { dephase } else { 0.0 });

    let survive = |early: bool| if early { s.eta_m * s.t1.survival(hold) } else { s.eta_m };
    let retrieved_a = r.detectors.random::<f64>() < survive(early_a);
    let retrieved_b = r.detectors.random::<f64>() < survive(early_b);
    let photon_a = retrieved_a.then(|| basis.state(bit_a ^ flip_a));
    let photon_b = retrieved_b.then(|| basis.state(bit_b ^ flip_b));
    let mask = sample_clicks(&mut r.detectors, photon_a, photon_b, s.p_dc);
    let bsm_outcome = match classify(mask) {
        None => BsmOutcome::Failure,
        Some(o) if o.bits_equal(basis) == (bit_a == bit_b) => BsmOutcome::SuccessCorrect,
        Some(_) => BsmOutcome::SuccessError,
    };
    Ok(TrialRecord {
        rounds_a: na,
        rounds_b: nb,
        background_loaded_a: bg_a,
        background_loaded_b: bg_b,
        flipped_a: flip_a,
        flipped_b: flip_b,
        retrieved_a,
        retrieved_b,
        basis,
        bsm_outcome,
    })
}

/// Samples `trials` cycles starting from block 0 of `seed` and returns every record.
pub fn sample_trials(config: &SystemConfig, trials: u64, seed: u64) -> Result<Vec<TrialRecord>> {
    let s = Setup::direct(config)?;
    let mut out = Vec::with_capacity(trials as usize);
    for (block, len) in blocks(trials) {
        let mut r = Rngs::new(seed, block);
        for _ in 0..len {
            out.push(run_trial(&s, &mut r)?);
        }
    }
    Ok(out)
}

/// Sampled counterparts of the closed-form yield, QBERs and loading statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalEstimates {
    pub y11_qm_hat: Estimate,
    pub e11x_hat: Estimate,
    pub e11z_hat: Estimate,
    pub n_load_hat: Estimate,
    pub storage_time_hat: Estimate,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Default, Clone, Copy)]
struct Acc {
    yield_: RatioMoments,
    x: RatioMoments,
    z: RatioMoments,
    max: Moments,
    hold: Moments,
}

impl Acc {
    fn push(&mut self, t: &TrialRecord, n_read: u64, period: f64) {
        let success = t.bsm_outcome != BsmOutcome::Failure;
        let error = t.bsm_outcome == BsmOutcome::SuccessError;
        let max = t.rounds_a.max(t.rounds_b);
        self.yield_.push(success as u8 as f64, (max + n_read) as f64);
        let qber = match t.basis {
            Basis::X => &mut self.x,
            Basis::Z => &mut self.z,
        };
        qber.push(error as u8 as f64, success as u8 as f64);
        self.max.push(max as f64);
        self.hold.push(t.rounds_a.abs_diff(t.rounds_b) as f64 * period);
    }

    fn merge(&mut self, o: &Acc) {
        self.yield_.merge(&o.yield_);
        self.x.merge(&o.x);
        self.z.merge(&o.z);
        self.max.merge(&o.max);
        self.hold.merge(&o.hold);
    }
}

/// Runs the event-level simulation. Output depends only on `(config, trials, seed)`.
pub fn simulate_direct(config: &SystemConfig, trials: u64, seed: u64) -> Result<EmpiricalEstimates> {
    if trials == 0 {
        return Err(Error::domain("trials", 0.0, "must be >= 1"));
    }
    let s = Setup::direct(config)?;
    let parts: Vec<Result<Acc>> = par_map(&blocks(trials), |&(block, len)| {
            let mut r = Rngs::new(seed, block);
            let mut acc = Acc::default();
            for _ in 0..len {
                acc.push(&run_trial(&s, &mut r)?, s.n_read, s.period);
            }
            Ok(acc)
    });
    let mut total = Acc::default();
    for p in parts {
        total.merge(&p?);
    }
    Ok(EmpiricalEstimates {
        y11_qm_hat: total.yield_.estimate(),
        e11x_hat: total.x.estimate(),
        e11z_hat: total.z.estimate(),
        n_load_hat: total.max.estimate(),
        storage_time_hat: total.hold.estimate(),
        trials,
        seed,
    })
}

/// Sampled bit-flip statistics of the two memories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalMisalignment {
    pub e_dz_a: Estimate,
    pub e_dz_b: Estimate,
    pub mean_e_dx_a: Estimate,
    pub mean_e_dx_b: Estimate,
    pub mean_e_dx_product: Estimate,
    pub e_dz_pair: Estimate,
    pub mean_e_dx_pair: Estimate,
}

/// Samples loading times and explicit flip events at loading probabilities
/// `(η_A, η_B)`, for either heralding variant. Each trial draws the Z- and
/// X-basis flips of both memories from independent streams.
pub fn mc_pair_misalignment(
    config: &SystemConfig,
    eta_a: f64,
    eta_b: f64,
    trials: u64,
    seed: u64,
) -> Result<EmpiricalMisalignment> {
    if trials == 0 {
        return Err(Error::domain("trials", 0.0, "must be >= 1"));
    }
    let flips = match config.heralding {
        Heralding::Direct => {
            let eta_w = config.memory.writing_efficiency.get();
            let p_bg = config.per_pulse().p_bg;
            [(Leg::A, eta_a), (Leg::B, eta_b)].map(|(leg, eta)| {
                background_flip_prob(eta, eta_w, p_bg).map(|background| FlipModel {
                    background,
                    setup: config.leg_misalignment(leg),
                })
            })
        }
        Heralding::Indirect => [Leg::A, Leg::B].map(|leg| {
            misalignment_z_indirect(config, leg).map(|setup| FlipModel {
                background: 0.0,
                setup,
            })
        }),
        Heralding::None => {
            return Err(Error::config(
                "protocol.heralding",
                "memory misalignment needs direct or indirect heralding",
                "none",
            ))
        }
    };
    let [fa, fb] = flips;
    let flips = [fa?, fb?];
    let rounds = [Rounds::new(eta_a)?, Rounds::new(eta_b)?];
    let period = config.source.repetition_period;
    let t2 = config.memory.coherence_time;

    #[derive(Default, Clone, Copy)]
    struct Counts([Moments; 7]);
    let parts: Vec<Result<Counts>> = par_map(&blocks(trials), |&(block, len)| {
            let mut la = substream(seed, Stream::LoadingA, block);
            let mut lb = substream(seed, Stream::LoadingB, block);
            let mut fz = substream(seed, Stream::Flips, block);
            let mut fx = substream(seed, Stream::Photons, block);
            let mut c = Counts::default();
            for _ in 0..len {
                let na = rounds[0].sample(&mut la)?;
                let nb = rounds[1].sample(&mut lb)?;
                let dephase = 0.5 * (1.0 - t2.survival(na.abs_diff(nb) as f64 * period));
                let za = flips[0].sample(&mut fz, Basis::Z, 0.0).1;
                let zb = flips[1].sample(&mut fz, Basis::Z, 0.0).1;
                let xa = flips[0].sample(&mut fx, Basis::X, if na < nb { dephase } else { 0.0 }).1;
                let xb = flips[1].sample(&mut fx, Basis::X, if nb < na { dephase } else { 0.0 }).1;
                for (m, v) in c.0.iter_mut().zip([za, zb, xa, xb, xa && xb, za ^ zb, xa ^ xb]) {
                    m.push(v as u8 as f64);
                }
            }
            Ok(c)
    });
    let mut total = Counts::default();
    for p in parts {
        let p = p?;
        for (t, m) in total.0.iter_mut().zip(p.0.iter()) {
            t.merge(m);
        }
    }
    let e = total.0.map(|m| m.estimate());
    Ok(EmpiricalMisalignment {
        e_dz_a: e[0],
        e_dz_b: e[1],
        mean_e_dx_a: e[2],
        mean_e_dx_b: e[3],
        mean_e_dx_product: e[4],
        e_dz_pair: e[5],
        mean_e_dx_pair: e[6],
    })
}

/// One closed-form value set against its sampled estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub closed_form: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, closed_form: f64, est: Estimate, k_sigma: f64) -> Self {
        Check {
            name: name.into(),
            closed_form,
            estimate: est.value,
            std_error: est.std_error,
            z_score: est.z_score(closed_form),
            pass: est.within(closed_form, k_sigma),
        }
    }
}

/// Closed forms against both Monte Carlo oracles at one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub k_sigma: f64,
    pub trials: u64,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

/// Compares [`simulate_direct`] with the engine's single-photon breakdown.
pub fn protocol_checks(closed: &RateBreakdown, mc: &EmpiricalEstimates, k_sigma: f64) -> Vec<Check> {
    let mut out = vec![
        Check::new("y11_qm", closed.single_pair, mc.y11_qm_hat, k_sigma),
        Check::new("e11x_qm", closed.e11x, mc.e11x_hat, k_sigma),
        Check::new("e11z_qm", closed.e11z, mc.e11z_hat, k_sigma),
    ];
    if let Some(m) = closed.memory {
        out.push(Check::new("n_load", m.n_load, mc.n_load_hat, k_sigma));
        out.push(Check::new("storage_time", m.storage_time, mc.storage_time_hat, k_sigma));
    }
    out
}

/// Runs both oracles for a directly heralded single-photon configuration.
pub fn validate(config: &SystemConfig, trials: u64, seed: u64) -> Result<ValidationReport> {
    const K_SIGMA: f64 = 3.0;
    let closed = crate::engine::rate_single_photon(config)?;
    let mc = simulate_direct(config, trials, seed)?;
    let mut checks = protocol_checks(&closed, &mc, K_SIGMA);
    let mem = closed.memory.expect("memory-assisted breakdown");
    let delta = config
        .memory
        .coherence_time
        .rate_ratio(config.source.repetition_period);
    let stats = LoadingStats::closed_form(mem.eta_load_a, mem.eta_load_b, delta, config.source.repetition_period)?;
    let lmc = loading::mc_loading_oracle(
        mem.eta_load_a,
        mem.eta_load_b,
        delta,
        config.source.repetition_period,
        trials,
        seed,
    )?;
    for (name, est, want) in lmc.compare(&stats) {
        checks.push(Check::new(format!("loading.{name}"), want, est, K_SIGMA));
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(ValidationReport {
        k_sigma: K_SIGMA,
        trials,
        seed,
        checks,
        all_pass,
    })
}
