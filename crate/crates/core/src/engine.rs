//! Memory-assisted MDI-QKD key rates.
//!
//! Each leg loads its memory independently; once both are loaded the stored
//! qubits are read out into the middle BSM. The single-pair yield is the
//! no-memory kernel evaluated with the two retrieval efficiencies in place of
//! the channel transmittances, divided by the mean number of rounds a full
//! cycle takes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::loading;
use crate::mdi::{mdi_kernel, side_coherent_single_gain, xor_probability};
use crate::misalignment::{
    background_flip_prob, misalignment_z_direct, pair_misalignment, side_dark_count,
    side_transmittances,
};
use crate::params::{channel_transmittance, entropy_unchecked, Heralding, Leg, SourceKind, SystemConfig};
use crate::rates::{MemoryTerms, Protocol, RateBreakdown};

/// Relative slack when rounding `(τ_r + τ_w)/T` to an integer.
const ROUNDS_SNAP: f64 = 1e-9;

fn require_memories(config: &SystemConfig) -> Result<Protocol> {
    match config.heralding {
        Heralding::Direct => Ok(Protocol::MaMdiDirect),
        Heralding::Indirect => Ok(Protocol::MaMdiIndirect),
        Heralding::None => Err(Error::config(
            "protocol.heralding",
            "memory-assisted rates need direct or indirect heralding",
            "none",
        )),
    }
}

fn check_intensity(m: f64) -> Result<()> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("intensity", m, "mean photon number must be > 0"))
    }
}

/// Per-round loading probability of a directly heralded memory, for a single
/// photon (`intensity = None`) or a coherent pulse of the given mean photon number.
pub fn loading_prob_direct(config: &SystemConfig, leg: Leg, intensity: Option<f64>) -> Result<f64> {
    let eta_w = config.memory.writing_efficiency.get();
    let eta_ch = channel_transmittance(config.leg_distance(leg), &config.channel)?;
    let bg = eta_w * config.per_pulse().p_bg;
    match intensity {
        None => Ok(-(-bg).exp_m1() + eta_w * eta_ch * (-bg).exp()),
        Some(m) => {
            check_intensity(m)?;
            Ok(-(-eta_ch * eta_w * m - bg).exp_m1())
        }
    }
}

/// Per-round loading probability of an indirectly heralded memory with a
/// single-photon source: the side-BSM single-pair yield.
pub fn loading_prob_indirect(config: &SystemConfig, leg: Leg) -> Result<f64> {
    let (eta_leg, eta_ent) = side_transmittances(config, leg)?;
    Ok(mdi_kernel(eta_leg, eta_ent, side_dark_count(config), 0.0)?.y11)
}

/// Single-photon loading probability under the configured heralding.
pub fn loading_prob(config: &SystemConfig, leg: Leg) -> Result<f64> {
    match require_memories(config)? {
        Protocol::MaMdiDirect => loading_prob_direct(config, leg, None),
        _ => loading_prob_indirect(config, leg),
    }
}

/// `N_r = ⌈(τ_r + τ_w)/T⌉ − 1`.
pub fn holding_rounds(config: &SystemConfig) -> Result<u64> {
    let m = &config.memory;
    let period = config.source.repetition_period;
    if m.writing_time > period {
        return Err(Error::config(
            "memory.writing_time",
            format!("must be <= repetition_period ({period})"),
            m.writing_time,
        ));
    }
    let ratio = (m.reading_time + m.writing_time) / period;
    let nearest = ratio.round();
    let ceil = if (ratio - nearest).abs() <= ROUNDS_SNAP * nearest.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    };
    Ok((ceil - 1.0).max(0.0) as u64)
}

/// Measurement efficiencies of the late (`eta_m`) and early (`eta_m_prime`) memory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementEfficiencies {
    pub eta_m: f64,
    pub eta_m_prime: f64,
}

pub fn effective_measurement_efficiencies(
    config: &SystemConfig,
    eta_a: f64,
    eta_b: f64,
) -> Result<MeasurementEfficiencies> {
    let eta_m = config.memory.reading_efficiency_0.get() * config.detector.efficiency.get();
    let delta = config
        .memory
        .amplitude_decay_time
        .rate_ratio(config.source.repetition_period);
    let decay = if delta == 0.0 {
        // validates the loading probabilities
        loading::p_equal(eta_a, eta_b).map(|_| 1.0)?
    } else {
        loading::decay_expectation(eta_a, eta_b, delta)?
    };
    Ok(MeasurementEfficiencies {
        eta_m,
        eta_m_prime: eta_m * decay,
    })
}

/// Yield per round and the memory terms at loading probabilities `(η_A, η_B)`.
fn cycle(config: &SystemConfig, eta_a: f64, eta_b: f64) -> Result<(f64, MeasurementEfficiencies, MemoryTerms)> {
    let eff = effective_measurement_efficiencies(config, eta_a, eta_b)?;
    let n_load = loading::expected_max(eta_a, eta_b)?;
    let n_read = holding_rounds(config)?;
    let k = mdi_kernel(eff.eta_m, eff.eta_m_prime, config.per_pulse().p_dc, 0.0)?;
    let terms = MemoryTerms {
        n_load,
        n_read,
        eta_m: eff.eta_m,
        eta_m_prime: eff.eta_m_prime,
        eta_load_a: eta_a,
        eta_load_b: eta_b,
        storage_time: loading::storage_time(eta_a, eta_b, config.source.repetition_period)?,
    };
    Ok((k.y11 / (n_load + n_read as f64), eff, terms))
}

/// `e_11;X^QM` at single-photon loading probabilities.
fn phase_error(config: &SystemConfig, eta_a: f64, eta_b: f64) -> Result<f64> {
    let eff = effective_measurement_efficiencies(config, eta_a, eta_b)?;
    let mis = pair_misalignment(config, eta_a, eta_b)?;
    Ok(mdi_kernel(eff.eta_m, eff.eta_m_prime, config.per_pulse().p_dc, mis.mean_e_dx_pair)?.e11x)
}

pub fn rate_single_photon(config: &SystemConfig) -> Result<RateBreakdown> {
    let protocol = require_memories(config)?;
    let eta_a = loading_prob(config, Leg::A)?;
    let eta_b = loading_prob(config, Leg::B)?;
    let (y11, eff, terms) = cycle(config, eta_a, eta_b)?;
    let mis = pair_misalignment(config, eta_a, eta_b)?;
    let p_dc = config.per_pulse().p_dc;
    let e11z = mdi_kernel(eff.eta_m, eff.eta_m_prime, p_dc, mis.e_dz_pair)?.e11z;
    let e11x = mdi_kernel(eff.eta_m, eff.eta_m_prime, p_dc, mis.mean_e_dx_pair)?.e11x;
    let f = config.error_correction_inefficiency;
    let rate_per_pulse = y11 * (1.0 - entropy_unchecked(e11x) - f * entropy_unchecked(e11z));
    Ok(RateBreakdown {
        protocol,
        source: SourceKind::SinglePhoton,
        rate_per_pulse,
        rate_per_second: rate_per_pulse / config.source.repetition_period,
        single_pair: y11,
        gain_z: None,
        e11x,
        e11z,
        memory: Some(terms),
        extension: false,
    })
}

/// Loading probability and Z-basis memory flip probability of `leg` with a
/// coherent source of mean photon number `m`.
fn coherent_leg(config: &SystemConfig, leg: Leg, m: f64, protocol: Protocol) -> Result<(f64, f64)> {
    match protocol {
        Protocol::MaMdiDirect => {
            let eta = loading_prob_direct(config, leg, Some(m))?;
            let e_bg = background_flip_prob(
                eta,
                config.memory.writing_efficiency.get(),
                config.per_pulse().p_bg,
            )?;
            Ok((eta, misalignment_z_direct(config.leg_misalignment(leg), e_bg)))
        }
        _ => {
            check_intensity(m)?;
            let (eta_leg, eta_ent) = side_transmittances(config, leg)?;
            let side = side_coherent_single_gain(
                m,
                eta_leg,
                eta_ent,
                side_dark_count(config),
                config.leg_misalignment(leg),
            )?;
            Ok((side.gain, side.qber))
        }
    }
}

pub fn rate_decoy(config: &SystemConfig) -> Result<RateBreakdown> {
    let protocol = require_memories(config)?;
    let (mu, nu) = (config.source.mu, config.source.nu);
    let (eta_mu, e_dz_a) = coherent_leg(config, Leg::A, mu, protocol)?;
    let (eta_nu, e_dz_b) = coherent_leg(config, Leg::B, nu, protocol)?;
    if eta_mu <= 0.0 || eta_nu <= 0.0 {
        return Err(Error::domain(
            "loading probability",
            eta_mu.min(eta_nu),
            "coherent loading probability must be > 0",
        ));
    }
    let (gain_z, eff, terms) = cycle(config, eta_mu, eta_nu)?;
    let p_dc = config.per_pulse().p_dc;
    let qber_z = mdi_kernel(eff.eta_m, eff.eta_m_prime, p_dc, xor_probability(e_dz_a, e_dz_b))?.e11z;

    let eta_1a = loading_prob(config, Leg::A)?;
    let eta_1b = loading_prob(config, Leg::B)?;
    let q11 = gain_z * (eta_1a * eta_1b) / (eta_mu * eta_nu) * mu * nu * (-mu - nu).exp();
    let e11x = phase_error(config, eta_1a, eta_1b)?;

    let f = config.error_correction_inefficiency;
    let rate_per_pulse =
        q11 * (1.0 - entropy_unchecked(e11x)) - f * gain_z * entropy_unchecked(qber_z);
    Ok(RateBreakdown {
        protocol,
        source: SourceKind::Decoy,
        rate_per_pulse,
        rate_per_second: rate_per_pulse / config.source.repetition_period,
        single_pair: q11,
        gain_z: Some(gain_z),
        e11x,
        e11z: qber_z,
        memory: Some(terms),
        extension: protocol == Protocol::MaMdiIndirect,
    })
}

/// Loading statistics of a symmetric link in the ideal-loading approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetricSummary {
    /// Per-leg loading probability `η_QM·exp(−(L/2)/L_att)`.
    pub eta: f64,
    pub n_load: f64,
    /// Seconds.
    pub storage_time: f64,
}

pub fn symmetric_summary(config: &SystemConfig) -> Result<SymmetricSummary> {
    let g = &config.geometry;
    if (g.distance_a - g.distance_b).abs() > 1e-12 * g.distance_a.max(g.distance_b) {
        return Err(Error::domain(
            "distance_b_km",
            g.distance_b,
            "symmetric analysis needs distance_a_km == distance_b_km",
        ));
    }
    let m = &config.memory;
    let eta_qm = match require_memories(config)? {
        Protocol::MaMdiDirect => m.writing_efficiency.get(),
        _ => m.entangling_efficiency.get() * config.detector.efficiency.get().powi(2),
    };
    let eta = eta_qm * channel_transmittance(g.total() / 2.0, &config.channel)?;
    if eta <= 0.0 {
        return Err(Error::domain("eta", eta, "loading probability must be > 0"));
    }
    let t = config.source.repetition_period;
    Ok(SymmetricSummary {
        eta,
        n_load: (3.0 - 2.0 * eta) / (eta * (2.0 - eta)),
        storage_time: 2.0 * (1.0 - eta) * t / (eta * (2.0 - eta)),
    })
}
