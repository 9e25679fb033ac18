//! Protocol selection and the common rate record shared by every protocol.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bb84::{bb84_decoy, bb84_single_photon, Bb84Breakdown};
use crate::engine;
use crate::error::{Error, Result};
use crate::mdi;
use crate::params::{Heralding, SourceKind, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Bb84,
    Mdi,
    MaMdiDirect,
    MaMdiIndirect,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [
        Protocol::Bb84,
        Protocol::Mdi,
        Protocol::MaMdiDirect,
        Protocol::MaMdiIndirect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Bb84 => "bb84",
            Protocol::Mdi => "mdi",
            Protocol::MaMdiDirect => "ma-mdi-direct",
            Protocol::MaMdiIndirect => "ma-mdi-indirect",
        }
    }

    pub fn heralding(self) -> Heralding {
        match self {
            Protocol::Bb84 | Protocol::Mdi => Heralding::None,
            Protocol::MaMdiDirect => Heralding::Direct,
            Protocol::MaMdiIndirect => Heralding::Indirect,
        }
    }

    pub fn uses_memories(self) -> bool {
        self.heralding() != Heralding::None
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "protocol",
                    "expected one of bb84, mdi, ma-mdi-direct, ma-mdi-indirect",
                    s,
                )
            })
    }
}

/// Memory-side quantities of a memory-assisted rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemoryTerms {
    /// `N_L`, expected rounds until both memories are loaded.
    pub n_load: f64,
    /// `N_r`, rounds lost to reading and rewriting.
    pub n_read: u64,
    /// `η_m = η_r0·η_d`, late memory.
    pub eta_m: f64,
    /// `η'_m`, early memory averaged over its hold time.
    pub eta_m_prime: f64,
    /// Per-round loading probability of memory A (`η_1A` or `η_μA`).
    pub eta_load_a: f64,
    /// Per-round loading probability of memory B (`η_1B` or `η_νB`).
    pub eta_load_b: f64,
    /// Mean storage time of the early memory, seconds.
    pub storage_time: f64,
}

/// A computed key rate with the intermediate terms it was assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateBreakdown {
    pub protocol: Protocol,
    pub source: SourceKind,
    /// Signed; a negative value means the privacy-amplification bracket is negative.
    pub rate_per_pulse: f64,
    pub rate_per_second: f64,
    /// Single-photon yield (`Y_1`, `Y_11`, `Y_11^QM`) or single-photon gain
    /// (`Q_1`, `Q_11`, `Q_11^QM`) for decoy sources.
    pub single_pair: f64,
    /// Signal gain in the key basis (`Q_μ`, `Q_μν;Z`, `Q_μν;Z^QM`); decoy only.
    pub gain_z: Option<f64>,
    /// Single-photon phase-error rate (X basis).
    pub e11x: f64,
    /// Key-basis QBER (`e_11;Z` or `E_μν;Z`).
    pub e11z: f64,
    pub memory: Option<MemoryTerms>,
    /// Set when the result comes from a composition that goes beyond the
    /// closed forms (indirect heralding with decoy sources).
    pub extension: bool,
}

impl RateBreakdown {
    pub fn clamped_rate_per_pulse(&self) -> f64 {
        self.rate_per_pulse.max(0.0)
    }

    pub fn clamped_rate_per_second(&self) -> f64 {
        self.rate_per_second.max(0.0)
    }

    pub(crate) fn from_bb84(b: &Bb84Breakdown, source: SourceKind) -> Self {
        RateBreakdown {
            protocol: Protocol::Bb84,
            source,
            rate_per_pulse: b.rate_per_pulse,
            rate_per_second: b.rate_per_second,
            single_pair: b.gain_1,
            gain_z: (source == SourceKind::Decoy).then_some(b.gain_mu),
            e11x: b.e1,
            e11z: b.qber,
            memory: None,
            extension: false,
        }
    }
}

/// Evaluates `protocol` on `config`, using the source kind recorded in the config.
pub fn evaluate(config: &SystemConfig, protocol: Protocol) -> Result<RateBreakdown> {
    let source = config.source.kind;
    match (protocol, source) {
        (Protocol::Bb84, SourceKind::SinglePhoton) => {
            Ok(RateBreakdown::from_bb84(&bb84_single_photon(config)?, source))
        }
        (Protocol::Bb84, SourceKind::Decoy) => {
            Ok(RateBreakdown::from_bb84(&bb84_decoy(config)?, source))
        }
        (Protocol::Mdi, SourceKind::SinglePhoton) => mdi::mdi_single_photon_rate(config),
        (Protocol::Mdi, SourceKind::Decoy) => mdi::mdi_decoy_rate(config),
        (p, SourceKind::SinglePhoton) => {
            engine::rate_single_photon(&config.with_heralding(p.heralding()))
        }
        (p, SourceKind::Decoy) => engine::rate_decoy(&config.with_heralding(p.heralding())),
    }
}
