//! Physical parameter records and the elementary quantities derived from them.
//!
//! Every probability in a parameter record is a [`Probability`], so values outside
//! `[0, 1]` cannot reach the rate formulas. Memory time constants that may be
//! infinite are carried as [`DecayTime`], which makes `exp(-t/T)` exactly one in
//! the infinite case instead of relying on a large float.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain("probability", value, "must lie in [0, 1]"))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A memory time constant (`T_1` or `T_2`), in seconds, that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayTime {
    Finite(f64),
    Infinite,
}

impl DecayTime {
    pub fn seconds(value: f64) -> Result<Self> {
        if value.is_infinite() && value > 0.0 {
            Ok(DecayTime::Infinite)
        } else if value.is_finite() && value > 0.0 {
            Ok(DecayTime::Finite(value))
        } else {
            Err(Error::domain("decay time", value, "must be > 0 or infinite"))
        }
    }

    /// `exp(-t/T)`; exactly 1 for an infinite time constant.
    pub fn survival(self, t: f64) -> f64 {
        match self {
            DecayTime::Infinite => 1.0,
            DecayTime::Finite(tau) => (-t / tau).exp(),
        }
    }

    /// The ratio `period / T`, zero when `T` is infinite.
    pub fn rate_ratio(self, period: f64) -> f64 {
        match self {
            DecayTime::Infinite => 0.0,
            DecayTime::Finite(tau) => period / tau,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            DecayTime::Infinite => f64::INFINITY,
            DecayTime::Finite(tau) => tau,
        }
    }
}

impl Serialize for DecayTime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DecayTime::Finite(t) => s.serialize_f64(*t),
            DecayTime::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for DecayTime {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => DecayTime::seconds(v).map_err(serde::de::Error::custom),
            Raw::Text(s) => match s.to_ascii_lowercase().as_str() {
                "inf" | "infinite" | "infinity" => Ok(DecayTime::Infinite),
                other => Err(serde::de::Error::custom(format!(
                    "expected seconds or \"infinite\", got \"{other}\""
                ))),
            },
        }
    }
}

/// Converts a fibre loss in dB/km into an attenuation length in km.
pub fn attenuation_length_from_db(loss_db_per_km: f64) -> Result<f64> {
    if !(loss_db_per_km > 0.0 && loss_db_per_km.is_finite()) {
        return Err(Error::domain(
            "loss_db_per_km",
            loss_db_per_km,
            "must be finite and > 0",
        ));
    }
    Ok(10.0 / (std::f64::consts::LN_10 * loss_db_per_km))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// km
    pub attenuation_length: f64,
    /// Background photons per second per polarization mode.
    pub background_rate: f64,
    pub misalignment_a: Probability,
    pub misalignment_b: Probability,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub efficiency: Probability,
    /// Dark counts per second.
    pub dark_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryParams {
    pub writing_efficiency: Probability,
    pub entangling_efficiency: Probability,
    pub reading_efficiency_0: Probability,
    pub amplitude_decay_time: DecayTime,
    pub coherence_time: DecayTime,
    /// seconds
    pub writing_time: f64,
    /// seconds
    pub reading_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    SinglePhoton,
    Decoy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams {
    pub kind: SourceKind,
    /// Alice's signal intensity.
    pub mu: f64,
    /// Bob's signal intensity.
    pub nu: f64,
    /// seconds
    pub pulse_width: f64,
    /// `T = 1/R_S`, seconds.
    pub repetition_period: f64,
    /// Repetition period used by the no-memory baselines; `None` means same as
    /// `repetition_period`.
    pub baseline_repetition_period: Option<f64>,
}

impl SourceParams {
    pub fn baseline_period(&self) -> f64 {
        self.baseline_repetition_period
            .unwrap_or(self.repetition_period)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    /// km
    pub distance_a: f64,
    /// km
    pub distance_b: f64,
    /// m/s
    pub light_speed: f64,
}

impl LinkGeometry {
    pub fn total(&self) -> f64 {
        self.distance_a + self.distance_b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heralding {
    Direct,
    Indirect,
    None,
}

/// Which side of the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Leg {
    A,
    B,
}

impl Leg {
    pub fn other(self) -> Leg {
        match self {
            Leg::A => Leg::B,
            Leg::B => Leg::A,
        }
    }
}

/// Full parameter record for one link scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub channel: ChannelParams,
    pub detector: DetectorParams,
    pub memory: MemoryParams,
    pub source: SourceParams,
    pub geometry: LinkGeometry,
    pub error_correction_inefficiency: f64,
    pub heralding: Heralding,
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, "must be finite and >= 0", v))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, "must be finite and > 0", v))
    }
}

impl SystemConfig {
    /// Checks every invariant that the field types do not already enforce.
    pub fn validate(&self) -> Result<()> {
        let c = &self.channel;
        positive("channel.attenuation_length_km", c.attenuation_length)?;
        non_negative("channel.background_rate", c.background_rate)?;
        for (field, e) in [
            ("channel.misalignment_a", c.misalignment_a),
            ("channel.misalignment_b", c.misalignment_b),
        ] {
            if e.get() > 0.5 {
                return Err(Error::config(field, "must be <= 1/2", e));
            }
        }
        non_negative("detector.dark_rate", self.detector.dark_rate)?;
        let m = &self.memory;
        non_negative("memory.writing_time", m.writing_time)?;
        non_negative("memory.reading_time", m.reading_time)?;
        let s = &self.source;
        positive("source.pulse_width", s.pulse_width)?;
        positive("source.repetition_period", s.repetition_period)?;
        if let Some(tb) = s.baseline_repetition_period {
            positive("source.baseline_repetition_period", tb)?;
        }
        if s.pulse_width > s.repetition_period {
            return Err(Error::config(
                "source.pulse_width",
                format!("must be <= repetition_period ({})", s.repetition_period),
                s.pulse_width,
            ));
        }
        if s.kind == SourceKind::Decoy {
            positive("source.mu", s.mu)?;
            positive("source.nu", s.nu)?;
        } else {
            non_negative("source.mu", s.mu)?;
            non_negative("source.nu", s.nu)?;
        }
        let g = &self.geometry;
        non_negative("geometry.distance_a_km", g.distance_a)?;
        non_negative("geometry.distance_b_km", g.distance_b)?;
        positive("geometry.light_speed", g.light_speed)?;
        if !(self.error_correction_inefficiency >= 1.0
            && self.error_correction_inefficiency.is_finite())
        {
            return Err(Error::config(
                "protocol.error_correction_inefficiency",
                "must be finite and >= 1",
                self.error_correction_inefficiency,
            ));
        }
        if self.heralding != Heralding::None && m.writing_time > s.repetition_period {
            return Err(Error::config(
                "memory.writing_time",
                format!(
                    "must be <= repetition_period ({}) when memories are used",
                    s.repetition_period
                ),
                m.writing_time,
            ));
        }
        Ok(())
    }

    /// Returns a copy with the given leg lengths.
    pub fn with_distances(&self, distance_a: f64, distance_b: f64) -> Result<Self> {
        let mut out = *self;
        out.geometry.distance_a = distance_a;
        out.geometry.distance_b = distance_b;
        non_negative("geometry.distance_a_km", distance_a)?;
        non_negative("geometry.distance_b_km", distance_b)?;
        Ok(out)
    }

    /// Symmetric split `L_A = L_B = L/2`.
    pub fn with_total_distance(&self, total_km: f64) -> Result<Self> {
        self.with_distances(total_km / 2.0, total_km / 2.0)
    }

    pub fn with_heralding(&self, heralding: Heralding) -> Self {
        let mut out = *self;
        out.heralding = heralding;
        out
    }

    pub fn leg_distance(&self, leg: Leg) -> f64 {
        match leg {
            Leg::A => self.geometry.distance_a,
            Leg::B => self.geometry.distance_b,
        }
    }

    pub fn leg_misalignment(&self, leg: Leg) -> f64 {
        match leg {
            Leg::A => self.channel.misalignment_a.get(),
            Leg::B => self.channel.misalignment_b.get(),
        }
    }

    /// Average background photons and dark-count probability per pulse.
    pub fn per_pulse(&self) -> PerPulse {
        per_pulse_probabilities(&self.channel, &self.detector, &self.source)
    }

    /// Mirror image of this configuration: legs and their parameters swapped.
    pub fn mirrored(&self) -> Self {
        let mut out = *self;
        out.geometry.distance_a = self.geometry.distance_b;
        out.geometry.distance_b = self.geometry.distance_a;
        out.channel.misalignment_a = self.channel.misalignment_b;
        out.channel.misalignment_b = self.channel.misalignment_a;
        std::mem::swap(&mut out.source.mu, &mut out.source.nu);
        out
    }
}

impl Default for SystemConfig {
    /// All-ideal devices at zero distance, 0.2 dB/km fibre, a 1 ns clock and
    /// direct heralding.
    fn default() -> Self {
        SystemConfig {
            channel: ChannelParams {
                attenuation_length: attenuation_length_from_db(0.2).expect("constant"),
                background_rate: 0.0,
                misalignment_a: Probability::ZERO,
                misalignment_b: Probability::ZERO,
            },
            detector: DetectorParams {
                efficiency: Probability::ONE,
                dark_rate: 0.0,
            },
            memory: MemoryParams {
                writing_efficiency: Probability::ONE,
                entangling_efficiency: Probability::ONE,
                reading_efficiency_0: Probability::ONE,
                amplitude_decay_time: DecayTime::Infinite,
                coherence_time: DecayTime::Infinite,
                writing_time: 1e-9,
                reading_time: 0.0,
            },
            source: SourceParams {
                kind: SourceKind::SinglePhoton,
                mu: 0.5,
                nu: 0.5,
                pulse_width: 1e-9,
                repetition_period: 1e-9,
                baseline_repetition_period: None,
            },
            geometry: LinkGeometry {
                distance_a: 0.0,
                distance_b: 0.0,
                light_speed: 2e8,
            },
            error_correction_inefficiency: 1.16,
            heralding: Heralding::Direct,
        }
    }
}

/// `exp(-length/L_att)`.
pub fn channel_transmittance(length_km: f64, channel: &ChannelParams) -> Result<f64> {
    if !(length_km >= 0.0) {
        return Err(Error::domain("length_km", length_km, "must be >= 0"));
    }
    Ok((-length_km / channel.attenuation_length).exp())
}

/// Per-pulse noise figures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerPulse {
    /// Mean background photons per pulse, both polarization modes.
    pub p_bg: f64,
    /// Dark-count probability per detector per pulse.
    pub p_dc: f64,
}

pub fn per_pulse_probabilities(
    channel: &ChannelParams,
    detector: &DetectorParams,
    source: &SourceParams,
) -> PerPulse {
    PerPulse {
        p_bg: 2.0 * channel.background_rate * source.pulse_width,
        p_dc: detector.dark_rate * source.pulse_width,
    }
}

/// Retrieval efficiency `η_r0·exp(-t/T_1)` after holding for `hold_time` seconds.
pub fn reading_efficiency_at(memory: &MemoryParams, hold_time: f64) -> Result<f64> {
    if !(hold_time >= 0.0) {
        return Err(Error::domain("hold_time", hold_time, "must be >= 0"));
    }
    Ok(memory.reading_efficiency_0.get() * memory.amplitude_decay_time.survival(hold_time))
}

/// Weight `p(t) = [1 + exp(-t/T_2)]/2` of the unflipped state under dephasing.
pub fn dephasing_weight(memory: &MemoryParams, hold_time: f64) -> Result<f64> {
    if !(hold_time >= 0.0) {
        return Err(Error::domain("hold_time", hold_time, "must be >= 0"));
    }
    Ok(0.5 * (1.0 + memory.coherence_time.survival(hold_time)))
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("p", p, "must lie in [0, 1]"));
    }
    Ok(entropy_unchecked(p))
}

pub(crate) fn entropy_unchecked(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}
