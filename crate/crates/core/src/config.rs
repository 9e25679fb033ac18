//! TOML configuration documents.
//!
//! ```toml
//! [channel]
//! loss_db_per_km = 0.2          # or attenuation_length_km
//! background_rate = 0.0         # photons/s per polarization mode
//! misalignment_a = 0.005
//! misalignment_b = 0.005
//!
//! [detector]
//! efficiency = 0.93
//! dark_rate = 1.0               # counts/s
//!
//! [memory]
//! writing_efficiency = 1.0
//! entangling_efficiency = 0.05
//! reading_efficiency_0 = 0.73
//! amplitude_decay_time = 1e-4   # seconds, or "infinite"
//! coherence_time = 1e-4
//! writing_time = 3e-10
//! reading_time = 3e-10
//!
//! [source]
//! kind = "single_photon"        # or "decoy"
//! mu = 0.5
//! nu = 0.5
//! pulse_width = 3e-10
//! repetition_period = 3e-10
//! baseline_repetition_period = 3.0303e-10   # optional
//!
//! [geometry]
//! distance_a_km = 100.0
//! distance_b_km = 100.0
//! light_speed = 2e8             # m/s
//!
//! [protocol]
//! heralding = "indirect"        # direct | indirect | none
//! error_correction_inefficiency = 1.16
//! ```
//!
//! Every key is optional and defaults to its all-ideal value; unknown keys are
//! rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{
    attenuation_length_from_db, ChannelParams, DecayTime, DetectorParams, Heralding, LinkGeometry,
    MemoryParams, Probability, SourceKind, SourceParams, SystemConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_db_per_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attenuation_length_km: Option<f64>,
    #[serde(default)]
    pub background_rate: f64,
    #[serde(default)]
    pub misalignment_a: f64,
    #[serde(default)]
    pub misalignment_b: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection {
            loss_db_per_km: None,
            attenuation_length_km: None,
            background_rate: 0.0,
            misalignment_a: 0.0,
            misalignment_b: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub efficiency: f64,
    pub dark_rate: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        DetectorSection {
            efficiency: 1.0,
            dark_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemorySection {
    pub writing_efficiency: f64,
    pub entangling_efficiency: f64,
    pub reading_efficiency_0: f64,
    pub amplitude_decay_time: DecayTime,
    pub coherence_time: DecayTime,
    pub writing_time: f64,
    pub reading_time: f64,
}

impl Default for MemorySection {
    fn default() -> Self {
        MemorySection::from(&SystemConfig::default().memory)
    }
}

impl From<&MemoryParams> for MemorySection {
    fn from(m: &MemoryParams) -> Self {
        MemorySection {
            writing_efficiency: m.writing_efficiency.get(),
            entangling_efficiency: m.entangling_efficiency.get(),
            reading_efficiency_0: m.reading_efficiency_0.get(),
            amplitude_decay_time: m.amplitude_decay_time,
            coherence_time: m.coherence_time,
            writing_time: m.writing_time,
            reading_time: m.reading_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    pub kind: SourceKind,
    pub mu: f64,
    pub nu: f64,
    pub pulse_width: f64,
    pub repetition_period: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_repetition_period: Option<f64>,
}

impl Default for SourceSection {
    fn default() -> Self {
        SourceSection::from(&SystemConfig::default().source)
    }
}

impl From<&SourceParams> for SourceSection {
    fn from(s: &SourceParams) -> Self {
        SourceSection {
            kind: s.kind,
            mu: s.mu,
            nu: s.nu,
            pulse_width: s.pulse_width,
            repetition_period: s.repetition_period,
            baseline_repetition_period: s.baseline_repetition_period,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub distance_a_km: f64,
    pub distance_b_km: f64,
    pub light_speed: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        let g = SystemConfig::default().geometry;
        GeometrySection {
            distance_a_km: g.distance_a,
            distance_b_km: g.distance_b,
            light_speed: g.light_speed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub heralding: Heralding,
    pub error_correction_inefficiency: f64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        let c = SystemConfig::default();
        ProtocolSection {
            heralding: c.heralding,
            error_correction_inefficiency: c.error_correction_inefficiency,
        }
    }
}

/// On-disk form of a [`SystemConfig`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigDocument {
    pub channel: ChannelSection,
    pub detector: DetectorSection,
    pub memory: MemorySection,
    pub source: SourceSection,
    pub geometry: GeometrySection,
    pub protocol: ProtocolSection,
}

fn prob(field: &str, v: f64) -> Result<Probability> {
    Probability::new(v).map_err(|_| Error::config(field, "must lie in [0, 1]", v))
}

impl ConfigDocument {
    pub fn to_config(&self) -> Result<SystemConfig> {
        let ch = &self.channel;
        let attenuation_length = match (ch.loss_db_per_km, ch.attenuation_length_km) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "channel",
                    "give either loss_db_per_km or attenuation_length_km, not both",
                    "both",
                ))
            }
            (Some(db), None) => attenuation_length_from_db(db)
                .map_err(|_| Error::config("channel.loss_db_per_km", "must be > 0", db))?,
            (None, Some(l)) => l,
            (None, None) => SystemConfig::default().channel.attenuation_length,
        };
        let m = &self.memory;
        let s = &self.source;
        let g = &self.geometry;
        let config = SystemConfig {
            channel: ChannelParams {
                attenuation_length,
                background_rate: ch.background_rate,
                misalignment_a: prob("channel.misalignment_a", ch.misalignment_a)?,
                misalignment_b: prob("channel.misalignment_b", ch.misalignment_b)?,
            },
            detector: DetectorParams {
                efficiency: prob("detector.efficiency", self.detector.efficiency)?,
                dark_rate: self.detector.dark_rate,
            },
            memory: MemoryParams {
                writing_efficiency: prob("memory.writing_efficiency", m.writing_efficiency)?,
                entangling_efficiency: prob("memory.entangling_efficiency", m.entangling_efficiency)?,
                reading_efficiency_0: prob("memory.reading_efficiency_0", m.reading_efficiency_0)?,
                amplitude_decay_time: m.amplitude_decay_time,
                coherence_time: m.coherence_time,
                writing_time: m.writing_time,
                reading_time: m.reading_time,
            },
            source: SourceParams {
                kind: s.kind,
                mu: s.mu,
                nu: s.nu,
                pulse_width: s.pulse_width,
                repetition_period: s.repetition_period,
                baseline_repetition_period: s.baseline_repetition_period,
            },
            geometry: LinkGeometry {
                distance_a: g.distance_a_km,
                distance_b: g.distance_b_km,
                light_speed: g.light_speed,
            },
            error_correction_inefficiency: self.protocol.error_correction_inefficiency,
            heralding: self.protocol.heralding,
        };
        config.validate()?;
        Ok(config)
    }
}

impl From<&SystemConfig> for ConfigDocument {
    fn from(c: &SystemConfig) -> Self {
        ConfigDocument {
            channel: ChannelSection {
                loss_db_per_km: None,
                attenuation_length_km: Some(c.channel.attenuation_length),
                background_rate: c.channel.background_rate,
                misalignment_a: c.channel.misalignment_a.get(),
                misalignment_b: c.channel.misalignment_b.get(),
            },
            detector: DetectorSection {
                efficiency: c.detector.efficiency.get(),
                dark_rate: c.detector.dark_rate,
            },
            memory: MemorySection::from(&c.memory),
            source: SourceSection::from(&c.source),
            geometry: GeometrySection {
                distance_a_km: c.geometry.distance_a,
                distance_b_km: c.geometry.distance_b,
                light_speed: c.geometry.light_speed,
            },
            protocol: ProtocolSection {
                heralding: c.heralding,
                error_correction_inefficiency: c.error_correction_inefficiency,
            },
        }
    }
}

fn parse_table(text: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>()
        .map_err(|e| Error::Parse(e.to_string()))
}

fn table_to_config(table: toml::Table) -> Result<SystemConfig> {
    let doc: ConfigDocument = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    doc.to_config()
}

/// Parses and validates a TOML document.
pub fn parse_config(text: &str) -> Result<SystemConfig> {
    table_to_config(parse_table(text)?)
}

/// Serializes a configuration so that [`parse_config`] restores it exactly.
pub fn emit_config(config: &SystemConfig) -> String {
    toml::to_string(&ConfigDocument::from(config)).expect("config document serializes")
}

/// Parses a `section.key=value` override. The value is read as a TOML value
/// and falls back to a bare string.
fn parse_override(spec: &str) -> Result<(String, String, toml::Value)> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("override `{spec}` is not of the form section.key=value")))?;
    let (section, key) = path
        .trim()
        .split_once('.')
        .ok_or_else(|| Error::Parse(format!("override key `{path}` is not of the form section.key")))?;
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((section.to_string(), key.to_string(), value))
}

/// Applies `section.key=value` overrides to a TOML document and parses it.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<SystemConfig> {
    let mut table = parse_table(text)?;
    for spec in overrides {
        let (section, key, value) = parse_override(spec)?;
        let entry = table
            .entry(section.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let section_table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Parse(format!("`{section}` is not a section")))?;
        // a new attenuation form replaces the other one
        if section == "channel" && (key == "loss_db_per_km" || key == "attenuation_length_km") {
            section_table.remove("loss_db_per_km");
            section_table.remove("attenuation_length_km");
        }
        section_table.insert(key, value);
    }
    table_to_config(table)
}

/// Applies overrides on top of an existing configuration.
pub fn apply_overrides(config: &SystemConfig, overrides: &[String]) -> Result<SystemConfig> {
    if overrides.is_empty() {
        return Ok(*config);
    }
    parse_with_overrides(&emit_config(config), overrides)
}
