//! Parameter sets for the published rate and storage-time figures.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::config::ConfigDocument;
use crate::error::{Error, Result};
use crate::params::{DecayTime, Heralding, Probability, SourceKind, SystemConfig};
use crate::rates::Protocol;
use crate::sweep::{sweep, SweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Fig3,
    Fig4,
    Fig5,
    Fig6a,
    Fig6b,
}

impl PresetName {
    pub const ALL: [PresetName; 5] = [
        PresetName::Fig3,
        PresetName::Fig4,
        PresetName::Fig5,
        PresetName::Fig6a,
        PresetName::Fig6b,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Fig3 => "fig3",
            PresetName::Fig4 => "fig4",
            PresetName::Fig5 => "fig5",
            PresetName::Fig6a => "fig6a",
            PresetName::Fig6b => "fig6b",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// What a preset's curves plot against distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    /// Key rate of each listed protocol.
    Rate,
    /// Storage time next to `L/c`.
    StorageTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetCurve {
    pub label: String,
    pub config: SystemConfig,
    pub protocols: Vec<Protocol>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: PresetName,
    pub kind: PresetKind,
    pub curves: Vec<PresetCurve>,
    /// Total distances in km.
    pub grid: Vec<f64>,
}

#[derive(Serialize)]
struct CurveView<'a> {
    label: &'a str,
    protocols: &'a [Protocol],
    config: ConfigDocument,
}

impl Serialize for Preset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let curves: Vec<CurveView> = self
            .curves
            .iter()
            .map(|c| CurveView {
                label: &c.label,
                protocols: &c.protocols,
                config: ConfigDocument::from(&c.config),
            })
            .collect();
        let mut st = s.serialize_struct("Preset", 4)?;
        st.serialize_field("name", &self.name)?;
        st.serialize_field("kind", &self.kind)?;
        st.serialize_field("curves", &curves)?;
        st.serialize_field("grid_km", &self.grid)?;
        st.end()
    }
}

/// `T₂/T` values plotted for the dephasing-only rate figure.
pub const FIG4_T2_OVER_T: [f64; 3] = [1e2, 1e3, 1e4];
/// Writing times, in seconds, for the storage-time figure.
pub const FIG3_WRITING_TIMES: [f64; 4] = [1e-9, 1e-8, 1e-7, 1e-6];
/// Writing times, in seconds, for the slow-memory rate figure.
pub const FIG5_WRITING_TIMES: [f64; 4] = [1e-9, 1e-8, 1e-7, 1e-6];

fn grid(stop: f64, step: f64) -> Vec<f64> {
    let n = (stop / step).round() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

fn prob(v: f64) -> Probability {
    Probability::new(v).expect("preset constant")
}

fn clocked(mut c: SystemConfig, period: f64) -> SystemConfig {
    c.source.repetition_period = period;
    c.source.pulse_width = period.min(1e-9);
    c.memory.writing_time = period;
    c
}

fn fig6(reading_efficiency_0: f64, decay: f64) -> SystemConfig {
    let mut c = SystemConfig::default();
    c.heralding = Heralding::Indirect;
    c.source.kind = SourceKind::SinglePhoton;
    c.detector.efficiency = prob(0.93);
    c.detector.dark_rate = 1.0;
    c.channel.misalignment_a = prob(0.005);
    c.channel.misalignment_b = prob(0.005);
    c.channel.background_rate = 0.0;
    c.memory.entangling_efficiency = prob(0.05);
    c.memory.reading_efficiency_0 = prob(reading_efficiency_0);
    c.memory.amplitude_decay_time = DecayTime::Finite(decay);
    c.memory.coherence_time = DecayTime::Finite(decay);
    c.memory.writing_time = 300e-12;
    c.memory.reading_time = 300e-12;
    c.source.pulse_width = 300e-12;
    c.source.repetition_period = 300e-12;
    c.source.baseline_repetition_period = Some(1.0 / 3.3e9);
    c.error_correction_inefficiency = 1.16;
    c
}

pub fn preset(name: PresetName) -> Preset {
    match name {
        PresetName::Fig3 => Preset {
            name,
            kind: PresetKind::StorageTime,
            curves: FIG3_WRITING_TIMES
                .iter()
                .map(|&tw| PresetCurve {
                    label: format!("tau_w={tw:e}s"),
                    config: clocked(SystemConfig::default(), tw),
                    protocols: vec![],
                })
                .collect(),
            grid: grid(1000.0, 10.0),
        },
        PresetName::Fig4 => Preset {
            name,
            kind: PresetKind::Rate,
            curves: FIG4_T2_OVER_T
                .iter()
                .map(|&r| {
                    let mut c = SystemConfig::default();
                    c.memory.coherence_time = DecayTime::Finite(r * c.source.repetition_period);
                    PresetCurve {
                        label: format!("T2/T={r:e}"),
                        config: c,
                        protocols: vec![Protocol::MaMdiDirect, Protocol::Bb84],
                    }
                })
                .collect(),
            grid: grid(700.0, 5.0),
        },
        PresetName::Fig5 => Preset {
            name,
            kind: PresetKind::Rate,
            curves: FIG5_WRITING_TIMES
                .iter()
                .map(|&tw| {
                    let mut c = clocked(SystemConfig::default(), tw);
                    c.memory.coherence_time = DecayTime::Finite(1e3 * tw);
                    c.source.baseline_repetition_period = Some(1e-9);
                    PresetCurve {
                        label: format!("tau_w={tw:e}s"),
                        config: c,
                        protocols: vec![Protocol::MaMdiDirect, Protocol::Bb84],
                    }
                })
                .collect(),
            grid: grid(500.0, 5.0),
        },
        PresetName::Fig6a | PresetName::Fig6b => {
            let (label, cfg) = if name == PresetName::Fig6a {
                ("A", fig6(0.3, 4e-6))
            } else {
                ("B", fig6(0.73, 100e-6))
            };
            Preset {
                name,
                kind: PresetKind::Rate,
                curves: vec![PresetCurve {
                    label: label.to_string(),
                    config: cfg,
                    protocols: vec![Protocol::Bb84, Protocol::Mdi, Protocol::MaMdiIndirect],
                }],
                grid: grid(500.0, 5.0),
            }
        }
    }
}

/// Runs every rate curve of a preset over its grid.
pub fn run_rate_preset(p: &Preset) -> Result<Vec<SweepResult>> {
    if p.kind != PresetKind::Rate {
        return Err(Error::config("preset", "not a rate preset", p.name));
    }
    p.curves
        .iter()
        .map(|c| {
            let mut s = sweep(&c.config, &c.protocols, &p.grid)?;
            s.metadata.preset = Some(p.name.to_string());
            s.metadata.curve = Some(c.label.clone());
            Ok(s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid() {
        for name in PresetName::ALL {
            let p = preset(name);
            assert_eq!(name.as_str().parse::<PresetName>().unwrap(), name);
            assert!(!p.curves.is_empty());
            for c in &p.curves {
                c.config.validate().unwrap();
            }
            assert!(p.grid.windows(2).all(|w| w[1] > w[0]));
        }
        assert!(matches!("fig7".parse::<PresetName>(), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn fig6a_constants() {
        let c = preset(PresetName::Fig6a).curves[0].config;
        assert_eq!(c.memory.entangling_efficiency.get(), 0.05);
        assert_eq!(c.memory.reading_efficiency_0.get(), 0.3);
        assert_eq!(c.memory.amplitude_decay_time, DecayTime::Finite(4e-6));
        assert_eq!(c.memory.coherence_time, DecayTime::Finite(4e-6));
        assert_eq!(
            (c.memory.writing_time, c.memory.reading_time, c.source.pulse_width),
            (300e-12, 300e-12, 300e-12)
        );
        assert_eq!(c.detector.efficiency.get(), 0.93);
        assert_eq!(c.detector.dark_rate, 1.0);
        assert_eq!((c.channel.misalignment_a.get(), c.channel.misalignment_b.get()), (0.005, 0.005));
        assert_eq!(c.channel.background_rate, 0.0);
        assert_eq!(crate::engine::holding_rounds(&c).unwrap(), 1);
    }

    #[test]
    fn fig3_and_fig4_are_ideal() {
        for c in preset(PresetName::Fig3).curves {
            let m = c.config.memory;
            assert_eq!(
                (m.writing_efficiency.get(), m.entangling_efficiency.get(), c.config.detector.efficiency.get()),
                (1.0, 1.0, 1.0)
            );
            assert_eq!(c.config.channel.background_rate, 0.0);
            assert_eq!(m.writing_time, c.config.source.repetition_period);
        }
        let fig4 = preset(PresetName::Fig4);
        let ratios: Vec<f64> = fig4
            .curves
            .iter()
            .map(|c| c.config.memory.coherence_time.as_f64() / c.config.source.repetition_period)
            .collect();
        for (r, want) in ratios.iter().zip(FIG4_T2_OVER_T) {
            assert!((r / want - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fig5_baseline_clock() {
        for c in preset(PresetName::Fig5).curves {
            assert_eq!(c.config.source.baseline_period(), 1e-9);
            assert_eq!(c.config.memory.writing_time, c.config.source.repetition_period);
        }
    }
}
