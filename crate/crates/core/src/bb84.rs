//! Efficient BB84 key rates for single-photon and infinite-decoy sources.
//!
//! The receiver has one threshold detector per bit value; double clicks are
//! assigned a random bit. No sifting prefactor is applied.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{channel_transmittance, entropy_unchecked, SystemConfig};

/// QBER of a purely random outcome.
pub const E0: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bb84Breakdown {
    /// `Y_C` (single photon) or `Q_C` (decoy).
    pub yield_or_gain_correct: f64,
    /// `Y_E` (single photon) or `Q_E` (decoy).
    pub yield_or_gain_error: f64,
    pub yield_1: f64,
    /// `Q_1`; equals `Y_1` for a single-photon source.
    pub gain_1: f64,
    /// `Q_μ`; equals `Y_1` for a single-photon source.
    pub gain_mu: f64,
    /// Single-photon QBER `e_1`.
    pub e1: f64,
    /// `e_1` (single photon) or `E_μ` (decoy).
    pub qber: f64,
    /// Signed rate; negative values mean no key.
    pub rate_per_pulse: f64,
    pub rate_per_second: f64,
}

impl Bb84Breakdown {
    pub fn clamped_rate_per_second(&self) -> f64 {
        self.rate_per_second.max(0.0)
    }
}

/// End-to-end transmittance, dark-count probability and total misalignment.
fn link(config: &SystemConfig) -> Result<(f64, f64, f64)> {
    let eta = channel_transmittance(config.geometry.total(), &config.channel)?
        * config.detector.efficiency.get();
    let p_dc = config.per_pulse().p_dc;
    let e_d = config.channel.misalignment_a.get() + config.channel.misalignment_b.get();
    Ok((eta, p_dc, e_d))
}

struct SinglePhoton {
    y1: f64,
    yc: f64,
    ye: f64,
    e1: f64,
}

fn single_photon_terms(eta: f64, p_dc: f64, e_d: f64) -> SinglePhoton {
    let y1 = eta + (1.0 - eta) * p_dc * (2.0 - p_dc);
    let yc = (1.0 - p_dc / 2.0) * (eta + (1.0 - eta) * p_dc);
    let ye = p_dc * ((1.0 - eta) * (1.0 - p_dc / 2.0) + eta / 2.0);
    let e1 = if y1 > 0.0 {
        (E0 * y1 - (E0 - e_d) * eta * (1.0 - p_dc)) / y1
    } else {
        E0
    };
    SinglePhoton { y1, yc, ye, e1 }
}

pub fn bb84_single_photon(config: &SystemConfig) -> Result<Bb84Breakdown> {
    let (eta, p_dc, e_d) = link(config)?;
    let sp = single_photon_terms(eta, p_dc, e_d);
    let f = config.error_correction_inefficiency;
    let h = entropy_unchecked(sp.e1);
    let rate_per_pulse = sp.y1 * (1.0 - h - f * h);
    Ok(Bb84Breakdown {
        yield_or_gain_correct: sp.yc,
        yield_or_gain_error: sp.ye,
        yield_1: sp.y1,
        gain_1: sp.y1,
        gain_mu: sp.y1,
        e1: sp.e1,
        qber: sp.e1,
        rate_per_pulse,
        rate_per_second: rate_per_pulse / config.source.baseline_period(),
    })
}

pub fn bb84_decoy(config: &SystemConfig) -> Result<Bb84Breakdown> {
    let mu = config.source.mu;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::domain("mu", mu, "must be > 0"));
    }
    let (eta, p_dc, e_d) = link(config)?;
    let sp = single_photon_terms(eta, p_dc, e_d);
    let q1 = sp.y1 * mu * (-mu).exp();
    let vac = (-eta * mu).exp();
    let hit = -(-eta * mu).exp_m1();
    let q_mu = hit + vac * p_dc * (2.0 - p_dc);
    let q_c = (1.0 - p_dc / 2.0) * (hit + vac * p_dc);
    let q_e = p_dc * (vac * (1.0 - p_dc / 2.0) + hit / 2.0);
    let e_mu = if q_mu > 0.0 {
        (E0 * q_mu - (E0 - e_d) * hit * (1.0 - p_dc)) / q_mu
    } else {
        E0
    };
    let f = config.error_correction_inefficiency;
    let rate_per_pulse = q1 * (1.0 - entropy_unchecked(sp.e1)) - f * q_mu * entropy_unchecked(e_mu);
    Ok(Bb84Breakdown {
        yield_or_gain_correct: q_c,
        yield_or_gain_error: q_e,
        yield_1: sp.y1,
        gain_1: q1,
        gain_mu: q_mu,
        e1: sp.e1,
        qber: e_mu,
        rate_per_pulse,
        rate_per_second: rate_per_pulse / config.source.baseline_period(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Probability, SourceKind};
    use approx::assert_abs_diff_eq;

    /// Configuration whose end-to-end transmittance is `eta` (zero distance,
    /// detector efficiency carries the loss).
    fn cfg(eta: f64, p_dc: f64, e_d: f64, f: f64) -> SystemConfig {
        let mut c = SystemConfig::default();
        c.detector.efficiency = Probability::new(eta).unwrap();
        c.source.pulse_width = 1e-9;
        c.detector.dark_rate = p_dc / 1e-9;
        c.channel.misalignment_a = Probability::new(e_d / 2.0).unwrap();
        c.channel.misalignment_b = Probability::new(e_d / 2.0).unwrap();
        c.error_correction_inefficiency = f;
        c
    }

    /// Exact sum over: arrival, misrouting, dark count on each detector, and the
    /// random bit on double clicks.
    fn enumerate_single(eta: f64, p_dc: f64, e_d: f64) -> (f64, f64) {
        let (mut click, mut err) = (0.0, 0.0);
        for arrives in [true, false] {
            let pa = if arrives { eta } else { 1.0 - eta };
            for wrong in [false, true] {
                let pw = if wrong { e_d } else { 1.0 - e_d };
                for dark_right in [false, true] {
                    for dark_wrong in [false, true] {
                        let pd = (if dark_right { p_dc } else { 1.0 - p_dc })
                            * (if dark_wrong { p_dc } else { 1.0 - p_dc });
                        let right = dark_right || (arrives && !wrong);
                        let wrong_click = dark_wrong || (arrives && wrong);
                        let p = pa * pw * pd;
                        match (right, wrong_click) {
                            (true, false) => click += p,
                            (false, true) => {
                                click += p;
                                err += p;
                            }
                            (true, true) => {
                                click += p;
                                err += p / 2.0;
                            }
                            (false, false) => {}
                        }
                    }
                }
            }
        }
        (click, err / click)
    }

    #[test]
    fn lossless_noiseless_identity() {
        let b = bb84_single_photon(&cfg(1.0, 0.0, 0.0, 1.0)).unwrap();
        assert_eq!(b.yield_1, 1.0);
        assert_eq!(b.e1, 0.0);
        assert_eq!(b.rate_per_pulse, 1.0);
    }

    #[test]
    fn zero_transmittance_gives_zero_rate() {
        let b = bb84_single_photon(&cfg(0.0, 0.0, 0.0, 1.16)).unwrap();
        assert_eq!(b.yield_1, 0.0);
        assert_eq!(b.rate_per_pulse, 0.0);
        assert_eq!(b.e1, E0);
    }

    #[test]
    fn single_photon_matches_click_enumeration() {
        for &(eta, p_dc, e_d) in &[
            (0.5, 1e-6, 0.01),
            (1e-3, 1e-5, 0.02),
            (0.9, 0.1, 0.3),
            (0.0, 0.2, 0.0),
        ] {
            let b = bb84_single_photon(&cfg(eta, p_dc, e_d, 1.16)).unwrap();
            let (y, e) = enumerate_single(eta, p_dc, e_d);
            assert_abs_diff_eq!(b.yield_1, y, epsilon = 1e-14);
            assert_abs_diff_eq!(b.e1, e, epsilon = 1e-12);
            assert_abs_diff_eq!(
                b.yield_or_gain_correct + b.yield_or_gain_error,
                b.yield_1,
                epsilon = 1e-12
            );
        }
        // frozen: eta = 0.5, p_dc = 1e-6, e_d = 0.01, f = 1.16
        let b = bb84_single_photon(&cfg(0.5, 1e-6, 0.01, 1.16)).unwrap();
        let (y, e) = enumerate_single(0.5, 1e-6, 0.01);
        let h = entropy_unchecked(e);
        assert_abs_diff_eq!(b.rate_per_pulse, y * (1.0 - 2.16 * h), epsilon = 1e-14);
    }

    fn decoy(eta: f64, p_dc: f64, e_d: f64, mu: f64) -> Bb84Breakdown {
        let mut c = cfg(eta, p_dc, e_d, 1.16);
        c.source.kind = SourceKind::Decoy;
        c.source.mu = mu;
        bb84_decoy(&c).unwrap()
    }

    #[test]
    fn decoy_vacuum_and_lossless_limits() {
        let p = 1e-4;
        let b = decoy(0.3, p, 0.01, 1e-12);
        assert_abs_diff_eq!(b.gain_mu, p * (2.0 - p), epsilon = 1e-12);
        let b = decoy(1.0, 0.0, 0.0, 0.5);
        assert_abs_diff_eq!(b.gain_mu, 1.0 - (-0.5f64).exp(), epsilon = 1e-15);
        let mut c = cfg(1.0, 0.0, 0.0, 1.16);
        c.source.mu = 0.0;
        assert!(bb84_decoy(&c).is_err());
    }

    #[test]
    fn decoy_decomposition_identity() {
        for &(eta, p, e, mu) in &[(0.1, 1e-5, 0.01, 0.5), (0.7, 0.01, 0.1, 2.0), (1e-6, 1e-6, 0.0, 0.1)] {
            let b = decoy(eta, p, e, mu);
            assert_abs_diff_eq!(b.yield_or_gain_correct + b.yield_or_gain_error, b.gain_mu, epsilon = 1e-12);
        }
    }

    #[test]
    fn weak_intensity_matches_single_photon_yield() {
        let mu = 1e-6;
        let b = decoy(0.2, 0.0, 0.0, mu);
        assert!(((b.gain_mu - b.yield_1 * mu) / (b.yield_1 * mu)).abs() < 1e-5);
    }

    #[test]
    fn misalignment_only_errors_without_dark_counts() {
        let b = bb84_single_photon(&cfg(0.37, 0.0, 0.03, 1.16)).unwrap();
        assert_abs_diff_eq!(b.e1, 0.03, epsilon = 1e-15);
    }

    #[test]
    fn rate_non_increasing_in_distance_and_misalignment() {
        let mut c = cfg(0.93, 3e-10, 0.01, 1.16);
        let mut last = f64::INFINITY;
        for l in (0..=300).step_by(10) {
            c.geometry.distance_a = l as f64;
            let r = bb84_single_photon(&c).unwrap().rate_per_pulse.max(0.0);
            assert!(r <= last);
            last = r;
        }
        let mut last = f64::INFINITY;
        for k in 0..20 {
            let r = bb84_single_photon(&cfg(0.5, 1e-6, k as f64 * 0.005, 1.16))
                .unwrap()
                .rate_per_pulse;
            assert!(r <= last);
            last = r;
        }
    }
}
