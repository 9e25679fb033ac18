//! No-memory MDI-QKD rates, and the single-photon yield/error kernel that the
//! memory-assisted engine reuses with memories in place of the sources.

use serde::Serialize;

use crate::bessel::bessel_i0_scaled;
use crate::error::{Error, Result};
use crate::params::{channel_transmittance, entropy_unchecked, SourceKind, SystemConfig};
use crate::rates::{Protocol, RateBreakdown};

/// QBER of a purely random outcome.
pub const E0: f64 = 0.5;

/// Single-photon-pair yield and per-basis QBERs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MdiKernel {
    pub y11: f64,
    pub e11x: f64,
    pub e11z: f64,
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::domain(name, v, "must lie in [0, 1]"))
    }
}

/// `Y_11`, `e_11;X` and `e_11;Z` for single photons reaching the BSM with
/// transmittances `eta_a`, `eta_b`. QBERs default to 1/2 when the yield is zero.
pub fn mdi_kernel(eta_a: f64, eta_b: f64, p_dc: f64, e_d: f64) -> Result<MdiKernel> {
    check_unit("eta_a", eta_a)?;
    check_unit("eta_b", eta_b)?;
    check_unit("p_dc", p_dc)?;
    check_unit("e_d", e_d)?;
    let keep = (1.0 - p_dc).powi(2);
    let y11 = keep
        * (eta_a * eta_b / 2.0
            + (2.0 * eta_a + 2.0 * eta_b - 3.0 * eta_a * eta_b) * p_dc
            + 4.0 * (1.0 - eta_a) * (1.0 - eta_b) * p_dc * p_dc);
    if y11 <= 0.0 {
        return Ok(MdiKernel {
            y11: 0.0,
            e11x: E0,
            e11z: E0,
        });
    }
    let coincidence = keep * eta_a * eta_b / 2.0;
    let e11x = (E0 * y11 - (E0 - e_d) * coincidence) / y11;
    let e11z = (E0 * y11 - (E0 - e_d) * coincidence * (1.0 - 2.0 * p_dc)) / y11;
    Ok(MdiKernel { y11, e11x, e11z })
}

/// Combined misalignment of two independently flipping legs.
pub fn xor_probability(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + b * (1.0 - a)
}

/// Per-leg transmittances, dark-count probability and total misalignment of the
/// no-memory link.
fn link(config: &SystemConfig) -> Result<(f64, f64, f64, f64)> {
    let eta_d = config.detector.efficiency.get();
    let eta_a = channel_transmittance(config.geometry.distance_a, &config.channel)? * eta_d;
    let eta_b = channel_transmittance(config.geometry.distance_b, &config.channel)? * eta_d;
    let e_d = xor_probability(
        config.channel.misalignment_a.get(),
        config.channel.misalignment_b.get(),
    );
    Ok((eta_a, eta_b, config.per_pulse().p_dc, e_d))
}

pub fn mdi_single_photon_rate(config: &SystemConfig) -> Result<RateBreakdown> {
    let (eta_a, eta_b, p_dc, e_d) = link(config)?;
    let k = mdi_kernel(eta_a, eta_b, p_dc, e_d)?;
    let f = config.error_correction_inefficiency;
    let rate_per_pulse =
        k.y11 * (1.0 - entropy_unchecked(k.e11x) - f * entropy_unchecked(k.e11z));
    Ok(RateBreakdown {
        protocol: Protocol::Mdi,
        source: SourceKind::SinglePhoton,
        rate_per_pulse,
        rate_per_second: rate_per_pulse / config.source.baseline_period(),
        single_pair: k.y11,
        gain_z: None,
        e11x: k.e11x,
        e11z: k.e11z,
        memory: None,
        extension: false,
    })
}

/// Z-basis signal gain of the no-memory link with phase-randomized coherent inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MdiDecoyGain {
    /// `Q'_C`: successes from orthogonal inputs.
    pub gain_correct: f64,
    /// `Q'_E`: successes from identical inputs.
    pub gain_error: f64,
    pub gain_z: f64,
    pub qber_z: f64,
    pub x_aux: f64,
    /// Defined alongside `x` but not used by the gain expressions.
    pub y_aux: f64,
    pub mu_prime: f64,
}

pub fn mdi_decoy_gain(
    mu: f64,
    nu: f64,
    eta_a: f64,
    eta_b: f64,
    p_dc: f64,
    e_d: f64,
) -> Result<MdiDecoyGain> {
    for (name, v) in [("mu", mu), ("nu", nu)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(name, v, "must be > 0"));
        }
    }
    check_unit("eta_a", eta_a)?;
    check_unit("eta_b", eta_b)?;
    check_unit("p_dc", p_dc)?;
    check_unit("e_d", e_d)?;
    let ma = eta_a * mu;
    let mb = eta_b * nu;
    let x = (ma * mb).sqrt() / 2.0;
    let mu_prime = ma + mb;
    let y = (1.0 - p_dc) * (-mu_prime / 4.0).exp();
    let keep = (1.0 - p_dc).powi(2);
    let gain_correct = 2.0
        * keep
        * (-mu_prime / 2.0).exp()
        * (p_dc * (-ma / 2.0).exp() - (-ma / 2.0).exp_m1())
        * (p_dc * (-mb / 2.0).exp() - (-mb / 2.0).exp_m1());
    // e^{-μ'/2} I0(2x) = e^{-(μ'/2 - 2x)} · [e^{-2x} I0(2x)], with μ'/2 >= 2x.
    let damped_i0 = (-(mu_prime / 2.0 - 2.0 * x)).exp() * bessel_i0_scaled(2.0 * x);
    let gain_error =
        2.0 * p_dc * keep * (damped_i0 - (1.0 - p_dc) * (-mu_prime).exp());
    let gain_z = gain_correct + gain_error;
    let qber_z = if gain_z > 0.0 {
        (e_d * gain_correct + (1.0 - e_d) * gain_error) / gain_z
    } else {
        E0
    };
    Ok(MdiDecoyGain {
        gain_correct,
        gain_error,
        gain_z,
        qber_z,
        x_aux: x,
        y_aux: y,
        mu_prime,
    })
}

pub fn mdi_decoy_rate(config: &SystemConfig) -> Result<RateBreakdown> {
    let (eta_a, eta_b, p_dc, e_d) = link(config)?;
    let (mu, nu) = (config.source.mu, config.source.nu);
    let gain = mdi_decoy_gain(mu, nu, eta_a, eta_b, p_dc, e_d)?;
    let k = mdi_kernel(eta_a, eta_b, p_dc, e_d)?;
    let q11 = mu * nu * (-mu - nu).exp() * k.y11;
    let f = config.error_correction_inefficiency;
    let rate_per_pulse = q11 * (1.0 - entropy_unchecked(k.e11x))
        - f * gain.gain_z * entropy_unchecked(gain.qber_z);
    Ok(RateBreakdown {
        protocol: Protocol::Mdi,
        source: SourceKind::Decoy,
        rate_per_pulse,
        rate_per_second: rate_per_pulse / config.source.baseline_period(),
        single_pair: q11,
        gain_z: Some(gain.gain_z),
        e11x: k.e11x,
        e11z: gain.qber_z,
        memory: None,
        extension: false,
    })
}

/// Z-basis success probability and QBER of a side BSM fed by a phase-randomized
/// coherent pulse and a single photon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideGain {
    pub gain: f64,
    pub qber: f64,
}

/// Side-BSM gain for a coherent pulse of mean `intensity` through transmittance
/// `eta_coherent` and a single photon that arrives with probability `eta_photon`.
///
/// A photon sharing the coherent pulse's polarization interferes with it: for
/// `n` coherent photons all `n + 1` leave the same port with probability
/// `(n + 1)/2^n`, which averages to `e^{-m/2}(1 + m/2)` over a Poisson `n`.
pub fn side_coherent_single_gain(
    intensity: f64,
    eta_coherent: f64,
    eta_photon: f64,
    p_dc: f64,
    e_d: f64,
) -> Result<SideGain> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::domain("intensity", intensity, "must be > 0"));
    }
    check_unit("eta_coherent", eta_coherent)?;
    check_unit("eta_photon", eta_photon)?;
    check_unit("p_dc", p_dc)?;
    check_unit("e_d", e_d)?;
    let m = eta_coherent * intensity;
    let q = p_dc - (1.0 - p_dc) * (-m / 2.0).exp_m1();
    // exactly one click in a polarization class lit only by the coherent pulse
    let coherent_only = 2.0 * q * (1.0 - q);
    // exactly one click in a class with dark counts only
    let dark_only = 2.0 * p_dc * (1.0 - p_dc);
    // class holding the single photon alone
    let photon_only = 1.0 - p_dc;
    // class holding the photon and the coherent pulse together
    let bunched = (1.0 - p_dc) * (-m / 2.0).exp() * (1.0 + m / 2.0);

    let absent = (1.0 - eta_photon) * coherent_only * dark_only;
    let orthogonal = 0.5 * eta_photon * coherent_only * photon_only;
    let parallel = 0.5 * eta_photon * bunched * dark_only;
    let gain = absent + orthogonal + parallel;
    let qber = if gain > 0.0 {
        (E0 * absent + e_d * orthogonal + (1.0 - e_d) * parallel) / gain
    } else {
        E0
    };
    Ok(SideGain { gain, qber })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn kernel_examples() {
        let k = mdi_kernel(1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(k.y11, 0.5);
        assert_eq!((k.e11x, k.e11z), (0.0, 0.0));
        let k = mdi_kernel(0.0, 0.0, 0.0, 0.3).unwrap();
        assert_eq!(k.y11, 0.0);
        assert_eq!((k.e11x, k.e11z), (E0, E0));
        assert!(mdi_kernel(1.1, 0.5, 0.0, 0.0).is_err());
        assert!(mdi_kernel(0.5, 0.5, -1e-3, 0.0).is_err());
    }

    #[test]
    fn decoy_gain_limits() {
        let g = mdi_decoy_gain(0.5, 0.4, 0.3, 0.2, 0.0, 0.015).unwrap();
        assert_eq!(g.gain_error, 0.0);
        assert_abs_diff_eq!(g.qber_z, 0.015, epsilon = 1e-15);

        let p = 1e-3;
        let g = mdi_decoy_gain(0.5, 0.5, 0.0, 0.0, p, 0.01).unwrap();
        // vacuum on both sides: dark counts alone, split evenly
        let want = 2.0 * p * p * (1.0 - p).powi(2);
        assert_abs_diff_eq!(g.gain_correct, want, epsilon = 1e-18);
        assert_abs_diff_eq!(g.gain_error, want, epsilon = 1e-18);
        assert!(mdi_decoy_gain(0.0, 0.5, 0.1, 0.1, 0.0, 0.0).is_err());
        assert!(mdi_decoy_gain(0.5, -1.0, 0.1, 0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn decoy_gain_survives_large_intensities() {
        let g = mdi_decoy_gain(400.0, 400.0, 1.0, 1.0, 1e-6, 0.0).unwrap();
        assert!(g.gain_z.is_finite() && g.gain_z >= 0.0);
    }

    #[test]
    fn decoy_rate_vanishing_intensity() {
        let mut c = SystemConfig::default();
        c.source.kind = SourceKind::Decoy;
        c.source.mu = 1e-9;
        c.detector.dark_rate = 1e3;
        let r = mdi_decoy_rate(&c).unwrap();
        assert!(r.single_pair < 1e-8);
        assert!(r.rate_per_pulse <= 0.0);
    }

    #[test]
    fn decoy_rate_noiseless_is_single_pair_gain() {
        let mut c = SystemConfig::default();
        c.source.kind = SourceKind::Decoy;
        c.error_correction_inefficiency = 1.0;
        c.geometry.distance_a = 10.0;
        c.geometry.distance_b = 10.0;
        let r = mdi_decoy_rate(&c).unwrap();
        assert!(r.rate_per_pulse > 0.0);
        assert_abs_diff_eq!(r.rate_per_pulse, r.single_pair, epsilon = 1e-15);
    }

    #[test]
    fn single_photon_rate_examples() {
        let mut c = SystemConfig::default();
        c.error_correction_inefficiency = 1.0;
        let r = mdi_single_photon_rate(&c).unwrap();
        assert_eq!(r.rate_per_pulse, 0.5);
        c.detector.efficiency = crate::params::Probability::ZERO;
        assert_eq!(mdi_single_photon_rate(&c).unwrap().rate_per_pulse, 0.0);
    }

    #[test]
    fn side_gain_reduces_to_kernel_without_coherent_light() {
        for &(eta_b, p) in &[(0.3, 1e-3), (0.05, 1e-6), (1.0, 0.01)] {
            let s = side_coherent_single_gain(1e-300, 1.0, eta_b, p, 0.02).unwrap();
            let k = mdi_kernel(0.0, eta_b, p, 0.02).unwrap();
            assert_abs_diff_eq!(s.gain, k.y11, epsilon = 1e-15);
            assert_abs_diff_eq!(s.qber, E0, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn z_error_exceeds_x_error(a in 0.0f64..=1.0, b in 0.0f64..=1.0, p in 1e-9f64..0.2, e in 0.0f64..0.5) {
            let k = mdi_kernel(a, b, p, e).unwrap();
            prop_assert!(k.e11z >= k.e11x - 1e-15);
        }

        #[test]
        fn yield_is_symmetric(a in 0.0f64..=1.0, b in 0.0f64..=1.0, p in 0.0f64..0.5, e in 0.0f64..0.5) {
            let k1 = mdi_kernel(a, b, p, e).unwrap();
            let k2 = mdi_kernel(b, a, p, e).unwrap();
            prop_assert!((k1.y11 - k2.y11).abs() <= 1e-14 * k1.y11.max(f64::MIN_POSITIVE));
            prop_assert!((k1.e11z - k2.e11z).abs() <= 1e-14);
        }

        #[test]
        fn decoy_gain_decomposes(mu in 0.01f64..5.0, nu in 0.01f64..5.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0, p in 0.0f64..0.1, e in 0.0f64..0.5) {
            let g = mdi_decoy_gain(mu, nu, a, b, p, e).unwrap();
            prop_assert!((g.gain_correct + g.gain_error - g.gain_z).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&g.qber_z));
            prop_assert!(g.gain_error >= -1e-18);
        }
    }
}
