//! Effective bit-flip probabilities of the two stored qubits, per basis.
//!
//! A memory's Z-basis error combines the setup misalignment of its leg with
//! unpolarized background loads (direct heralding) or with erroneous side-BSM
//! clicks (indirect heralding). X-basis states additionally dephase while the
//! early memory waits for the late one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::loading::order_and_overlap;
use crate::mdi::{mdi_kernel, xor_probability};
use crate::params::{channel_transmittance, Heralding, Leg, SystemConfig};

/// Probability that a loaded memory holds a background photon,
/// `(1 − e^{−η_w p_BG})/η_K`, clamped to `[0, 1]`.
pub fn background_flip_prob(eta_k: f64, eta_w: f64, p_bg: f64) -> Result<f64> {
    if !(eta_k > 0.0 && eta_k <= 1.0) {
        return Err(Error::domain("eta_k", eta_k, "loading probability must lie in (0, 1]"));
    }
    if !(p_bg >= 0.0) {
        return Err(Error::domain("p_bg", p_bg, "must be >= 0"));
    }
    Ok((-(-eta_w * p_bg).exp_m1() / eta_k).clamp(0.0, 1.0))
}

/// Z-basis flip probability of a directly heralded memory.
pub fn misalignment_z_direct(e_dk: f64, e_bg: f64) -> f64 {
    e_dk * (1.0 - e_bg) + e_bg / 2.0
}

/// Per-detector dark-count probability of a side BSM, with background light
/// folded in as `(γ_dc + η_d γ_BG/2)·τ_p`.
pub fn side_dark_count(config: &SystemConfig) -> f64 {
    let eta_d = config.detector.efficiency.get();
    (config.detector.dark_rate + eta_d * config.channel.background_rate / 2.0)
        * config.source.pulse_width
}

/// Transmittances `(η_d η_ch(L_K), η_d η_ent)` seen by the side BSM of `leg`.
pub(crate) fn side_transmittances(config: &SystemConfig, leg: Leg) -> Result<(f64, f64)> {
    let eta_d = config.detector.efficiency.get();
    let eta_ch = channel_transmittance(config.leg_distance(leg), &config.channel)?;
    Ok((eta_d * eta_ch, eta_d * config.memory.entangling_efficiency.get()))
}

/// Z-basis flip probability of an indirectly heralded memory: every erroneous
/// side-BSM herald counts as a flip.
pub fn misalignment_z_indirect(config: &SystemConfig, leg: Leg) -> Result<f64> {
    let (eta_leg, eta_ent) = side_transmittances(config, leg)?;
    let k = mdi_kernel(eta_leg, eta_ent, side_dark_count(config), config.leg_misalignment(leg))?;
    Ok(k.e11z)
}

/// Misalignment of both memories at loading probabilities `(η_A, η_B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairMisalignment {
    pub e_dz_a: f64,
    pub e_dz_b: f64,
    pub mean_e_deph_a: f64,
    pub mean_e_deph_b: f64,
    pub mean_e_dx_a: f64,
    pub mean_e_dx_b: f64,
    /// `E{e_dX^(A) e_dX^(B)}`.
    pub mean_e_dx_product: f64,
    /// `e_dZ^QM`.
    pub e_dz_pair: f64,
    /// `E{e_dX^QM}`.
    pub mean_e_dx_pair: f64,
    pub beta_a: f64,
    pub beta_b: f64,
}

/// Per-leg `(e_dZ, β)` before dephasing.
fn leg_terms(config: &SystemConfig, leg: Leg, eta_k: f64) -> Result<(f64, f64)> {
    match config.heralding {
        Heralding::Direct => {
            let e_bg = background_flip_prob(
                eta_k,
                config.memory.writing_efficiency.get(),
                config.per_pulse().p_bg,
            )?;
            let e_d = config.leg_misalignment(leg);
            Ok((misalignment_z_direct(e_d, e_bg), (1.0 - 2.0 * e_d) * (1.0 - e_bg)))
        }
        Heralding::Indirect => {
            if !(eta_k > 0.0 && eta_k <= 1.0) {
                return Err(Error::domain("eta_k", eta_k, "loading probability must lie in (0, 1]"));
            }
            let e = misalignment_z_indirect(config, leg)?;
            Ok((e, 1.0 - 2.0 * e))
        }
        Heralding::None => Err(Error::config(
            "protocol.heralding",
            "memory misalignment needs direct or indirect heralding",
            "none",
        )),
    }
}

/// `E{e_deph}` of the memory with loading probability `eta_self`.
fn mean_dephasing(eta_self: f64, eta_other: f64, delta: f64) -> Result<f64> {
    let oo = order_and_overlap(eta_self, eta_other, delta)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    Ok(((1.0 - oo.prob_a_ge_b - oo.s_a_lt_b) / 2.0).max(0.0))
}

pub fn pair_misalignment(config: &SystemConfig, eta_a: f64, eta_b: f64) -> Result<PairMisalignment> {
    let (e_dz_a, beta_a) = leg_terms(config, Leg::A, eta_a)?;
    let (e_dz_b, beta_b) = leg_terms(config, Leg::B, eta_b)?;
    let delta = config
        .memory
        .coherence_time
        .rate_ratio(config.source.repetition_period);
    let deph_a = mean_dephasing(eta_a, eta_b, delta)?;
    let deph_b = mean_dephasing(eta_b, eta_a, delta)?;
    let mean_e_dx_a = e_dz_a + beta_a * deph_a;
    let mean_e_dx_b = e_dz_b + beta_b * deph_b;
    // e_deph^(A)·e_deph^(B) vanishes: only the early memory dephases
    let product = e_dz_a * e_dz_b + beta_a * deph_a * e_dz_b + beta_b * deph_b * e_dz_a;
    Ok(PairMisalignment {
        e_dz_a,
        e_dz_b,
        mean_e_deph_a: deph_a,
        mean_e_deph_b: deph_b,
        mean_e_dx_a,
        mean_e_dx_b,
        mean_e_dx_product: product,
        e_dz_pair: xor_probability(e_dz_a, e_dz_b),
        mean_e_dx_pair: (mean_e_dx_a + mean_e_dx_b - 2.0 * product).clamp(0.0, 1.0),
        beta_a,
        beta_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{DecayTime, Probability};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn background_examples() {
        assert_eq!(background_flip_prob(0.4, 1.0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            background_flip_prob(1.0, 1.0, 1e-3).unwrap(),
            9.995001666250085e-4,
            epsilon = 1e-18
        );
        assert_abs_diff_eq!(
            background_flip_prob(0.01, 1.0, 1e-4).unwrap(),
            9.999500016666251e-3,
            epsilon = 1e-16
        );
        assert_eq!(background_flip_prob(1e-6, 1.0, 1.0).unwrap(), 1.0);
        assert!(background_flip_prob(0.0, 1.0, 1e-3).is_err());
    }

    #[test]
    fn direct_z_examples() {
        assert_eq!(misalignment_z_direct(0.0, 0.0), 0.0);
        assert_eq!(misalignment_z_direct(0.03, 1.0), 0.5);
        assert_abs_diff_eq!(misalignment_z_direct(0.005, 1e-3), 0.005495, epsilon = 1e-15);
    }

    #[test]
    fn indirect_without_noise_returns_setup_misalignment() {
        let mut c = SystemConfig::default().with_heralding(Heralding::Indirect);
        c.geometry.distance_a = 40.0;
        assert_eq!(misalignment_z_indirect(&c, Leg::A).unwrap(), 0.0);
        c.channel.misalignment_a = Probability::new(0.013).unwrap();
        assert_abs_diff_eq!(misalignment_z_indirect(&c, Leg::A).unwrap(), 0.013, epsilon = 1e-15);
    }

    #[test]
    fn infinite_coherence_or_simultaneous_loading() {
        let mut c = SystemConfig::default();
        c.channel.misalignment_a = Probability::new(0.01).unwrap();
        let p = pair_misalignment(&c, 0.2, 0.05).unwrap();
        assert_eq!(p.mean_e_dx_a, p.e_dz_a);
        assert_eq!(p.mean_e_dx_b, p.e_dz_b);
        c.memory.coherence_time = DecayTime::seconds(1e-8).unwrap();
        let p = pair_misalignment(&c, 1.0, 1.0).unwrap();
        assert_eq!(p.mean_e_deph_a, 0.0);
        assert_eq!(p.mean_e_deph_b, 0.0);
    }

    #[test]
    fn needs_memories() {
        let c = SystemConfig::default().with_heralding(Heralding::None);
        assert!(pair_misalignment(&c, 0.5, 0.5).is_err());
    }

    fn random_config(
        heralding: Heralding,
        e_a: f64,
        e_b: f64,
        bg: f64,
        dc: f64,
        t2_over_t: f64,
        l_a: f64,
        l_b: f64,
    ) -> SystemConfig {
        let mut c = SystemConfig::default().with_heralding(heralding);
        c.channel.misalignment_a = Probability::new(e_a).unwrap();
        c.channel.misalignment_b = Probability::new(e_b).unwrap();
        c.channel.background_rate = bg;
        c.detector.dark_rate = dc;
        c.memory.coherence_time = DecayTime::seconds(t2_over_t * c.source.repetition_period).unwrap();
        c.memory.entangling_efficiency = Probability::new(0.3).unwrap();
        c.geometry.distance_a = l_a;
        c.geometry.distance_b = l_b;
        c
    }

    fn fields(p: &PairMisalignment) -> [f64; 9] {
        [
            p.e_dz_a,
            p.e_dz_b,
            p.mean_e_deph_a,
            p.mean_e_deph_b,
            p.mean_e_dx_a,
            p.mean_e_dx_b,
            p.mean_e_dx_product,
            p.e_dz_pair,
            p.mean_e_dx_pair,
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn bounded_and_dephasing_only_adds(
            indirect in any::<bool>(),
            e_a in 0.0f64..=0.5, e_b in 0.0f64..=0.5,
            bg in 0.0f64..1e7, dc in 0.0f64..1e7,
            t2 in 1.0f64..1e5,
            eta_a in 1e-4f64..=1.0, eta_b in 1e-4f64..=1.0,
            l_a in 0.0f64..200.0, l_b in 0.0f64..200.0,
        ) {
            let h = if indirect { Heralding::Indirect } else { Heralding::Direct };
            let c = random_config(h, e_a, e_b, bg, dc, t2, l_a, l_b);
            let p = pair_misalignment(&c, eta_a, eta_b).unwrap();
            for v in fields(&p) {
                prop_assert!((0.0..=1.0).contains(&v), "{p:?}");
            }
            prop_assert!(p.mean_e_dx_pair >= p.e_dz_pair - 1e-15);
        }

        #[test]
        fn relabeling_swaps_fields(
            indirect in any::<bool>(),
            e_a in 0.0f64..=0.5, e_b in 0.0f64..=0.5,
            bg in 0.0f64..1e6, t2 in 1.0f64..1e4,
            eta_a in 1e-3f64..=1.0, eta_b in 1e-3f64..=1.0,
            l_a in 0.0f64..200.0, l_b in 0.0f64..200.0,
        ) {
            let h = if indirect { Heralding::Indirect } else { Heralding::Direct };
            let c = random_config(h, e_a, e_b, bg, 10.0, t2, l_a, l_b);
            let p = pair_misalignment(&c, eta_a, eta_b).unwrap();
            let q = pair_misalignment(&c.mirrored(), eta_b, eta_a).unwrap();
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-14;
            prop_assert!(close(p.e_dz_a, q.e_dz_b) && close(p.e_dz_b, q.e_dz_a));
            prop_assert!(close(p.mean_e_dx_a, q.mean_e_dx_b) && close(p.mean_e_dx_b, q.mean_e_dx_a));
            prop_assert!(close(p.mean_e_dx_product, q.mean_e_dx_product));
            prop_assert!(close(p.e_dz_pair, q.e_dz_pair));
            prop_assert!(close(p.mean_e_dx_pair, q.mean_e_dx_pair));
        }
    }
}
