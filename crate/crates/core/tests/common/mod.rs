//! Independent oracles shared by the integration and acceptance tests. Nothing
//! here calls the closed forms under test.

#![allow(dead_code)]

use mamdi::stats::{proportion, Estimate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// `(H, V)` amplitudes of the BB84 state for `(x_basis, bit)`.
fn state(x_basis: bool, bit: bool) -> [f64; 2] {
    match (x_basis, bit) {
        (false, true) => [1.0, 0.0],
        (false, false) => [0.0, 1.0],
        (true, true) => [R, R],
        (true, false) => [R, -R],
    }
}

/// Amplitudes on detectors `[cH, cV, dH, dV]` for a photon entering port `a`
/// (`sign = +1`) or `b` (`sign = −1`) of the beam splitter.
fn spread(p: [f64; 2], sign: f64) -> [f64; 4] {
    [p[0] * R, p[1] * R, sign * p[0] * R, sign * p[1] * R]
}

/// Occupied-detector masks and their probabilities for zero, one or two photons.
fn occupied(a: Option<[f64; 2]>, b: Option<[f64; 2]>) -> Vec<(u8, f64)> {
    match (a, b) {
        (None, None) => vec![(0, 1.0)],
        (Some(p), None) | (None, Some(p)) => {
            let u = spread(p, 1.0);
            (0..4).map(|i| (1u8 << i, u[i] * u[i])).collect()
        }
        (Some(pa), Some(pb)) => {
            let (u, w) = (spread(pa, 1.0), spread(pb, -1.0));
            let mut out = Vec::new();
            for i in 0..4 {
                out.push((1u8 << i, 2.0 * (u[i] * w[i]).powi(2)));
                for j in i + 1..4 {
                    let amp = u[i] * w[j] + u[j] * w[i];
                    out.push(((1u8 << i) | (1u8 << j), amp * amp));
                }
            }
            out
        }
    }
}

/// `Some(true)` for two clicks behind one output, `Some(false)` for one behind
/// each, `None` unless exactly one H and one V detector fired.
fn bsm_outcome(mask: u8) -> Option<bool> {
    let (h, v) = (mask & 0b0101, mask & 0b1010);
    if h.count_ones() != 1 || v.count_ones() != 1 {
        return None;
    }
    Some(mask == 0b0011 || mask == 0b1100)
}

/// Yield and per-basis QBER of the partial BSM for single photons, by summing
/// over bits, Alice-side flips, photon survival, routing and dark counts.
pub fn enumerate_kernel(eta_a: f64, eta_b: f64, p: f64, e_d: f64) -> (f64, f64, f64) {
    let mut y = [0.0; 2];
    let mut err = [0.0; 2];
    for (k, x_basis) in [true, false].into_iter().enumerate() {
        for ba in [false, true] {
            for bb in [false, true] {
                for flip in [false, true] {
                    let pf = if flip { e_d } else { 1.0 - e_d };
                    let sa = state(x_basis, ba ^ flip);
                    let sb = state(x_basis, bb);
                    for alive_a in [false, true] {
                        for alive_b in [false, true] {
                            let pa = if alive_a { eta_a } else { 1.0 - eta_a };
                            let pb = if alive_b { eta_b } else { 1.0 - eta_b };
                            for (m, q) in occupied(alive_a.then_some(sa), alive_b.then_some(sb)) {
                                for dark in 0u8..16 {
                                    let n = dark.count_ones() as i32;
                                    let pd = p.powi(n) * (1.0 - p).powi(4 - n);
                                    let Some(same_side) = bsm_outcome(m | dark) else {
                                        continue;
                                    };
                                    let w = 0.25 * pf * pa * pb * q * pd;
                                    y[k] += w;
                                    let announced_equal = x_basis && same_side;
                                    if announced_equal != (ba == bb) {
                                        err[k] += w;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    (y[0], err[0] / y[0], err[1] / y[1])
}

/// Yield and QBER of one photon reaching a two-detector BB84 receiver, with
/// random assignment of double clicks.
pub fn enumerate_bb84(eta: f64, p: f64, e_d: f64) -> (f64, f64) {
    let mut y = 0.0;
    let mut err = 0.0;
    // (photon arrives, photon at wrong detector)
    for (arrive, pa) in [(true, eta), (false, 1.0 - eta)] {
        for (wrong, pw) in [(false, 1.0 - e_d), (true, e_d)] {
            for dc in [false, true] {
                for dw in [false, true] {
                    let pd = (if dc { p } else { 1.0 - p }) * (if dw { p } else { 1.0 - p });
                    let c = dc || (arrive && !wrong);
                    let w = dw || (arrive && wrong);
                    let weight = pa * pw * pd;
                    match (c, w) {
                        (false, false) => {}
                        (true, false) => y += weight,
                        (false, true) => {
                            y += weight;
                            err += weight;
                        }
                        (true, true) => {
                            y += weight;
                            err += weight / 2.0;
                        }
                    }
                }
            }
        }
    }
    (y, err / y)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Among `successes` Bernoulli outcomes, the fraction that were errors.
pub fn conditional(errors: u64, successes: u64) -> Estimate {
    proportion(errors, successes)
}

#[derive(Debug, Clone, Copy)]
pub struct CoherentGainMc {
    pub gain_z: Estimate,
    pub gain_correct: Estimate,
    pub gain_error: Estimate,
    pub qber_z: Estimate,
}

fn clicks<R: Rng>(rng: &mut R, mean: f64, p_dc: f64) -> bool {
    let photons = if mean > 0.0 {
        Poisson::new(mean).unwrap().sample(rng)
    } else {
        0.0
    };
    photons > 0.0 || rng.random::<f64>() < p_dc
}

/// Z-basis MDI gains for phase-randomized coherent inputs: a uniform relative
/// phase, Poisson photon counts at the four detectors, then dark counts.
pub fn coherent_mdi_gain_mc(
    mu: f64,
    nu: f64,
    eta_a: f64,
    eta_b: f64,
    p_dc: f64,
    e_d: f64,
    trials: u64,
    seed: u64,
) -> CoherentGainMc {
    let mut r = rng(seed);
    let (ma, mb) = (eta_a * mu, eta_b * nu);
    let (mut ok, mut ok_orth, mut ok_same, mut bad) = (0u64, 0u64, 0u64, 0u64);
    for _ in 0..trials {
        let ba: bool = r.random();
        let bb: bool = r.random();
        let flip = r.random::<f64>() < e_d;
        let orthogonal = (ba ^ flip) != bb;
        // Means on [cH, cV, dH, dV], with Alice polarized H when orthogonal.
        let means = if orthogonal {
            [ma / 2.0, mb / 2.0, ma / 2.0, mb / 2.0]
        } else {
            let phi = r.random::<f64>() * std::f64::consts::TAU;
            let cross = (ma * mb).sqrt() * phi.cos();
            [(ma + mb) / 2.0 + cross, 0.0, (ma + mb) / 2.0 - cross, 0.0]
        };
        let mut mask = 0u8;
        for (i, m) in means.into_iter().enumerate() {
            if clicks(&mut r, m.max(0.0), p_dc) {
                mask |= 1 << i;
            }
        }
        if bsm_outcome(mask).is_some() {
            ok += 1;
            if orthogonal {
                ok_orth += 1;
            } else {
                ok_same += 1;
            }
            if ba == bb {
                bad += 1;
            }
        }
    }
    CoherentGainMc {
        gain_z: proportion(ok, trials),
        gain_correct: proportion(ok_orth, trials),
        gain_error: proportion(ok_same, trials),
        qber_z: conditional(bad, ok),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Bb84DecoyMc {
    pub gain_mu: Estimate,
    pub qber: Estimate,
    pub gain_1: Estimate,
}

/// BB84 with a Poisson source: photon number, per-photon loss and
/// misalignment routing, then two threshold detectors with dark counts.
pub fn bb84_decoy_mc(eta: f64, p_dc: f64, e_d: f64, mu: f64, trials: u64, seed: u64) -> Bb84DecoyMc {
    let mut r = rng(seed);
    let pois = Poisson::new(mu).unwrap();
    let (mut clicks, mut errors, mut single) = (0u64, 0u64, 0u64);
    for _ in 0..trials {
        let n = pois.sample(&mut r) as u64;
        let (mut right, mut wrong) = (false, false);
        for _ in 0..n {
            if r.random::<f64>() < eta {
                if r.random::<f64>() < e_d {
                    wrong = true;
                } else {
                    right = true;
                }
            }
        }
        right |= r.random::<f64>() < p_dc;
        wrong |= r.random::<f64>() < p_dc;
        if right || wrong {
            clicks += 1;
            if n == 1 {
                single += 1;
            }
            let err = match (right, wrong) {
                (false, true) => true,
                (true, true) => r.random(),
                _ => false,
            };
            if err {
                errors += 1;
            }
        }
    }
    Bb84DecoyMc {
        gain_mu: proportion(clicks, trials),
        qber: conditional(errors, clicks),
        gain_1: proportion(single, trials),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CoherentLoadingMc {
    /// Probability that a round loads the memory.
    pub load: Estimate,
    /// Probability that a round loads it from exactly one source photon.
    pub single_photon_load: Estimate,
}

/// One directly heralded memory fed by a Poisson source: `n ~ Poisson(μ)`
/// source photons each absorbed with `η_ch·η_w`, plus Poisson background with
/// mean `p_bg` photons each absorbed with `η_w`.
pub fn coherent_loading_mc(
    mu: f64,
    eta_ch: f64,
    eta_w: f64,
    p_bg: f64,
    trials: u64,
    seed: u64,
) -> CoherentLoadingMc {
    let mut r = rng(seed);
    let src = Poisson::new(mu).unwrap();
    let bg = (p_bg > 0.0).then(|| Poisson::new(p_bg).unwrap());
    let (mut load, mut single) = (0u64, 0u64);
    for _ in 0..trials {
        let n = src.sample(&mut r) as u64;
        let absorbed = (0..n).filter(|_| r.random::<f64>() < eta_ch * eta_w).count();
        let nb = bg.map(|d| d.sample(&mut r) as u64).unwrap_or(0);
        let absorbed_bg = (0..nb).filter(|_| r.random::<f64>() < eta_w).count();
        if absorbed + absorbed_bg > 0 {
            load += 1;
            if n == 1 {
                single += 1;
            }
        }
    }
    CoherentLoadingMc {
        load: proportion(load, trials),
        single_photon_load: proportion(single, trials),
    }
}

/// `|a − b| ≤ tol·max(|a|, |b|, tiny)`.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// Two-sided z-test of an observed proportion against the binomial spread
/// implied by the expected value `p` over `n` draws.
pub fn binomial_z(observed: f64, p: f64, n: u64) -> f64 {
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    if sigma == 0.0 {
        if observed == p {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (observed - p) / sigma
    }
}
