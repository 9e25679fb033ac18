//! Linear-optics partial Bell-state measurement with threshold detectors.
//!
//! Input mode `a` carries Alice's side, mode `b` Bob's. A 50:50 beam splitter
//! maps `a → (c + d)/√2` and `b → (c − d)/√2`; a polarizing beam splitter on
//! each output feeds one H and one V detector. Detector indices: `cH = 0`,
//! `cV = 1`, `dH = 2`, `dV = 3`. Click patterns are 4-bit masks.
//!
//! The measurement succeeds iff exactly one H-labelled and one V-labelled
//! detector click. Both clicks behind the same beam-splitter output signal
//! `|ψ+⟩`; one click behind each output signals `|ψ-⟩`.

use rand::Rng;
use serde::{Deserialize, Serialize};

pub const C_H: u8 = 0;
pub const C_V: u8 = 1;
pub const D_H: u8 = 2;
pub const D_V: u8 = 3;

const H_MASK: u8 = (1 << C_H) | (1 << D_H);
const V_MASK: u8 = (1 << C_V) | (1 << D_V);

/// Real polarization amplitudes `(H, V)`; every BB84 state is real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polarization {
    pub h: f64,
    pub v: f64,
}

impl Polarization {
    pub const H: Polarization = Polarization { h: 1.0, v: 0.0 };
    pub const V: Polarization = Polarization { h: 0.0, v: 1.0 };
    pub const PLUS: Polarization = Polarization {
        h: std::f64::consts::FRAC_1_SQRT_2,
        v: std::f64::consts::FRAC_1_SQRT_2,
    };
    pub const MINUS: Polarization = Polarization {
        h: std::f64::consts::FRAC_1_SQRT_2,
        v: -std::f64::consts::FRAC_1_SQRT_2,
    };
}

/// Basis of a BB84 state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    /// The state that encodes `bit` in this basis (`H`/`+` for 1, `V`/`−` for 0).
    pub fn state(self, bit: bool) -> Polarization {
        match (self, bit) {
            (Basis::Z, true) => Polarization::H,
            (Basis::Z, false) => Polarization::V,
            (Basis::X, true) => Polarization::PLUS,
            (Basis::X, false) => Polarization::MINUS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellOutcome {
    /// `|ψ+⟩`: both clicks behind the same output port.
    SamePort,
    /// `|ψ-⟩`: one click behind each output port.
    CrossPort,
}

impl BellOutcome {
    /// Whether the two senders' bits are inferred equal for this outcome in `basis`.
    pub fn bits_equal(self, basis: Basis) -> bool {
        match basis {
            Basis::Z => false,
            Basis::X => self == BellOutcome::SamePort,
        }
    }
}

/// Classifies a click pattern.
pub fn classify(mask: u8) -> Option<BellOutcome> {
    if (mask & H_MASK).count_ones() != 1 || (mask & V_MASK).count_ones() != 1 {
        return None;
    }
    let same = mask == (1 << C_H) | (1 << C_V) || mask == (1 << D_H) | (1 << D_V);
    Some(if same {
        BellOutcome::SamePort
    } else {
        BellOutcome::CrossPort
    })
}

/// Distribution of the set of photon-occupied detectors as `(mask, probability)`.
pub fn photon_routing(a: Option<Polarization>, b: Option<Polarization>) -> Vec<(u8, f64)> {
    fn single(p: Polarization) -> Vec<(u8, f64)> {
        let (h, v) = (p.h * p.h / 2.0, p.v * p.v / 2.0);
        vec![(1 << C_H, h), (1 << C_V, v), (1 << D_H, h), (1 << D_V, v)]
    }
    match (a, b) {
        (None, None) => vec![(0, 1.0)],
        (Some(p), None) | (None, Some(p)) => single(p),
        (Some(u), Some(w)) => {
            let anti = u.h * w.v - u.v * w.h;
            let sym = u.h * w.v + u.v * w.h;
            let hh = (u.h * w.h).powi(2) / 2.0;
            let vv = (u.v * w.v).powi(2) / 2.0;
            vec![
                ((1 << C_H) | (1 << D_V), anti * anti / 4.0),
                ((1 << C_V) | (1 << D_H), anti * anti / 4.0),
                ((1 << C_H) | (1 << C_V), sym * sym / 4.0),
                ((1 << D_H) | (1 << D_V), sym * sym / 4.0),
                (1 << C_H, hh),
                (1 << D_H, hh),
                (1 << C_V, vv),
                (1 << D_V, vv),
            ]
        }
    }
}

/// Exact click-pattern distribution, indexed by mask, including independent
/// dark counts with probability `p_dc` per detector.
pub fn click_distribution(
    a: Option<Polarization>,
    b: Option<Polarization>,
    p_dc: f64,
) -> [f64; 16] {
    let mut out = [0.0; 16];
    for (occupied, p) in photon_routing(a, b) {
        if p == 0.0 {
            continue;
        }
        for dark in 0u8..16 {
            let n = dark.count_ones() as i32;
            let pd = p_dc.powi(n) * (1.0 - p_dc).powi(4 - n);
            out[(occupied | dark) as usize] += p * pd;
        }
    }
    out
}

/// Samples one click pattern.
pub fn sample_clicks<R: Rng + ?Sized>(
    rng: &mut R,
    a: Option<Polarization>,
    b: Option<Polarization>,
    p_dc: f64,
) -> u8 {
    let routing = photon_routing(a, b);
    let mut u: f64 = rng.random();
    let mut occupied = routing.last().map(|r| r.0).unwrap_or(0);
    for (mask, p) in &routing {
        if u < *p {
            occupied = *mask;
            break;
        }
        u -= p;
    }
    let mut dark = 0u8;
    if p_dc > 0.0 {
        for det in 0..4 {
            if rng.random::<f64>() < p_dc {
                dark |= 1 << det;
            }
        }
    }
    occupied | dark
}
