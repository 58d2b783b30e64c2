//! TLRI composite score.
//!
//! ```text
//! raw  = w_snr SNR + w_ks D + w_cliff |delta| + w_sep (1 - overlap) + w_mi min(1, MI / cap)
//! TLRI = 1 / (1 + exp(-(raw - shift)))
//! ```

use serde::{Deserialize, Serialize};

/// Value reported for the SNR proxy when the pooled deviation is zero but the
/// class means differ.
pub const SNR_SENTINEL: f64 = 1e6;

/// Largest `f64` below 1; TLRI is kept inside the open unit interval.
const TLRI_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TlriWeights {
    pub snr: f64,
    pub ks: f64,
    pub cliff: f64,
    pub separation: f64,
    pub mi: f64,
    /// MI (bits) at which the scaled MI term saturates.
    pub mi_cap: f64,
    pub logistic_shift: f64,
}

impl Default for TlriWeights {
    fn default() -> Self {
        TlriWeights {
            snr: 0.9,
            ks: 1.3,
            cliff: 1.1,
            separation: 1.2,
            mi: 0.9,
            mi_cap: 0.5,
            logistic_shift: 1.5,
        }
    }
}

impl TlriWeights {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, w) in [
            ("weights.snr", self.snr),
            ("weights.ks", self.ks),
            ("weights.cliff", self.cliff),
            ("weights.separation", self.separation),
            ("weights.mi", self.mi),
        ] {
            if !(w.is_finite() && w >= 0.0) {
                out.push(format!("{name}: must be finite and >= 0, got {w}"));
            }
        }
        if !(self.mi_cap.is_finite() && self.mi_cap > 0.0) {
            out.push(format!(
                "weights.mi_cap: must be finite and > 0, got {}",
                self.mi_cap
            ));
        }
        if !self.logistic_shift.is_finite() {
            out.push("weights.logistic_shift: must be finite".to_string());
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snr {
    pub value: f64,
    pub degenerate: bool,
}

/// `|mean_0 - mean_1| / pooled_std`.
pub fn snr_proxy(mean_0: f64, mean_1: f64, pooled_std: f64) -> Snr {
    let gap = (mean_0 - mean_1).abs();
    if pooled_std > 0.0 {
        Snr {
            value: gap / pooled_std,
            degenerate: false,
        }
    } else if gap == 0.0 {
        Snr {
            value: 0.0,
            degenerate: false,
        }
    } else {
        Snr {
            value: SNR_SENTINEL,
            degenerate: true,
        }
    }
}

pub fn mi_scaled(mi_bits: f64, mi_cap: f64) -> f64 {
    (mi_bits / mi_cap).min(1.0)
}

/// Normalised evidence fed into the raw score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Components {
    pub snr: f64,
    pub ks_d: f64,
    pub cliff_delta: f64,
    pub overlap: f64,
    pub mi_bits: f64,
}

pub fn logistic(raw: f64, shift: f64) -> f64 {
    (1.0 / (1.0 + (-(raw - shift)).exp())).clamp(f64::MIN_POSITIVE, TLRI_MAX)
}

/// Returns `(raw, tlri)`.
pub fn tlri(c: &Components, w: &TlriWeights) -> (f64, f64) {
    let raw = w.snr * c.snr
        + w.ks * c.ks_d
        + w.cliff * c.cliff_delta.abs()
        + w.separation * (1.0 - c.overlap)
        + w.mi * mi_scaled(c.mi_bits, w.mi_cap);
    (raw, logistic(raw, w.logistic_shift))
}
