use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::Measurements;
use crate::scenario::{partition, TraceSet};
use crate::scoring::{self, Components, TlriWeights};

/// All statistics and the composite score for one trace set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n_0: usize,
    pub n_1: usize,
    pub mean_0: f64,
    pub mean_1: f64,
    pub std_0: f64,
    pub std_1: f64,
    pub pooled_std: f64,
    pub welch_t: f64,
    pub ks_d: f64,
    pub cliff_delta: f64,
    pub mi_bits: f64,
    pub overlap: f64,
    pub snr: f64,
    pub raw_score: f64,
    pub tlri: f64,
    /// Zero variance in both classes; Welch t and/or SNR carry sentinels.
    pub degenerate: bool,
}

impl MetricReport {
    pub fn compute(traces: &TraceSet, bins: usize, weights: &TlriWeights) -> Result<Self> {
        let (sample_0, sample_1) = partition(traces);
        let m = Measurements::compute(&sample_0, &sample_1, bins)?;
        Ok(Self::from_measurements(&m, weights))
    }

    pub fn from_measurements(m: &Measurements, weights: &TlriWeights) -> Self {
        let d = &m.descriptive;
        let snr = scoring::snr_proxy(d.mean_0, d.mean_1, d.pooled_std);
        let (raw_score, tlri) = scoring::tlri(
            &Components {
                snr: snr.value,
                ks_d: m.ks_d,
                cliff_delta: m.cliff_delta,
                overlap: m.overlap,
                mi_bits: m.mi_bits,
            },
            weights,
        );
        MetricReport {
            n_0: m.n_0,
            n_1: m.n_1,
            mean_0: d.mean_0,
            mean_1: d.mean_1,
            std_0: d.std_0,
            std_1: d.std_1,
            pooled_std: d.pooled_std,
            welch_t: m.welch.t,
            ks_d: m.ks_d,
            cliff_delta: m.cliff_delta,
            mi_bits: m.mi_bits,
            overlap: m.overlap,
            snr: snr.value,
            raw_score,
            tlri,
            degenerate: m.welch.degenerate || snr.degenerate,
        }
    }

    /// Range violations of the report fields, empty when all hold.
    pub fn range_violations(&self, bins: usize) -> Vec<String> {
        let mut out = Vec::new();
        let mi_max = 1.0f64.min((bins as f64).log2());
        let checks = [
            ("ks_d", (0.0..=1.0).contains(&self.ks_d)),
            ("overlap", (0.0..=1.0).contains(&self.overlap)),
            ("cliff_delta", self.cliff_delta.abs() <= 1.0),
            (
                "mi_bits",
                self.mi_bits >= 0.0 && self.mi_bits <= mi_max + 1e-12,
            ),
            ("tlri", self.tlri > 0.0 && self.tlri < 1.0),
            ("std_0", self.std_0 >= 0.0),
            ("std_1", self.std_1 >= 0.0),
            ("snr", self.snr >= 0.0),
        ];
        for (name, ok) in checks {
            if !ok {
                out.push(name.to_string());
            }
        }
        out
    }
}
