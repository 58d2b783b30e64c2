//! Two-class distinguishability statistics.
//!
//! All statistics are computed on sorted copies of the class samples, so a
//! result depends only on the two multisets and not on trace order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of equal-width histogram bins.
pub const DEFAULT_BINS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Descriptive {
    pub mean_0: f64,
    pub mean_1: f64,
    pub std_0: f64,
    pub std_1: f64,
    pub pooled_std: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelchT {
    /// `(mean_0 - mean_1) / sqrt(var_0/n_0 + var_1/n_1)`.
    pub t: f64,
    /// Both classes had zero variance.
    pub degenerate: bool,
}

fn require(sample: &[f64], class: u8, needed: usize) -> Result<()> {
    if sample.len() < needed {
        Err(Error::InsufficientData {
            class,
            count: sample.len(),
            needed,
        })
    } else {
        Ok(())
    }
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn mean_std(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let ss: f64 = sample.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Per-class mean and unbiased standard deviation, plus
/// `pooled = sqrt((std_0^2 + std_1^2) / 2)`.
pub fn descriptive(sample_0: &[f64], sample_1: &[f64]) -> Result<Descriptive> {
    require(sample_0, 0, 2)?;
    require(sample_1, 1, 2)?;
    Ok(descriptive_sorted(&sorted(sample_0), &sorted(sample_1)))
}

fn descriptive_sorted(a: &[f64], b: &[f64]) -> Descriptive {
    let (mean_0, std_0) = mean_std(a);
    let (mean_1, std_1) = mean_std(b);
    Descriptive {
        mean_0,
        mean_1,
        std_0,
        std_1,
        pooled_std: ((std_0 * std_0 + std_1 * std_1) / 2.0).sqrt(),
    }
}

pub fn welch_t(sample_0: &[f64], sample_1: &[f64]) -> Result<WelchT> {
    let d = descriptive(sample_0, sample_1)?;
    Ok(welch_from(&d, sample_0.len(), sample_1.len()))
}

fn welch_from(d: &Descriptive, n_0: usize, n_1: usize) -> WelchT {
    let gap = d.mean_0 - d.mean_1;
    let denom = (d.std_0 * d.std_0 / n_0 as f64 + d.std_1 * d.std_1 / n_1 as f64).sqrt();
    if denom > 0.0 {
        WelchT {
            t: gap / denom,
            degenerate: false,
        }
    } else {
        let t = if gap == 0.0 {
            0.0
        } else {
            gap.signum() * f64::INFINITY
        };
        WelchT {
            t,
            degenerate: true,
        }
    }
}

/// Exact two-sample Kolmogorov–Smirnov distance.
pub fn ks_distance(sample_0: &[f64], sample_1: &[f64]) -> Result<f64> {
    require(sample_0, 0, 1)?;
    require(sample_1, 1, 1)?;
    Ok(ks_sorted(&sorted(sample_0), &sorted(sample_1)))
}

fn ks_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        // Step past every copy of x in both samples before comparing CDFs.
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `Pr(t0 > t1) - Pr(t0 < t1)` over all cross-class pairs.
pub fn cliffs_delta(sample_0: &[f64], sample_1: &[f64]) -> Result<f64> {
    require(sample_0, 0, 1)?;
    require(sample_1, 1, 1)?;
    Ok(cliff_sorted(&sorted(sample_0), &sorted(sample_1)))
}

fn cliff_sorted(a: &[f64], b: &[f64]) -> f64 {
    // For each run of equal values in `a`, count the elements of `b` below and
    // above it with a single merge pass.
    let (mut greater, mut less) = (0u128, 0u128);
    let mut lo = 0usize; // b[..lo] < x
    let mut hi = 0usize; // b[..hi] <= x
    let mut i = 0usize;
    while i < a.len() {
        let x = a[i];
        let mut run = 0u128;
        while i < a.len() && a[i] == x {
            run += 1;
            i += 1;
        }
        while lo < b.len() && b[lo] < x {
            lo += 1;
        }
        hi = hi.max(lo);
        while hi < b.len() && b[hi] <= x {
            hi += 1;
        }
        greater += run * lo as u128;
        less += run * (b.len() - hi) as u128;
    }
    let pairs = a.len() as f64 * b.len() as f64;
    (greater as f64 - less as f64) / pairs
}

/// Both classes binned on one set of equal-width edges spanning the pooled
/// range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramPair {
    pub bin_edges: Vec<f64>,
    pub counts_0: Vec<u64>,
    pub counts_1: Vec<u64>,
    pub mass_0: Vec<f64>,
    pub mass_1: Vec<f64>,
}

impl HistogramPair {
    pub fn new(sample_0: &[f64], sample_1: &[f64], bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::parameter(
                "bins",
                format!("must be at least 2, got {bins}"),
            ));
        }
        require(sample_0, 0, 1)?;
        require(sample_1, 1, 1)?;
        Ok(Self::build(sample_0, sample_1, bins))
    }

    fn build(sample_0: &[f64], sample_1: &[f64], bins: usize) -> Self {
        let (lo, hi) = sample_0
            .iter()
            .chain(sample_1)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        // Constant timings occupy a single bin.
        let bins = if hi > lo { bins } else { 1 };
        let width = (hi - lo) / bins as f64;
        let mut bin_edges: Vec<f64> = (0..bins).map(|k| lo + k as f64 * width).collect();
        bin_edges.push(if hi > lo { hi } else { lo + 1.0 });

        let index = |x: f64| {
            if bins == 1 {
                0
            } else {
                (((x - lo) / width) as usize).min(bins - 1)
            }
        };
        let count = |sample: &[f64]| {
            let mut c = vec![0u64; bins];
            for &x in sample {
                c[index(x)] += 1;
            }
            c
        };
        let counts_0 = count(sample_0);
        let counts_1 = count(sample_1);
        let norm = |c: &[u64], n: usize| c.iter().map(|&k| k as f64 / n as f64).collect();
        HistogramPair {
            mass_0: norm(&counts_0, sample_0.len()),
            mass_1: norm(&counts_1, sample_1.len()),
            bin_edges,
            counts_0,
            counts_1,
        }
    }

    pub fn bins(&self) -> usize {
        self.counts_0.len()
    }

    /// Plug-in mutual information between class and bin, in bits, from the
    /// joint (class, bin) table.
    pub fn mutual_information(&self) -> f64 {
        let n_0: u64 = self.counts_0.iter().sum();
        let n_1: u64 = self.counts_1.iter().sum();
        let total = (n_0 + n_1) as f64;
        let mut mi = 0.0;
        for (&c0, &c1) in self.counts_0.iter().zip(&self.counts_1) {
            let col = (c0 + c1) as f64;
            for (c, n_s) in [(c0, n_0), (c1, n_1)] {
                if c > 0 {
                    let c = c as f64;
                    mi += c / total * (c * total / (n_s as f64 * col)).log2();
                }
            }
        }
        mi.max(0.0)
    }

    /// Histogram intersection of the per-class masses.
    /// Summed in integer counts so identical histograms give exactly 1.
    pub fn overlap(&self) -> f64 {
        let n_0: u64 = self.counts_0.iter().sum();
        let n_1: u64 = self.counts_1.iter().sum();
        let shared: u128 = self
            .counts_0
            .iter()
            .zip(&self.counts_1)
            .map(|(&a, &b)| (u128::from(a) * u128::from(n_1)).min(u128::from(b) * u128::from(n_0)))
            .sum();
        (shared as f64 / (u128::from(n_0) * u128::from(n_1)) as f64).min(1.0)
    }
}

pub fn binned_mi(sample_0: &[f64], sample_1: &[f64], bins: usize) -> Result<f64> {
    Ok(HistogramPair::new(sample_0, sample_1, bins)?.mutual_information())
}

pub fn overlap(sample_0: &[f64], sample_1: &[f64], bins: usize) -> Result<f64> {
    Ok(HistogramPair::new(sample_0, sample_1, bins)?.overlap())
}

/// Every statistic for one pair of class samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurements {
    pub n_0: usize,
    pub n_1: usize,
    pub descriptive: Descriptive,
    pub welch: WelchT,
    pub ks_d: f64,
    pub cliff_delta: f64,
    pub mi_bits: f64,
    pub overlap: f64,
}

impl Measurements {
    /// Requires at least two samples per class. The histogram is built once
    /// and shared by MI and overlap.
    pub fn compute(sample_0: &[f64], sample_1: &[f64], bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::parameter(
                "bins",
                format!("must be at least 2, got {bins}"),
            ));
        }
        require(sample_0, 0, 2)?;
        require(sample_1, 1, 2)?;
        let a = sorted(sample_0);
        let b = sorted(sample_1);
        let descriptive = descriptive_sorted(&a, &b);
        let hist = HistogramPair::build(&a, &b, bins);
        Ok(Measurements {
            n_0: a.len(),
            n_1: b.len(),
            welch: welch_from(&descriptive, a.len(), b.len()),
            descriptive,
            ks_d: ks_sorted(&a, &b),
            cliff_delta: cliff_sorted(&a, &b),
            mi_bits: hist.mutual_information(),
            overlap: hist.overlap(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn descriptive_examples() {
        let d = descriptive(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            (d.mean_0, d.mean_1, d.std_0, d.std_1, d.pooled_std),
            (2.0, 2.0, 1.0, 1.0, 1.0)
        );

        let d = descriptive(&[0.0, 0.0], &[4.0, 4.0]).unwrap();
        assert_eq!((d.std_0, d.std_1, d.pooled_std), (0.0, 0.0, 0.0));

        let d = descriptive(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0], &[0.0, 1.0]).unwrap();
        assert_eq!(d.mean_0, 5.0);
        assert!((d.std_0 - (32.0f64 / 7.0).sqrt()).abs() < EPS);
        assert!((d.std_0 - 2.138).abs() < 1e-3);
    }

    #[test]
    fn descriptive_names_the_short_class() {
        match descriptive(&[1.0, 2.0], &[3.0]) {
            Err(Error::InsufficientData {
                class: 1,
                count: 1,
                needed: 2,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match descriptive(&[], &[3.0, 4.0]) {
            Err(Error::InsufficientData { class: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn welch_examples() {
        let t = welch_t(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!((t.t + 1.0).abs() < EPS);
        assert_eq!(welch_t(&[1.0, 3.0], &[1.0, 3.0]).unwrap().t, 0.0);
    }

    #[test]
    fn welch_grows_with_sqrt_n() {
        // {9, 11} repeated: both classes have variance n/(n-1), so t = 1/sqrt(2 var / n).
        for reps in [5usize, 50, 500] {
            let a: Vec<f64> = (0..reps).flat_map(|_| [9.0, 11.0]).collect();
            let b: Vec<f64> = a.iter().map(|x| x - 1.0).collect();
            let n = a.len() as f64;
            let var = n / (n - 1.0);
            let expected = 1.0 / (2.0 * var / n).sqrt();
            let t = welch_t(&a, &b).unwrap().t;
            assert!((t - expected).abs() < 1e-9, "{t} vs {expected}");
        }
    }

    #[test]
    fn welch_degenerate_is_flagged() {
        let w = welch_t(&[1.0, 1.0], &[2.0, 2.0]).unwrap();
        assert!(w.degenerate);
        assert_eq!(w.t, f64::NEG_INFINITY);
        let w = welch_t(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!(w.degenerate);
        assert_eq!(w.t, 0.0);
    }

    #[test]
    fn ks_examples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_distance(&a, &[10.0, 11.0, 12.0]).unwrap(), 1.0);
        assert_eq!(
            ks_distance(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0, 5.0, 6.0]).unwrap(),
            0.5
        );
        assert!(ks_distance(&[], &a).is_err());
    }

    #[test]
    fn ks_handles_ties() {
        // F0 jumps to 1 at 1; F1 is 1/2 at 1. Evaluating mid-tie would give 1.
        assert_eq!(ks_distance(&[1.0, 1.0], &[1.0, 2.0]).unwrap(), 0.5);
    }

    #[test]
    fn cliff_examples() {
        assert_eq!(cliffs_delta(&[5.0], &[5.0]).unwrap(), 0.0);
        assert_eq!(cliffs_delta(&[10.0, 11.0], &[1.0, 2.0]).unwrap(), 1.0);
        let d = cliffs_delta(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((d - (1.0 - 6.0) / 9.0).abs() < EPS);
        assert!(cliffs_delta(&[1.0], &[]).is_err());
    }

    #[test]
    fn mi_examples() {
        let a = [1.0, 4.0, 9.0];
        assert_eq!(binned_mi(&a, &a, 8).unwrap(), 0.0);
        assert!((binned_mi(&[1.0, 1.0], &[9.0, 9.0], 4).unwrap() - 1.0).abs() < EPS);
        let mi = binned_mi(&[1.0, 1.0, 9.0], &[1.0, 9.0, 9.0], 2).unwrap();
        let expected =
            2.0 * (1.0 / 3.0) * (4.0f64 / 3.0).log2() + 2.0 * (1.0 / 6.0) * (2.0f64 / 3.0).log2();
        assert!((mi - expected).abs() < 1e-9);
        assert!((mi - 0.0817).abs() < 1e-4);
    }

    #[test]
    fn overlap_examples() {
        let a = [1.0, 4.0, 9.0];
        assert_eq!(overlap(&a, &a, 16).unwrap(), 1.0);
        assert_eq!(overlap(&[1.0, 2.0], &[10.0, 11.0], 4).unwrap(), 0.0);
        let o = overlap(&[1.0, 1.0, 9.0], &[1.0, 9.0, 9.0], 2).unwrap();
        assert!((o - 2.0 / 3.0).abs() < EPS);
    }

    #[test]
    fn constant_timings_use_one_bin() {
        let h = HistogramPair::new(&[3.0, 3.0], &[3.0, 3.0, 3.0], 64).unwrap();
        assert_eq!(h.bins(), 1);
        assert_eq!(h.mutual_information(), 0.0);
        assert_eq!(h.overlap(), 1.0);
    }

    #[test]
    fn histogram_invariants() {
        let a: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin() * 50.0).collect();
        let b: Vec<f64> = (0..77)
            .map(|i| (i as f64 * 0.11).cos() * 80.0 + 10.0)
            .collect();
        let h = HistogramPair::new(&a, &b, 64).unwrap();
        assert_eq!(h.bin_edges.len(), 65);
        assert!(h.bin_edges.windows(2).all(|w| w[0] < w[1]));
        assert!((h.mass_0.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((h.mass_1.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bins_below_two_rejected() {
        assert!(binned_mi(&[1.0], &[2.0], 1).is_err());
        assert!(overlap(&[1.0], &[2.0], 0).is_err());
    }

    #[test]
    fn measurements_need_two_per_class() {
        assert!(Measurements::compute(&[1.0, 2.0, 3.0], &[4.0], 64).is_err());
    }
}
