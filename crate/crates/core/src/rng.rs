//! Deterministic random source and the distribution samplers used by the
//! simulator.
//!
//! The bit generator is ChaCha8 seeded from a `u64`. Samplers are written
//! out here rather than taken from a distributions crate so that the stream
//! layout (how many raw draws each sample consumes) is fixed by this file
//! alone:
//!
//! * uniform: top 53 bits of one `u64`, in `[0, 1)`
//! * normal: Box–Muller, two uniforms per draw, cosine branch only
//! * exponential: inversion, one uniform
//! * Bernoulli: one uniform
//! * binomial: CDF inversion (one uniform) when the zero-count mass is
//!   representable, otherwise a sum of `n` Bernoulli draws

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::scenario::{Environment, LeakModel};

/// Generator identifier echoed into every results file.
pub const GENERATOR_NAME: &str = "chacha8-rand_chacha-0.9";

/// Smallest zero-count binomial mass for which inversion is used.
const INVERSION_FLOOR: f64 = 1e-280;

#[derive(Clone, Debug)]
pub struct DeterministicRng {
    inner: ChaCha8Rng,
}

impl DeterministicRng {
    pub fn from_seed(seed: u64) -> Self {
        DeterministicRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Seed, then discard `warmup` raw draws.
    pub fn with_warmup(seed: u64, warmup: u64) -> Self {
        let mut rng = Self::from_seed(seed);
        for _ in 0..warmup {
            rng.next_u64();
        }
        rng
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound` (Lemire's multiply-shift with rejection).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below() needs a positive bound");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = u128::from(self.next_u64()) * u128::from(bound);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Normal draw with the given standard deviation. `std = 0` yields `mean`.
    pub fn normal(&mut self, mean: f64, std: f64) -> Result<f64> {
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::parameter(
                "std",
                format!("must be finite and >= 0, got {std}"),
            ));
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        Ok(mean + std * z)
    }

    /// Exponential draw with the given mean.
    pub fn exponential(&mut self, mean: f64) -> Result<f64> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(Error::parameter(
                "mean",
                format!("exponential mean must be finite and > 0, got {mean}"),
            ));
        }
        let u = 1.0 - self.uniform();
        Ok(-mean * u.ln())
    }

    pub fn bernoulli(&mut self, p: f64) -> Result<u8> {
        check_probability(p)?;
        Ok(u8::from(self.uniform() < p))
    }

    pub fn binomial(&mut self, n: u64, p: f64) -> Result<u64> {
        check_probability(p)?;
        if n == 0 || p == 0.0 {
            return Ok(0);
        }
        if p == 1.0 {
            return Ok(n);
        }
        if p > 0.5 {
            return Ok(n - self.binomial_inner(n, 1.0 - p));
        }
        Ok(self.binomial_inner(n, p))
    }

    fn binomial_inner(&mut self, n: u64, p: f64) -> u64 {
        let q = 1.0 - p;
        let mut pmf = (n as f64 * q.ln()).exp();
        if pmf < INVERSION_FLOOR {
            return (0..n).map(|_| u64::from(self.uniform() < p)).sum();
        }
        let ratio = p / q;
        let u = self.uniform();
        let mut k = 0u64;
        let mut cdf = pmf;
        while u >= cdf && k < n {
            pmf *= ratio * (n - k) as f64 / (k + 1) as f64;
            k += 1;
            cdf += pmf;
        }
        k
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::parameter(
            "p",
            format!("probability must lie in [0, 1], got {p}"),
        ))
    }
}

/// 64-bit FNV-1a.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// SplitMix64 finaliser applied to `master ^ key`.
pub fn mix(master: u64, key: u64) -> u64 {
    let mut z = (master ^ key).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream seed for one scenario:
/// `mix(master, fnv1a("scheme\x1fenv\x1fleak\x1f" ++ alpha.to_bits().to_le_bytes()))`.
///
/// Only the scenario's own identity enters the hash, so editing a matrix
/// never moves another scenario's stream.
pub fn scenario_seed(
    master: u64,
    scheme_id: &str,
    environment: Environment,
    leak_model: LeakModel,
    alpha: f64,
) -> u64 {
    let mut key = Vec::with_capacity(scheme_id.len() + 32);
    for part in [scheme_id, environment.as_str(), leak_model.as_str()] {
        key.extend_from_slice(part.as_bytes());
        key.push(0x1f);
    }
    key.extend_from_slice(&alpha.to_bits().to_le_bytes());
    mix(master, stable_hash(&key))
}

/// Seed of a named sub-stream of a scenario (`secrets`, `environment`, ...).
pub fn substream_seed(scenario_seed: u64, name: &str) -> u64 {
    mix(scenario_seed, stable_hash(name.as_bytes()))
}

/// Master seed after an optional warm-up: with `warmup = 0` it is the
/// configured seed itself, otherwise the first draw after discarding
/// `warmup` outputs of the master stream.
pub fn effective_master_seed(master: u64, warmup: u64) -> u64 {
    if warmup == 0 {
        master
    } else {
        DeterministicRng::with_warmup(master, warmup).next_u64()
    }
}
