//! Environment noise regimes applied to the baseline cost B.
//!
//! Every regime has the form `B(1 + eps) + additive terms`; leakage is added
//! afterwards and clipping happens only once, in [`crate::leakage::inject`].
//! Normal parameters are standard deviations and exponential parameters are
//! means, both in cycles.

use crate::error::{Error, Result};
use crate::rng::DeterministicRng;
use crate::scenario::{Environment, SchemeParams};

/// Drift inflation for the jitter regime.
pub const JITTER_DRIFT_SCALE: f64 = 1.5;
/// Drift inflation for the loaded regime.
pub const LOADED_DRIFT_SCALE: f64 = 2.0;
/// Additive noise inflation for the loaded regime.
pub const LOADED_NOISE_SCALE: f64 = 2.5;

/// One environment-perturbed timing and its components.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnvSample {
    pub env_time: f64,
    /// Relative drift eps.
    pub drift: f64,
    /// Unstructured Gaussian noise n.
    pub additive_noise: f64,
    /// Summed block jitter (jitter regime only).
    pub jitter: f64,
    /// Exponential queueing delay q (loaded regime only).
    pub queue_delay: f64,
    /// Interrupt delay d = I * u (loaded regime only).
    pub structured_delay: f64,
}

pub fn idle(rng: &mut DeterministicRng, params: &SchemeParams) -> Result<EnvSample> {
    let b = params.baseline_cycles;
    let drift = rng.normal(0.0, params.sigma_dvfs)?;
    let noise = rng.normal(0.0, params.sigma_idle)?;
    Ok(EnvSample {
        env_time: b * (1.0 + drift) + noise,
        drift,
        additive_noise: noise,
        ..EnvSample::default()
    })
}

pub fn jitter(rng: &mut DeterministicRng, params: &SchemeParams) -> Result<EnvSample> {
    if params.n_blocks == 0 {
        return Err(Error::parameter("n_blocks", "must be at least 1"));
    }
    let b = params.baseline_cycles;
    let drift = rng.normal(0.0, JITTER_DRIFT_SCALE * params.sigma_dvfs)?;
    let block_std = params.sigma_jitter / f64::from(params.n_blocks).sqrt();
    let mut total = 0.0;
    for _ in 0..params.n_blocks {
        total += rng.normal(0.0, block_std)?;
    }
    Ok(EnvSample {
        env_time: b * (1.0 + drift) + total,
        drift,
        jitter: total,
        ..EnvSample::default()
    })
}

pub fn loaded(rng: &mut DeterministicRng, params: &SchemeParams) -> Result<EnvSample> {
    let b = params.baseline_cycles;
    let drift = rng.normal(0.0, LOADED_DRIFT_SCALE * params.sigma_dvfs)?;
    let noise = rng.normal(0.0, LOADED_NOISE_SCALE * params.sigma_idle)?;
    let queue = rng.exponential(params.exp_queue_mean)?;
    let interrupted = rng.bernoulli(params.interrupt_prob)?;
    // u is drawn whether or not the interrupt fires so the stream layout is fixed.
    let service = rng.exponential(params.exp_interrupt_mean)?;
    let delay = f64::from(interrupted) * service;
    Ok(EnvSample {
        env_time: b * (1.0 + drift) + queue + delay + noise,
        drift,
        additive_noise: noise,
        queue_delay: queue,
        structured_delay: delay,
        ..EnvSample::default()
    })
}

pub fn sample(
    environment: Environment,
    rng: &mut DeterministicRng,
    params: &SchemeParams,
) -> Result<EnvSample> {
    match environment {
        Environment::Idle => idle(rng, params),
        Environment::Jitter => jitter(rng, params),
        Environment::Loaded => loaded(rng, params),
    }
}
