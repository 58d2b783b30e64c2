//! Trace generation: secrets, environment noise, leakage.
//!
//! Each scenario seed is split into three named sub-streams so that trace `i`
//! depends only on its index, never on `n_traces`: a longer run extends a
//! shorter one.

use crate::environment::{self, EnvSample};
use crate::error::Result;
use crate::leakage;
use crate::rng::{substream_seed, DeterministicRng};
use crate::scenario::{LeakModel, Scenario, SchemeParams, TraceSet};

/// Probability of secret 1.
pub const SECRET_P: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct Generated {
    pub traces: TraceSet,
    /// Operator applied after scheme-specific resolution.
    pub effective_leak: LeakModel,
    pub rates_clamped: bool,
}

pub fn generate(
    scenario: &Scenario,
    params: &SchemeParams,
    large_baseline: bool,
    clipping: bool,
) -> Result<Generated> {
    let n = scenario.n_traces;
    let effective_leak = scenario.leak_model.resolve(large_baseline);

    let mut secret_rng = DeterministicRng::from_seed(substream_seed(scenario.seed, "secrets"));
    let secrets = (0..n)
        .map(|_| secret_rng.bernoulli(SECRET_P))
        .collect::<Result<Vec<u8>>>()?;

    let mut env_rng = DeterministicRng::from_seed(substream_seed(scenario.seed, "environment"));
    let env = (0..n)
        .map(|_| environment::sample(scenario.environment, &mut env_rng, params))
        .collect::<Result<Vec<EnvSample>>>()?;

    let mut leak_rng = DeterministicRng::from_seed(substream_seed(scenario.seed, "leakage"));
    let injected = leakage::inject(
        &env,
        &secrets,
        &mut leak_rng,
        effective_leak,
        scenario.effective_alpha(),
        params,
        clipping,
    )?;

    Ok(Generated {
        traces: injected.traces,
        effective_leak,
        rates_clamped: injected.rates_clamped,
    })
}
