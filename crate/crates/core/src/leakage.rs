//! Secret-dependent timing terms added on top of environment noise.

use log::warn;

use crate::environment::EnvSample;
use crate::error::{Error, Result};
use crate::rng::DeterministicRng;
use crate::scenario::{LeakModel, SchemeParams, TraceSet};

/// Relative increase of the slow-event rate for secret 1.
pub const DIV_RATE_UP: f64 = 0.6;
/// Relative decrease of the slow-event rate for secret 0.
pub const DIV_RATE_DOWN: f64 = 0.3;
/// Per-trace cost noise std, as a fraction of the per-event cost `alpha * c`.
pub const DIV_COST_NOISE: f64 = 0.25;
/// Per-trace penalty noise std, as a fraction of the miss penalty P.
pub const CACHE_PENALTY_NOISE: f64 = 0.15;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LeakDraw {
    pub delta: f64,
    /// Slow events or cache misses, for the event-count models.
    pub event_count: Option<u64>,
}

/// Class event probabilities `(class 0, class 1)` and whether either was clamped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassRates {
    pub rate_0: f64,
    pub rate_1: f64,
    pub clamped: bool,
}

impl ClassRates {
    pub fn for_secret(&self, secret: u8) -> f64 {
        if secret == 1 {
            self.rate_1
        } else {
            self.rate_0
        }
    }
}

fn clamp_unit(x: f64) -> (f64, bool) {
    let c = x.clamp(0.0, 1.0);
    (c, c != x)
}

/// `rho(1) = rho0 (1 + 0.6 alpha)`, `rho(0) = rho0 (1 - 0.3 alpha)`, clamped to [0, 1].
pub fn div_rates(alpha: f64, base_rate: f64) -> ClassRates {
    let (rate_1, c1) = clamp_unit(base_rate * (1.0 + DIV_RATE_UP * alpha));
    let (rate_0, c0) = clamp_unit(base_rate * (1.0 - DIV_RATE_DOWN * alpha));
    ClassRates {
        rate_0,
        rate_1,
        clamped: c0 || c1,
    }
}

/// `pi(1) = pi0 + alpha dpi` (capped at 1), `pi(0) = max(0, pi0 - alpha dpi)`.
pub fn cache_rates(alpha: f64, base_miss: f64, miss_shift: f64) -> ClassRates {
    let (rate_1, clamped) = clamp_unit(base_miss + alpha * miss_shift);
    let rate_0 = (base_miss - alpha * miss_shift).max(0.0);
    ClassRates {
        rate_0,
        rate_1,
        clamped,
    }
}

/// `+alpha delta` for secret 1, `-alpha delta` for secret 0.
pub fn signed_shift(secret: u8, alpha: f64, delta_cycles: f64) -> f64 {
    let shift = alpha * delta_cycles;
    if secret == 1 {
        shift
    } else {
        -shift
    }
}

/// Division-latency leakage: `E ~ Binomial(L, rho(s))`, `delta = E (alpha c + eta)`
/// with one `eta ~ N(0, 0.25 alpha c)` per trace.
pub fn div_latency(
    rng: &mut DeterministicRng,
    secret: u8,
    alpha: f64,
    params: &SchemeParams,
) -> Result<LeakDraw> {
    let rates = div_rates(alpha, params.div_base_rate);
    div_latency_with(rng, secret, alpha, params, &rates)
}

fn div_latency_with(
    rng: &mut DeterministicRng,
    secret: u8,
    alpha: f64,
    params: &SchemeParams,
    rates: &ClassRates,
) -> Result<LeakDraw> {
    let events = rng.binomial(params.div_opportunities, rates.for_secret(secret))?;
    let cost = alpha * params.div_cost;
    let eta = rng.normal(0.0, DIV_COST_NOISE * cost)?;
    Ok(LeakDraw {
        delta: events as f64 * (cost + eta),
        event_count: Some(events),
    })
}

/// Cache-index leakage: `M ~ Binomial(L', pi(s))`, `delta = M (P + xi)` with
/// one `xi ~ N(0, 0.15 P)` per trace.
pub fn cache_index(
    rng: &mut DeterministicRng,
    secret: u8,
    alpha: f64,
    params: &SchemeParams,
) -> Result<LeakDraw> {
    let rates = cache_rates(alpha, params.cache_base_miss, params.cache_miss_shift);
    cache_index_with(rng, secret, params, &rates)
}

fn cache_index_with(
    rng: &mut DeterministicRng,
    secret: u8,
    params: &SchemeParams,
    rates: &ClassRates,
) -> Result<LeakDraw> {
    let misses = rng.binomial(params.cache_accesses, rates.for_secret(secret))?;
    let xi = rng.normal(0.0, CACHE_PENALTY_NOISE * params.cache_penalty)?;
    Ok(LeakDraw {
        delta: misses as f64 * (params.cache_penalty + xi),
        event_count: Some(misses),
    })
}

/// Result of [`inject`]; `rates_clamped` reports a clamped event probability.
#[derive(Clone, Debug)]
pub struct Injected {
    pub traces: TraceSet,
    pub rates_clamped: bool,
}

/// Add the leak term to every environment timing and clip at zero when
/// `clipping` is set. With [`LeakModel::None`] the timings pass through.
pub fn inject(
    env: &[EnvSample],
    secrets: &[u8],
    rng: &mut DeterministicRng,
    model: LeakModel,
    alpha: f64,
    params: &SchemeParams,
    clipping: bool,
) -> Result<Injected> {
    if env.len() != secrets.len() {
        return Err(Error::parameter(
            "traces",
            format!(
                "{} environment samples for {} secrets",
                env.len(),
                secrets.len()
            ),
        ));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::parameter(
            "alpha",
            format!("must be finite and >= 0, got {alpha}"),
        ));
    }
    let rates = match model {
        LeakModel::DivLatency => Some(div_rates(alpha, params.div_base_rate)),
        LeakModel::CacheIndex => Some(cache_rates(
            alpha,
            params.cache_base_miss,
            params.cache_miss_shift,
        )),
        _ => None,
    };
    let rates_clamped = rates.is_some_and(|r| r.clamped);
    if rates_clamped {
        warn!("{model} event probability clamped to [0, 1] at alpha = {alpha}");
    }

    let mut timings = Vec::with_capacity(env.len());
    for (sample, &secret) in env.iter().zip(secrets) {
        let delta = match (model, &rates) {
            (LeakModel::None, _) => 0.0,
            (LeakModel::Branch, _) => signed_shift(secret, alpha, params.branch_delta),
            (LeakModel::MemcmpEarly, _) => signed_shift(secret, alpha, params.memcmp_delta),
            (LeakModel::BigBranch, _) => signed_shift(secret, alpha, params.big_branch_delta),
            (LeakModel::DivLatency, Some(r)) => {
                div_latency_with(rng, secret, alpha, params, r)?.delta
            }
            (LeakModel::CacheIndex, Some(r)) => cache_index_with(rng, secret, params, r)?.delta,
            (_, None) => unreachable!("event models always carry rates"),
        };
        let t = if model == LeakModel::None {
            sample.env_time
        } else {
            sample.env_time + delta
        };
        timings.push(if clipping { t.max(0.0) } else { t });
    }
    Ok(Injected {
        traces: TraceSet::new(secrets.to_vec(), timings)?,
        rates_clamped,
    })
}
