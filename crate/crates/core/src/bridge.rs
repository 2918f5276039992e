//! Modified Brownian bridge sampling between consecutive observations, plus
//! exact Gaussian bridge moments used as test oracles.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{EmlError, Result};
use crate::model::{ou_transition_coeffs, ObservationSeries};
use crate::rng::{self, PathRng};

/// Lattice layout: `m` subintervals per observation gap, `s` paths per gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeConfig {
    pub m: usize,
    pub s: usize,
    pub seed: u64,
    /// Clamp lattice states to `domain_lower + ε` before basis evaluation.
    pub clamp_to_domain: Option<f64>,
}

impl BridgeConfig {
    pub fn new(m: usize, s: usize, seed: u64) -> Result<Self> {
        if m == 0 || s == 0 {
            return Err(EmlError::InvalidArgument(format!("bridge config needs M ≥ 1 and S ≥ 1 (got M={m}, S={s})")));
        }
        Ok(Self { m, s, seed, clamp_to_domain: None })
    }

    pub fn with_clamp(mut self, eps: f64) -> Self {
        self.clamp_to_domain = Some(eps);
        self
    }

    /// `δ = Δ / M`.
    pub fn step(&self, delta_obs: f64) -> f64 {
        delta_obs / self.m as f64
    }

    /// Generator for path `s` of interval `k`.
    pub fn path_rng(&self, k: usize, s: usize) -> PathRng {
        rng::substream(self.seed, &[rng::tag::BRIDGE, k as u64, s as u64])
    }
}

/// One step of the modified Brownian bridge recursion
///
/// ```text
/// u_{m+1} = u_m + (u_M − u_m)/(M − m) + √((M − m − 1)/(M − m)) · √δ · z
/// ```
///
/// The final step returns `u_M` itself so that endpoints are pinned exactly.
pub fn mbb_step(u_m: f64, u_end: f64, m: usize, steps: usize, delta: f64, z: f64) -> Result<f64> {
    if m >= steps {
        return Err(EmlError::InvalidArgument(format!("bridge step index {m} must be below M = {steps}")));
    }
    if !(delta > 0.0) {
        return Err(EmlError::InvalidArgument(format!("bridge step length must be positive, got {delta}")));
    }
    Ok(mbb_step_unchecked(u_m, u_end, m, steps, delta.sqrt(), z))
}

#[inline]
fn mbb_step_unchecked(u_m: f64, u_end: f64, m: usize, steps: usize, sqrt_delta: f64, z: f64) -> f64 {
    let left = (steps - m) as f64;
    if steps - m == 1 {
        return u_end;
    }
    u_m + (u_end - u_m) / left + ((left - 1.0) / left).sqrt() * sqrt_delta * z
}

/// Writes a bridge from `x` to `y` into `buf` (length `M + 1`), drawing
/// exactly `M − 1` normals.
pub fn fill_bridge_path<R: Rng + ?Sized>(x: f64, y: f64, delta: f64, rng: &mut R, buf: &mut [f64]) {
    let steps = buf.len() - 1;
    let sqrt_delta = delta.sqrt();
    buf[0] = x;
    for m in 0..steps - 1 {
        let z: f64 = rng.sample(StandardNormal);
        buf[m + 1] = mbb_step_unchecked(buf[m], y, m, steps, sqrt_delta, z);
    }
    buf[steps] = y;
}

pub fn sample_bridge_path<R: Rng + ?Sized>(x: f64, y: f64, steps: usize, delta: f64, rng: &mut R) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(EmlError::InvalidArgument("bridge needs M ≥ 1".into()));
    }
    let mut buf = vec![0.0; steps + 1];
    fill_bridge_path(x, y, delta, rng, &mut buf);
    Ok(buf)
}

/// Dense store of `K · S` bridge paths of `M + 1` points each.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeLattice {
    values: Vec<f64>,
    intervals: usize,
    pub config: BridgeConfig,
    /// Observation spacing `Δ` of the source series.
    pub delta_obs: f64,
}

impl BridgeLattice {
    /// Wraps an explicit set of paths (interval-major, then path, then step).
    pub fn from_values(values: Vec<f64>, intervals: usize, config: BridgeConfig, delta_obs: f64) -> Result<Self> {
        if values.len() != intervals * config.s * (config.m + 1) {
            return Err(EmlError::InvalidArgument(format!(
                "lattice needs {} values, got {}",
                intervals * config.s * (config.m + 1),
                values.len()
            )));
        }
        Ok(Self { values, intervals, config, delta_obs })
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Path `s` of interval `k` (both zero-based); `M + 1` values.
    pub fn path(&self, k: usize, s: usize) -> &[f64] {
        let len = self.config.m + 1;
        let start = (k * self.config.s + s) * len;
        &self.values[start..start + len]
    }

    pub fn get(&self, k: usize, s: usize, m: usize) -> f64 {
        self.path(k, s)[m]
    }

    /// Every path of interval `k`, back to back.
    pub fn interval(&self, k: usize) -> &[f64] {
        let len = self.config.s * (self.config.m + 1);
        &self.values[k * len..(k + 1) * len]
    }

    /// `k,s,m,u` dump (zero-based indices).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,s,m,u\n");
        for k in 0..self.intervals {
            for s in 0..self.config.s {
                for (m, u) in self.path(k, s).iter().enumerate() {
                    out.push_str(&format!("{k},{s},{m},{u}\n"));
                }
            }
        }
        out
    }
}

/// Samples every bridge path. Path `(k, s)` has its own substream, so the
/// result does not depend on scheduling.
pub fn build_lattice(series: &ObservationSeries, config: BridgeConfig) -> BridgeLattice {
    let intervals = series.intervals();
    let len = config.m + 1;
    let delta = config.step(series.delta);
    let mut values = vec![0.0; intervals * config.s * len];
    values
        .par_chunks_mut(config.s * len)
        .enumerate()
        .for_each(|(k, chunk)| {
            let (x, y) = (series.x[k], series.x[k + 1]);
            for (s, buf) in chunk.chunks_mut(len).enumerate() {
                fill_bridge_path(x, y, delta, &mut config.path_rng(k, s), buf);
            }
        });
    BridgeLattice { values, intervals, config, delta_obs: series.delta }
}

/// Marginal law of a Brownian bridge from `x` at 0 to `y` at `Δ`, at time `t`.
pub fn bb_marginal_moments(x: f64, y: f64, delta_obs: f64, t: f64) -> Result<(f64, f64)> {
    if !(0.0..=delta_obs).contains(&t) {
        return Err(EmlError::InvalidArgument(format!("time {t} outside [0, {delta_obs}]")));
    }
    Ok((x + t / delta_obs * (y - x), t * (delta_obs - t) / delta_obs))
}

/// Marginal of the OU bridge (`dX = (a₀ − a₁X) dt + dW`, `X₀ = x`, `X_Δ = y`) at `t`.
pub fn ou_bridge_moments(a0: f64, a1: f64, x: f64, y: f64, delta_obs: f64, t: f64) -> Result<(f64, f64)> {
    if !(delta_obs > 0.0) || !(0.0..=delta_obs).contains(&t) {
        return Err(EmlError::InvalidArgument(format!("time {t} outside [0, {delta_obs}]")));
    }
    if t == 0.0 {
        return Ok((x, 0.0));
    }
    if t == delta_obs {
        return Ok((y, 0.0));
    }
    Ok(condition_on_endpoint(a0, a1, x, y, t, delta_obs - t))
}

/// Law of `X_t` given `X_0 = x` and `X_{t+rest} = y`.
#[inline]
fn condition_on_endpoint(a0: f64, a1: f64, x: f64, y: f64, t: f64, rest: f64) -> (f64, f64) {
    let fwd = ou_transition_coeffs(a0, a1, t);
    let back = ou_transition_coeffs(a0, a1, rest);
    let prec = 1.0 / fwd.var + back.beta * back.beta / back.var;
    let var = 1.0 / prec;
    let mean = var * (fwd.mean(x) / fwd.var + back.beta * (y - back.shift) / back.var);
    (mean, var)
}

/// Exact OU bridge on the `M`-lattice, drawn step by step from the
/// conditional normals. Draws `M − 1` normals.
pub fn sample_ou_bridge_path<R: Rng + ?Sized>(
    a0: f64,
    a1: f64,
    x: f64,
    y: f64,
    delta_obs: f64,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if steps == 0 || !(delta_obs > 0.0) {
        return Err(EmlError::InvalidArgument("OU bridge needs M ≥ 1 and Δ > 0".into()));
    }
    let mut buf = vec![0.0; steps + 1];
    fill_ou_bridge_path(a0, a1, x, y, delta_obs, rng, &mut buf);
    Ok(buf)
}

pub fn fill_ou_bridge_path<R: Rng + ?Sized>(a0: f64, a1: f64, x: f64, y: f64, delta_obs: f64, rng: &mut R, buf: &mut [f64]) {
    let steps = buf.len() - 1;
    let delta = delta_obs / steps as f64;
    buf[0] = x;
    for m in 0..steps - 1 {
        let rest = (steps - m - 1) as f64 * delta;
        let (mean, var) = condition_on_endpoint(a0, a1, buf[m], y, delta, rest);
        let z: f64 = rng.sample(StandardNormal);
        buf[m + 1] = mean + var.sqrt() * z;
    }
    buf[steps] = y;
}
