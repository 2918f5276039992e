use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{EmlError, Result};

use super::{ObservationSeries, Theta, UnitDiffusionModel};

/// Redraws allowed for one Euler increment that would leave the state domain.
pub const MAX_DOMAIN_REDRAWS: usize = 100;

/// Euler–Maruyama path recorded on the coarse grid.
///
/// Each of the `k` observation steps of length `delta` is split into
/// `substeps` increments. An increment that would leave the model domain is
/// redrawn up to [`MAX_DOMAIN_REDRAWS`] times before giving up.
pub fn euler_simulate<R: Rng + ?Sized>(
    model: &UnitDiffusionModel,
    theta: &Theta,
    x0: f64,
    delta: f64,
    k: usize,
    substeps: usize,
    rng: &mut R,
) -> Result<ObservationSeries> {
    model.check_theta(theta)?;
    if substeps == 0 || k == 0 {
        return Err(EmlError::InvalidArgument("k and substeps must be at least 1".into()));
    }
    if !model.in_domain(x0) {
        return Err(EmlError::OutsideDomain { value: x0, lower: model.domain_lower.unwrap_or(f64::NEG_INFINITY) });
    }
    let th = theta.as_slice();
    let h = delta / substeps as f64;
    let sqrt_h = h.sqrt();
    let mut out = Vec::with_capacity(k + 1);
    let mut x = x0;
    out.push(x);
    for step in 0..k * substeps {
        let mean = x + model.drift(th, x) * h;
        let mut attempts = 0;
        let next = loop {
            let z: f64 = rng.sample(StandardNormal);
            let cand = mean + sqrt_h * z;
            if !cand.is_finite() {
                return Err(EmlError::PathDiverged { step });
            }
            if model.in_domain(cand) {
                break cand;
            }
            attempts += 1;
            if attempts > MAX_DOMAIN_REDRAWS {
                return Err(EmlError::DomainExit { step, attempts: MAX_DOMAIN_REDRAWS });
            }
        };
        x = next;
        if (step + 1) % substeps == 0 {
            out.push(x);
        }
    }
    ObservationSeries::new(out, delta, 0.0)
}

/// Exact Gaussian transition of `dX = (a₀ − a₁X) dt + dW` over `tau`:
/// `X_τ | X_0 = x ~ N(beta·x + shift, var)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuTransition {
    pub beta: f64,
    pub shift: f64,
    pub var: f64,
}

impl OuTransition {
    #[inline]
    pub fn mean(&self, x: f64) -> f64 {
        self.beta * x + self.shift
    }
}

/// Below this value of `|a₁|τ` the Brownian-with-drift limit is used.
const OU_LIMIT_THRESHOLD: f64 = 1e-8;

pub fn ou_transition_coeffs(a0: f64, a1: f64, tau: f64) -> OuTransition {
    if (a1 * tau).abs() < OU_LIMIT_THRESHOLD {
        return OuTransition { beta: 1.0, shift: a0 * tau, var: tau };
    }
    let one_minus_beta = -(-a1 * tau).exp_m1();
    OuTransition {
        beta: 1.0 - one_minus_beta,
        shift: a0 / a1 * one_minus_beta,
        var: -(-2.0 * a1 * tau).exp_m1() / (2.0 * a1),
    }
}

/// Mean and variance of `X_δ` given `X_0 = x`.
pub fn ou_exact_transition(a0: f64, a1: f64, x: f64, delta: f64) -> (f64, f64) {
    let t = ou_transition_coeffs(a0, a1, delta);
    (t.mean(x), t.var)
}

pub fn ou_exact_sample<R: Rng + ?Sized>(a0: f64, a1: f64, x: f64, delta: f64, rng: &mut R) -> f64 {
    let (m, v) = ou_exact_transition(a0, a1, x, delta);
    let z: f64 = rng.sample(StandardNormal);
    m + v.sqrt() * z
}

/// `k` exact OU steps of length `delta` starting from `x0`.
pub fn ou_exact_simulate<R: Rng + ?Sized>(
    a0: f64,
    a1: f64,
    x0: f64,
    delta: f64,
    k: usize,
    rng: &mut R,
) -> Result<ObservationSeries> {
    let t = ou_transition_coeffs(a0, a1, delta);
    let sd = t.var.sqrt();
    let mut x = Vec::with_capacity(k + 1);
    x.push(x0);
    for i in 0..k {
        let z: f64 = rng.sample(StandardNormal);
        x.push(t.mean(x[i]) + sd * z);
    }
    ObservationSeries::new(x, delta, 0.0)
}
