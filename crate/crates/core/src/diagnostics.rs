//! Radon–Nikodym derivative of the diffusion-bridge law with respect to the
//! Brownian-bridge law, and empirical checks of the error bounds built on it.
//!
//! For a bridge from `x` to `y` over `Δ`,
//! `dQ/dW = L / E_W[L]` with `L = exp(−½ ∫₀^Δ g_θ(W_s) ds)` and
//! `g_θ = μ² + μ′`. The time integral uses the trapezoid rule on the bridge
//! lattice, endpoints included.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::bridge::{fill_bridge_path, fill_ou_bridge_path};
use crate::error::{EmlError, Result};
use crate::model::{ait_sahalia_model, lamperti_transform, ou_model, quadratic_model, Theta, UnitDiffusionModel};
use crate::numeric::{self, CompensatedSum};
use crate::rng;

/// Largest `|log L|` accepted before reporting overflow.
const LOG_WEIGHT_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RadonNikodymSample {
    pub raw: Vec<f64>,
    pub normalizer: f64,
    pub normalized: Vec<f64>,
}

impl RadonNikodymSample {
    /// Same raw values, normalised by a different estimate of `E_W[L]`.
    pub fn renormalized(&self, normalizer: f64) -> Self {
        Self { raw: self.raw.clone(), normalizer, normalized: self.raw.iter().map(|r| r / normalizer).collect() }
    }
}

fn check_args(delta_obs: f64, steps: usize, samples: usize) -> Result<()> {
    if !(delta_obs > 0.0) || steps < 2 || samples < 2 {
        return Err(EmlError::InvalidArgument(format!(
            "need Δ > 0, M ≥ 2, S ≥ 2 (got Δ={delta_obs}, M={steps}, S={samples})"
        )));
    }
    Ok(())
}

/// `∫ g_θ` over one lattice path by the trapezoid rule.
fn path_integral(model: &UnitDiffusionModel, theta: &[f64], path: &[f64], delta: f64) -> f64 {
    let last = path.len() - 1;
    let mut acc = CompensatedSum::new();
    for (m, &u) in path.iter().enumerate() {
        let w = if m == 0 || m == last { 0.5 } else { 1.0 };
        acc.add(w * model.g_theta(theta, u));
    }
    delta * acc.value()
}

/// Bridge paths from `x` to `y` with their `L` values. Path `s` is drawn from
/// the substream `(seed, DIAGNOSTIC, s)`.
#[allow(clippy::too_many_arguments)]
fn weighted_paths(
    model: &UnitDiffusionModel,
    theta: &Theta,
    x: f64,
    y: f64,
    delta_obs: f64,
    steps: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<(Vec<f64>, f64)>> {
    model.check_theta(theta)?;
    check_args(delta_obs, steps, samples)?;
    let delta = delta_obs / steps as f64;
    let th = theta.as_slice();
    (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut path = vec![0.0; steps + 1];
            fill_bridge_path(x, y, delta, &mut rng::substream(seed, &[rng::tag::DIAGNOSTIC, s as u64]), &mut path);
            let integral = path_integral(model, th, &path, delta);
            let log_l = -0.5 * integral;
            if !log_l.is_finite() || log_l.abs() > LOG_WEIGHT_LIMIT {
                let lo = path.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = path.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                return Err(EmlError::WeightOverflow { integral, path_min: lo, path_max: hi });
            }
            Ok((path, log_l.exp()))
        })
        .collect()
}

/// `S` values of `L` on modified-bridge paths, normalised by their own mean.
#[allow(clippy::too_many_arguments)]
pub fn rn_samples(
    model: &UnitDiffusionModel,
    theta: &Theta,
    x: f64,
    y: f64,
    delta_obs: f64,
    steps: usize,
    samples: usize,
    seed: u64,
) -> Result<RadonNikodymSample> {
    let raw: Vec<f64> = weighted_paths(model, theta, x, y, delta_obs, steps, samples, seed)?
        .into_iter()
        .map(|(_, l)| l)
        .collect();
    let normalizer = numeric::mean(&raw);
    let normalized = raw.iter().map(|r| r / normalizer).collect();
    Ok(RadonNikodymSample { raw, normalizer, normalized })
}

/// A real function of the interior lattice values `u_1, …, u_{M−1}`.
#[derive(Clone)]
pub struct BridgeFunctional {
    pub id: String,
    /// Degree of a polynomial bounding `|G|`.
    pub degree: u32,
    eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl fmt::Debug for BridgeFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BridgeFunctional").field("id", &self.id).field("degree", &self.degree).finish()
    }
}

impl BridgeFunctional {
    pub fn new<F>(id: impl Into<String>, degree: u32, eval: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self { id: id.into(), degree, eval: Arc::new(eval) }
    }

    pub fn eval(&self, interior: &[f64]) -> f64 {
        (self.eval)(interior)
    }

    /// Evaluates on a full lattice path, dropping the pinned endpoints.
    pub fn eval_path(&self, path: &[f64]) -> f64 {
        self.eval(&path[1..path.len() - 1])
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant_{c}"), 0, move |_| c)
    }
}

/// The ten functionals of the fixed diagnostic suite.
pub fn standard_functionals() -> Vec<BridgeFunctional> {
    fn mean(u: &[f64]) -> f64 {
        u.iter().sum::<f64>() / u.len() as f64
    }
    vec![
        BridgeFunctional::new("path_mean", 1, mean),
        BridgeFunctional::new("midpoint", 1, |u| u[u.len() / 2]),
        BridgeFunctional::new("first", 1, |u| u[0]),
        BridgeFunctional::new("last", 1, |u| u[u.len() - 1]),
        BridgeFunctional::new("max", 1, |u| u.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
        BridgeFunctional::new("min", 1, |u| u.iter().cloned().fold(f64::INFINITY, f64::min)),
        BridgeFunctional::new("mean_square", 2, |u| u.iter().map(|v| v * v).sum::<f64>() / u.len() as f64),
        BridgeFunctional::new("mean_cube", 3, |u| u.iter().map(|v| v * v * v).sum::<f64>() / u.len() as f64),
        BridgeFunctional::new("range", 1, |u| {
            let hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
            hi - lo
        }),
        BridgeFunctional::new("quadratic_variation", 2, |u| u.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum()),
    ]
}

/// Exact OU bridge used to estimate `E_Q[G]` directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuOracle {
    pub a0: f64,
    pub a1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem3aReport {
    pub functional: String,
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    pub g_norm: f64,
    pub holds: bool,
}

impl Theorem3aReport {
    pub fn verdict(&self) -> &'static str {
        if self.holds {
            "holds"
        } else {
            "violated"
        }
    }
}

/// Standard error of `√(mean(v))` by the delta method.
fn sqrt_mean_se(values: &[f64]) -> (f64, f64) {
    let (m, se) = numeric::mean_stderr(values);
    let root = m.max(0.0).sqrt();
    let se_root = if root > 0.0 { se / (2.0 * root) } else { 0.0 };
    (root, se_root)
}

/// Estimates both sides of
/// `|E_Q[G] − E_W[G]| ≤ √(E_W[(dQ/dW − 1)²]) · ‖G‖₂`.
///
/// Without an oracle `E_Q[G]` is the self-normalised importance-sampling
/// estimate on the same bridge paths; with one it is a plain average over
/// exact OU bridge paths drawn independently. The verdict allows three
/// combined standard errors.
#[allow(clippy::too_many_arguments)]
pub fn theorem3a_check(
    model: &UnitDiffusionModel,
    theta: &Theta,
    x: f64,
    y: f64,
    delta_obs: f64,
    functional: &BridgeFunctional,
    steps: usize,
    samples: usize,
    seed: u64,
    oracle: Option<OuOracle>,
) -> Result<Theorem3aReport> {
    let paths = weighted_paths(model, theta, x, y, delta_obs, steps, samples, seed)?;
    let raw: Vec<f64> = paths.iter().map(|(_, l)| *l).collect();
    let normalizer = numeric::mean(&raw);
    let w: Vec<f64> = raw.iter().map(|r| r / normalizer).collect();
    let g: Vec<f64> = paths.iter().map(|(p, _)| functional.eval_path(p)).collect();
    if g.iter().any(|v| !v.is_finite()) {
        return Err(EmlError::EstimationFailure(format!("functional {} is not finite on a sampled path", functional.id)));
    }
    let g_bar = numeric::mean(&g);

    let (lhs, lhs_se) = match oracle {
        None => {
            // E_Q[G] − E_W[G] = E_W[(w − 1)(G − Ḡ)] since E_W[w] = 1.
            let d: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| (wi - 1.0) * (gi - g_bar)).collect();
            let (m, se) = numeric::mean_stderr(&d);
            (m.abs(), se)
        }
        Some(OuOracle { a0, a1 }) => {
            let q: Vec<f64> = (0..samples)
                .into_par_iter()
                .map_init(
                    || vec![0.0; steps + 1],
                    |buf, s| {
                        let mut r = rng::substream(seed, &[rng::tag::DIAGNOSTIC, rng::tag::OU_BRIDGE, s as u64]);
                        fill_ou_bridge_path(a0, a1, x, y, delta_obs, &mut r, buf);
                        functional.eval_path(buf)
                    },
                )
                .collect();
            let (mq, seq) = numeric::mean_stderr(&q);
            let (_, sew) = numeric::mean_stderr(&g);
            ((mq - g_bar).abs(), seq.hypot(sew))
        }
    };

    let dev2: Vec<f64> = w.iter().map(|wi| (wi - 1.0) * (wi - 1.0)).collect();
    let g2: Vec<f64> = g.iter().map(|v| v * v).collect();
    let (sd_w, sd_w_se) = sqrt_mean_se(&dev2);
    let (g_norm, g_norm_se) = sqrt_mean_se(&g2);
    if g_norm == 0.0 && lhs > 0.0 {
        return Err(EmlError::Inconsistent { lhs });
    }
    let rhs = sd_w * g_norm;
    let rhs_se = (g_norm * sd_w_se).hypot(sd_w * g_norm_se);
    let holds = lhs <= rhs + 3.0 * lhs_se.hypot(rhs_se);
    Ok(Theorem3aReport { functional: functional.id.clone(), lhs, lhs_se, rhs, rhs_se, g_norm, holds })
}

/// Range of `g_θ = μ² + μ′` on a declared interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftEnvelope {
    pub sup_val: f64,
    pub inf_val: f64,
    pub interval: (f64, f64),
    pub may_be_unbounded: bool,
}

/// Grid search for the range of `g_θ` on `[lo, hi]`.
///
/// The unboundedness flag probes one interval width beyond each end (halfway
/// to the domain boundary when that is closer): it is set when `g_θ` keeps
/// increasing outward on both sides and the probe values exceed the
/// interval's range `sup − inf` by more than a factor two above `inf`.
pub fn drift_envelope(
    model: &UnitDiffusionModel,
    theta: &Theta,
    lo: f64,
    hi: f64,
    grid_points: usize,
) -> Result<DriftEnvelope> {
    model.check_theta(theta)?;
    if !(lo < hi) || grid_points < 2 {
        return Err(EmlError::InvalidArgument(format!(
            "need lo < hi and at least two grid points (got [{lo}, {hi}], {grid_points})"
        )));
    }
    let th = theta.as_slice();
    let g = |z: f64| model.g_theta(th, z);
    let h = (hi - lo) / (grid_points - 1) as f64;
    let mut sup_val = f64::NEG_INFINITY;
    let mut inf_val = f64::INFINITY;
    for i in 0..grid_points {
        let z = if i + 1 == grid_points { hi } else { lo + i as f64 * h };
        let v = g(z);
        if !v.is_finite() {
            return Err(EmlError::InvalidArgument(format!("g_θ is not finite at {z}")));
        }
        sup_val = sup_val.max(v);
        inf_val = inf_val.min(v);
    }

    let width = hi - lo;
    let lower_probe = match model.domain_lower {
        Some(l) if lo - width <= l => 0.5 * (l + lo),
        _ => lo - width,
    };
    let grows = |from: f64, to: f64| {
        let mut prev = g(from);
        for j in 1..=8 {
            let v = g(from + (to - from) * j as f64 / 8.0);
            if !(v >= prev) {
                return None;
            }
            prev = v;
        }
        Some(prev)
    };
    let threshold = inf_val + 2.0 * (sup_val - inf_val);
    let may_be_unbounded = match (grows(lo, lower_probe), grows(hi, hi + width)) {
        (Some(a), Some(b)) => a > threshold && b > threshold,
        _ => false,
    };
    Ok(DriftEnvelope { sup_val, inf_val, interval: (lo, hi), may_be_unbounded })
}

/// `½(exp((Δ/2)(S − I)) − 1)‖G‖₂`, or `+∞` when the envelope may be unbounded.
pub fn theorem3b_bound(envelope: &DriftEnvelope, delta_obs: f64, g_norm: f64) -> f64 {
    if envelope.may_be_unbounded {
        return f64::INFINITY;
    }
    0.5 * (0.5 * delta_obs * (envelope.sup_val - envelope.inf_val)).exp_m1() * g_norm
}

/// Equal-width histogram over `[min, max]` as `(left, right, count)`; a
/// degenerate range gives a single bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return vec![(lo, hi, values.len())];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let right = if i + 1 == bins { hi } else { lo + (i + 1) as f64 * width };
            (lo + i as f64 * width, right, c)
        })
        .collect()
}

pub fn histogram_csv(hist: &[(f64, f64, usize)], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str("bin_left,bin_right,count\n");
    for (l, r, c) in hist {
        out.push_str(&format!("{l},{r},{c}\n"));
    }
    out
}

/// One bridge setting of the diagnostic suite.
#[derive(Debug, Clone)]
pub struct DiagnosticCase {
    pub name: String,
    pub model: UnitDiffusionModel,
    pub theta: Theta,
    pub x: f64,
    pub y: f64,
    pub delta: f64,
    pub oracle: Option<OuOracle>,
}

/// Three bridge settings: the OU model with its exact bridge, a quadratic
/// drift, and the transformed nonlinear-volatility model at the short rate
/// levels used for the density plots.
pub fn diagnostic_cases() -> Result<Vec<DiagnosticCase>> {
    let ait = lamperti_transform(&ait_sahalia_model(0.001, 3.0))?;
    Ok(vec![
        DiagnosticCase {
            name: "ou".into(),
            model: ou_model(),
            theta: Theta::new(vec![10.0, 2.5])?,
            x: 4.0,
            y: 4.0,
            delta: 1.0 / 12.0,
            oracle: Some(OuOracle { a0: 10.0, a1: 2.5 }),
        },
        DiagnosticCase {
            name: "quadratic".into(),
            model: quadratic_model(),
            theta: Theta::new(vec![1.0, -1.0, -0.5])?,
            x: 0.7,
            y: 0.8,
            delta: 1.0 / 12.0,
            oracle: None,
        },
        DiagnosticCase {
            name: "ait_sahalia".into(),
            theta: Theta::new(vec![0.1, -1.0, -10.0])?,
            x: ait.map.forward(0.04),
            y: ait.map.forward(0.05),
            model: ait.model,
            delta: 1.0 / 12.0,
            oracle: None,
        },
    ])
}

/// Every standard functional on every diagnostic case.
pub fn theorem3a_suite(steps: usize, samples: usize, seed: u64) -> Result<Vec<(String, Theorem3aReport)>> {
    let mut out = Vec::new();
    for case in diagnostic_cases()? {
        for f in standard_functionals() {
            let r = theorem3a_check(&case.model, &case.theta, case.x, case.y, case.delta, &f, steps, samples, seed, case.oracle)?;
            out.push((case.name.clone(), r));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{constant_drift_model, ScalarFn};
    use approx::assert_relative_eq;

    fn zero_model() -> UnitDiffusionModel {
        UnitDiffusionModel::new("zero", ScalarFn::zero(), vec![ScalarFn::power(1.0, 0)])
    }

    #[test]
    fn constant_drift_weights_are_identical() {
        let th = Theta::new(vec![0.8]).unwrap();
        let r = rn_samples(&constant_drift_model(), &th, 0.0, 1.0, 0.5, 20, 100, 1).unwrap();
        let first = r.raw[0];
        assert_relative_eq!(first, (-0.5 * 0.5 * 0.64f64).exp(), max_relative = 1e-14);
        assert!(r.raw.iter().all(|&v| v == first));
        assert!(r.normalized.iter().all(|&v| v == 1.0));
        let env = drift_envelope(&constant_drift_model(), &th, -3.0, 3.0, 50).unwrap();
        assert_eq!(theorem3b_bound(&env, 0.5, 1.0), 0.0);
    }

    #[test]
    fn raw_values_are_positive() {
        let th = Theta::new(vec![10.0, 2.5]).unwrap();
        let r = rn_samples(&ou_model(), &th, 4.0, 4.2, 1.0 / 12.0, 30, 500, 2).unwrap();
        assert!(r.raw.iter().all(|&v| v > 0.0));
        assert_relative_eq!(numeric::mean(&r.normalized), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn independent_normalizer_is_unbiased() {
        let th = Theta::new(vec![10.0, 2.5]).unwrap();
        let a = rn_samples(&ou_model(), &th, 3.5, 4.3, 1.0 / 12.0, 30, 20_000, 3).unwrap();
        let b = rn_samples(&ou_model(), &th, 3.5, 4.3, 1.0 / 12.0, 30, 20_000, 4).unwrap();
        let (m, se) = numeric::mean_stderr(&a.renormalized(b.normalizer).normalized);
        // The normalizer is itself noisy; fold its relative error into the allowance.
        let (_, se_b) = numeric::mean_stderr(&b.raw);
        let total = se.hypot(se_b / b.normalizer);
        assert!((m - 1.0).abs() < 3.0 * total, "{m} ± {total}");
    }

    #[test]
    fn overflow_is_reported() {
        let th = Theta::new(vec![-1e3]).unwrap();
        let m = UnitDiffusionModel::new("steep", ScalarFn::zero(), vec![ScalarFn::power(1.0, 3)]);
        let err = rn_samples(&m, &th, 2.0, 2.0, 1.0, 10, 4, 1).unwrap_err();
        assert!(matches!(err, EmlError::WeightOverflow { .. }));
    }

    #[test]
    fn constant_functional_has_zero_lhs() {
        let th = Theta::new(vec![10.0, 2.5]).unwrap();
        let r = theorem3a_check(&ou_model(), &th, 4.0, 4.1, 0.1, &BridgeFunctional::constant(2.0), 10, 200, 1, None).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.holds);
        let c = Theta::new(vec![1.5]).unwrap();
        let r = theorem3a_check(&constant_drift_model(), &c, 0.0, 0.3, 0.1, &BridgeFunctional::constant(2.0), 10, 200, 1, None).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.holds);
    }

    #[test]
    fn zero_drift_laws_coincide() {
        for f in standard_functionals() {
            let r = theorem3a_check(&zero_model(), &Theta::zeros(1), 0.0, 0.5, 1.0, &f, 16, 2000, 5, None).unwrap();
            assert!(r.lhs <= 3.0 * r.lhs_se + 1e-15, "{}: {r:?}", f.id);
        }
    }

    #[test]
    fn vanishing_functional_is_consistent() {
        let g = BridgeFunctional::new("zero_on_bb", 1, |u| if u[0] > 100.0 { 1.0 } else { 0.0 });
        let th = Theta::new(vec![10.0, 2.5]).unwrap();
        let r = theorem3a_check(&ou_model(), &th, 4.0, 4.0, 0.1, &g, 4, 10, 1, None).unwrap();
        assert_eq!(r.g_norm, 0.0);
        assert_eq!(r.lhs, 0.0);
    }

    #[test]
    fn ou_with_oracle_holds() {
        let th = Theta::new(vec![10.0, 2.5]).unwrap();
        let f = &standard_functionals()[0];
        let r = theorem3a_check(&ou_model(), &th, 4.0, 4.0, 1.0 / 12.0, f, 30, 10_000, 9, Some(OuOracle { a0: 10.0, a1: 2.5 })).unwrap();
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn bound_examples() {
        let env = DriftEnvelope { sup_val: 1.2, inf_val: 1.0, interval: (0.0, 1.0), may_be_unbounded: false };
        assert_relative_eq!(theorem3b_bound(&env, 0.5, 1.0), 0.025_635_548_188_012, epsilon = 1e-9);
        assert_relative_eq!(theorem3b_bound(&env, 0.5, 1.0), 0.5 * (0.05f64.exp() - 1.0), epsilon = 1e-15);
        let flat = DriftEnvelope { sup_val: 2.0, inf_val: 2.0, ..env };
        assert_eq!(theorem3b_bound(&flat, 0.5, 3.0), 0.0);
        let open = DriftEnvelope { may_be_unbounded: true, ..env };
        assert_eq!(theorem3b_bound(&open, 0.5, 1.0), f64::INFINITY);
    }

    #[test]
    fn envelope_examples() {
        let th = Theta::new(vec![0.0, 1.0]).unwrap();
        let e = drift_envelope(&ou_model(), &th, -2.0, 2.0, 401).unwrap();
        assert_relative_eq!(e.sup_val, 3.0, epsilon = 1e-12);
        assert_relative_eq!(e.inf_val, -1.0, epsilon = 1e-12);
        let e = drift_envelope(&ou_model(), &th, -10.0, 10.0, 2001).unwrap();
        assert_relative_eq!(e.sup_val, 99.0, epsilon = 1e-12);
        assert!(e.may_be_unbounded);
        let c = drift_envelope(&constant_drift_model(), &Theta::new(vec![1.5]).unwrap(), -5.0, 5.0, 11).unwrap();
        assert_eq!((c.sup_val, c.inf_val, c.may_be_unbounded), (2.25, 2.25, false));
    }

    #[test]
    fn periodic_drift_is_bounded() {
        let m = UnitDiffusionModel::new(
            "sin",
            ScalarFn::zero(),
            vec![ScalarFn::custom_with_derivative("sin", f64::sin, f64::cos)],
        );
        let e = drift_envelope(&m, &Theta::new(vec![1.0]).unwrap(), -10.0, 10.0, 4001).unwrap();
        assert!(!e.may_be_unbounded);
        assert!(e.sup_val <= 1.25 + 1e-9 && e.inf_val >= -1.0 - 1e-9);
    }

    #[test]
    fn histogram_shapes() {
        assert_eq!(histogram(&[1.0; 5], 200), vec![(1.0, 1.0, 5)]);
        let h = histogram(&[0.0, 0.5, 1.0, 1.0], 2);
        assert_eq!(h, vec![(0.0, 0.5, 1), (0.5, 1.0, 3)]);
        let csv = histogram_csv(&h, &["x=1".into()]);
        assert_eq!(csv, "# x=1\nbin_left,bin_right,count\n0,0.5,1\n0.5,1,3\n");
    }
}
