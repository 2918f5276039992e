use rayon::prelude::*;

use crate::bridge::fill_bridge_path;
use crate::error::{EmlError, Result};
use crate::model::{Theta, UnitDiffusionModel};
use crate::numeric::{self, normal_log_pdf, normal_pdf};
use crate::rng::{self, PathRng};

/// Monte Carlo density value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
    /// `ln(value)`, computed without underflow.
    pub log_value: f64,
}

impl DensityEstimate {
    fn exact(value: f64, n_samples: usize) -> Self {
        Self { value, stderr: 0.0, n_samples, log_value: value.ln() }
    }

    /// Mean of `exp(log_terms) · scale` with its standard error.
    fn from_log_terms(log_terms: &[f64], log_scale: f64) -> Result<Self> {
        let lmax = log_terms.iter().cloned().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        if !lmax.is_finite() {
            return Err(EmlError::EstimationFailure(format!(
                "all {} importance weights are zero or non-finite",
                log_terms.len()
            )));
        }
        let scaled: Vec<f64> = log_terms
            .iter()
            .map(|&l| if l.is_finite() { (l - lmax).exp() } else { 0.0 })
            .collect();
        let (m, se) = numeric::mean_stderr(&scaled);
        let log_value = log_scale + lmax + m.ln();
        let factor = (log_scale + lmax).exp();
        Ok(Self { value: factor * m, stderr: factor * se, n_samples: log_terms.len(), log_value })
    }
}

/// `φ(y; x + μ(x, θ)δ, δ)`.
pub fn euler_transition_density(model: &UnitDiffusionModel, theta: &Theta, x: f64, y: f64, delta: f64) -> Result<f64> {
    model.check_theta(theta)?;
    Ok(normal_pdf(y, x + model.drift(theta.as_slice(), x) * delta, delta))
}

fn check_mc_args(delta: f64, steps: usize, samples: usize) -> Result<()> {
    if !(delta > 0.0) || steps == 0 || samples == 0 {
        return Err(EmlError::InvalidArgument(format!(
            "need Δ > 0, M ≥ 1, S ≥ 1 (got Δ={delta}, M={steps}, S={samples})"
        )));
    }
    Ok(())
}

/// Log importance weight of one bridge path: all `M` Euler factors over
/// the proposal factors of the `M − 1` random bridge steps.
fn log_weight(model: &UnitDiffusionModel, theta: &[f64], path: &[f64], delta: f64) -> f64 {
    let steps = path.len() - 1;
    let y = path[steps];
    let mut target = 0.0;
    let mut proposal = 0.0;
    for m in 0..steps {
        let u = path[m];
        target += normal_log_pdf(path[m + 1], u + model.drift(theta, u) * delta, delta);
        if m + 1 < steps {
            let left = (steps - m) as f64;
            proposal += normal_log_pdf(path[m + 1], u + (y - u) / left, (left - 1.0) / left * delta);
        }
    }
    let lw = target - proposal;
    if lw.is_nan() {
        f64::NEG_INFINITY
    } else {
        lw
    }
}

/// Log importance weights for `S` bridge paths from `x` to `y`; path `s`
/// uses `path_rng(s)`.
fn log_weights_with<F>(
    model: &UnitDiffusionModel,
    theta: &[f64],
    x: f64,
    y: f64,
    delta_obs: f64,
    steps: usize,
    samples: usize,
    path_rng: F,
) -> Vec<f64>
where
    F: Fn(usize) -> PathRng + Sync,
{
    let delta = delta_obs / steps as f64;
    (0..samples)
        .into_par_iter()
        .map_init(
            || vec![0.0; steps + 1],
            |buf, s| {
                fill_bridge_path(x, y, delta, &mut path_rng(s), buf);
                log_weight(model, theta, buf, delta)
            },
        )
        .collect()
}

/// The `S` log importance weights behind [`sml_transition_density`].
#[allow(clippy::too_many_arguments)]
pub fn sml_log_weights(
    model: &UnitDiffusionModel,
    theta: &Theta,
    x: f64,
    y: f64,
    delta_obs: f64,
    steps: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    model.check_theta(theta)?;
    check_mc_args(delta_obs, steps, samples)?;
    Ok(log_weights_with(model, theta.as_slice(), x, y, delta_obs, steps, samples, |s| {
        rng::substream(seed, &[rng::tag::SML, s as u64])
    }))
}

/// Simulated transition density `π(y | x)` over `Δ` with `M` Euler steps and
/// `S` modified-bridge importance samples.
#[allow(clippy::too_many_arguments)]
pub fn sml_transition_density(
    model: &UnitDiffusionModel,
    theta: &Theta,
    x: f64,
    y: f64,
    delta_obs: f64,
    steps: usize,
    samples: usize,
    seed: u64,
) -> Result<DensityEstimate> {
    model.check_theta(theta)?;
    check_mc_args(delta_obs, steps, samples)?;
    if steps == 1 {
        return Ok(DensityEstimate::exact(euler_transition_density(model, theta, x, y, delta_obs)?, samples));
    }
    let lw = sml_log_weights(model, theta, x, y, delta_obs, steps, samples, seed)?;
    DensityEstimate::from_log_terms(&lw, 0.0)
}

/// [`sml_transition_density`] for observation interval `k`, with paths keyed
/// by `(seed, k, s)` so that repeated evaluations at different parameters
/// reuse the same draws.
#[allow(clippy::too_many_arguments)]
pub fn sml_transition_density_crn(
    model: &UnitDiffusionModel,
    theta: &Theta,
    x: f64,
    y: f64,
    delta_obs: f64,
    steps: usize,
    samples: usize,
    seed: u64,
    k: usize,
) -> Result<DensityEstimate> {
    model.check_theta(theta)?;
    check_mc_args(delta_obs, steps, samples)?;
    if steps == 1 {
        return Ok(DensityEstimate::exact(euler_transition_density(model, theta, x, y, delta_obs)?, samples));
    }
    let lw = log_weights_with(model, theta.as_slice(), x, y, delta_obs, steps, samples, |s| {
        rng::substream(seed, &[rng::tag::SML, k as u64, s as u64])
    });
    DensityEstimate::from_log_terms(&lw, 0.0)
}

/// Brownian-bridge steps used for the time integral in [`rogers_density`].
pub const ROGERS_STEPS: usize = 64;

/// Transition density over `δ` from the Girsanov representation
///
/// ```text
/// π(x | x₀) = φ(x; x₀, δ) · exp(∫_{x₀}^{x} μ) · E[exp(−(δ/2) ∫₀¹ g_θ(x₀ + u(x − x₀) + √δ W⁰_u) du)]
/// ```
///
/// with `W⁰` a standard Brownian bridge on `[0, 1]`.
#[allow(clippy::too_many_arguments)]
pub fn rogers_density(
    model: &UnitDiffusionModel,
    theta: &Theta,
    x0: f64,
    x: f64,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<DensityEstimate> {
    rogers_density_with_steps(model, theta, x0, x, delta, samples, seed, ROGERS_STEPS)
}

#[allow(clippy::too_many_arguments)]
pub fn rogers_density_with_steps(
    model: &UnitDiffusionModel,
    theta: &Theta,
    x0: f64,
    x: f64,
    delta: f64,
    samples: usize,
    seed: u64,
    steps: usize,
) -> Result<DensityEstimate> {
    let log_phi = rogers_log_functional(model, theta, x0, x, delta, samples, seed, steps)?;
    let log_kernel = normal_log_pdf(x, x0, delta) + model.drift_integral(theta.as_slice(), x0, x)?;
    DensityEstimate::from_log_terms(&log_phi, log_kernel)
}

/// Per-path values of `−(δ/2) ∫₀¹ g_θ(x₀ + u(x − x₀) + √δ W⁰_u) du`, whose
/// exponentials average to the Brownian-bridge factor of [`rogers_density`].
#[allow(clippy::too_many_arguments)]
pub fn rogers_log_functional(
    model: &UnitDiffusionModel,
    theta: &Theta,
    x0: f64,
    x: f64,
    delta: f64,
    samples: usize,
    seed: u64,
    steps: usize,
) -> Result<Vec<f64>> {
    model.check_theta(theta)?;
    check_mc_args(delta, steps, samples)?;
    let th = theta.as_slice();
    let h = 1.0 / steps as f64;
    let sqrt_delta = delta.sqrt();
    Ok((0..samples)
        .into_par_iter()
        .map_init(
            || vec![0.0; steps + 1],
            |buf, s| {
                fill_bridge_path(0.0, 0.0, h, &mut rng::substream(seed, &[rng::tag::ROGERS, s as u64]), buf);
                let mut integral = numeric::CompensatedSum::new();
                for (j, w) in buf.iter().enumerate() {
                    let u = j as f64 * h;
                    let weight = if j == 0 || j == steps { 0.5 } else { 1.0 };
                    integral.add(weight * model.g_theta(th, x0 + u * (x - x0) + sqrt_delta * w));
                }
                -0.5 * delta * h * integral.value()
            },
        )
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{constant_drift_model, ou_exact_transition, ou_model, ScalarFn};
    use approx::assert_relative_eq;

    fn zero_model() -> UnitDiffusionModel {
        UnitDiffusionModel::new("zero", ScalarFn::zero(), vec![ScalarFn::power(1.0, 0)])
    }

    fn ou_density(x: f64, y: f64, d: f64) -> f64 {
        let (m, v) = ou_exact_transition(10.0, 2.5, x, d);
        normal_pdf(y, m, v)
    }

    #[test]
    fn euler_density_examples() {
        let z = Theta::zeros(1);
        assert_relative_eq!(euler_transition_density(&zero_model(), &z, 1.0, 1.0, 1.0).unwrap(), 0.398_942_280_401_432_7, epsilon = 1e-15);
        assert_relative_eq!(euler_transition_density(&zero_model(), &z, 1.0, 1.0, 0.25).unwrap(), 0.797_884_560_802_865_4, epsilon = 1e-15);
        let th = Theta::new(vec![10.0, 2.5]).unwrap();
        let v = euler_transition_density(&ou_model(), &th, 4.0, 4.1, 1.0 / 12.0).unwrap();
        assert_relative_eq!(v, normal_pdf(4.1, 4.0, 1.0 / 12.0), epsilon = 1e-15);
        assert_relative_eq!(v, 1.301_496_546_131_836, epsilon = 1e-12);
    }

    #[test]
    fn sml_single_step_is_euler_bit_for_bit() {
        let th = Theta::new(vec![10.0, 2.5]).unwrap();
        let e = euler_transition_density(&ou_model(), &th, 3.7, 4.4, 0.1).unwrap();
        let s = sml_transition_density(&ou_model(), &th, 3.7, 4.4, 0.1, 1, 50, 1).unwrap();
        assert_eq!(s.value, e);
        assert_eq!(s.stderr, 0.0);
    }

    #[test]
    fn zero_drift_weights_are_the_brownian_density() {
        for &(x, y, d, m) in &[(0.0, 0.3, 1.0, 10), (2.0, 1.1, 0.25, 30), (-1.0, -1.0, 1.0 / 12.0, 3)] {
            let target = normal_pdf(y, x, d);
            let lw = sml_log_weights(&zero_model(), &Theta::zeros(1), x, y, d, m, 1000, 17).unwrap();
            for l in lw {
                assert!((l.exp() - target).abs() <= 1e-12 * target.max(1.0));
            }
        }
    }

    #[test]
    fn sml_recovers_exact_ou_density() {
        let th = Theta::new(vec![10.0, 2.5]).unwrap();
        let d = 1.0 / 12.0;
        let est = sml_transition_density(&ou_model(), &th, 4.0, 4.0, d, 30, 20_000, 3).unwrap();
        let exact = ou_density(4.0, 4.0, d);
        assert_relative_eq!(exact, 1.5282, epsilon = 1e-4);
        assert!((est.value / exact - 1.0).abs() < 0.02, "{} vs {exact}", est.value);
        assert!(est.stderr > 0.0);
        assert_relative_eq!(est.log_value, est.value.ln(), epsilon = 1e-12);
    }

    #[test]
    fn sml_integrates_to_one() {
        let th = Theta::new(vec![10.0, 2.5]).unwrap();
        let d = 1.0 / 12.0;
        let (m, v) = ou_exact_transition(10.0, 2.5, 3.5, d);
        let sd = v.sqrt();
        let n = 121;
        let (lo, hi) = (m - 6.0 * sd, m + 6.0 * sd);
        let h = (hi - lo) / (n - 1) as f64;
        let vals: Vec<f64> = (0..n)
            .map(|i| sml_transition_density(&ou_model(), &th, 3.5, lo + i as f64 * h, d, 30, 10_000, 99).unwrap().value)
            .collect();
        let integral = h * (vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[n - 1]));
        assert!((integral - 1.0).abs() < 0.01, "{integral}");
    }

    #[test]
    fn rogers_zero_drift_is_gaussian() {
        let lf = rogers_log_functional(&zero_model(), &Theta::zeros(1), 0.2, 0.5, 0.3, 100, 1, ROGERS_STEPS).unwrap();
        assert!(lf.iter().all(|v| v.exp() == 1.0));
        let est = rogers_density(&zero_model(), &Theta::zeros(1), 0.2, 0.5, 0.3, 100, 1).unwrap();
        assert_eq!(est.stderr, 0.0);
        assert_relative_eq!(est.value, normal_pdf(0.5, 0.2, 0.3), max_relative = 1e-14);
    }

    #[test]
    fn rogers_constant_drift_is_shifted_gaussian() {
        let c = 1.7;
        let th = Theta::new(vec![c]).unwrap();
        let est = rogers_density(&constant_drift_model(), &th, 0.2, 0.9, 0.3, 100, 1).unwrap();
        assert_eq!(est.stderr, 0.0);
        assert_relative_eq!(est.value, normal_pdf(0.9, 0.2 + c * 0.3, 0.3), max_relative = 1e-10);
    }

    #[test]
    fn rogers_recovers_exact_ou_density() {
        let th = Theta::new(vec![10.0, 2.5]).unwrap();
        let d = 1.0 / 12.0;
        let est = rogers_density(&ou_model(), &th, 4.0, 4.1, d, 20_000, 5).unwrap();
        let exact = ou_density(4.0, 4.1, d);
        assert!((est.value / exact - 1.0).abs() < 0.02, "{} vs {exact}", est.value);
    }

    #[test]
    fn rogers_time_grid_refinement_is_stable() {
        let th = Theta::new(vec![10.0, 2.5]).unwrap();
        let d = 1.0 / 12.0;
        for &(x0, x) in &[(4.0, 4.1), (3.6, 4.3), (4.5, 4.2)] {
            let a = rogers_density_with_steps(&ou_model(), &th, x0, x, d, 20_000, 5, 64).unwrap();
            let b = rogers_density_with_steps(&ou_model(), &th, x0, x, d, 20_000, 5, 128).unwrap();
            assert!((a.value / b.value - 1.0).abs() < 0.002, "{} vs {}", a.value, b.value);
        }
    }

    #[test]
    fn rogers_and_sml_agree_on_ou() {
        let th = Theta::new(vec![10.0, 2.5]).unwrap();
        let d = 1.0 / 12.0;
        for &(x, y) in &[(4.0, 4.0), (4.0, 4.3), (3.5, 3.9), (4.6, 4.2), (3.8, 3.5)] {
            let r = rogers_density(&ou_model(), &th, x, y, d, 20_000, 11).unwrap();
            let s = sml_transition_density(&ou_model(), &th, x, y, d, 30, 20_000, 12).unwrap();
            let se = (r.stderr.powi(2) + s.stderr.powi(2)).sqrt();
            // The Euler scheme inside SML carries an O(δ) bias on top of MC noise.
            let bias = 0.005 * s.value;
            assert!((r.value - s.value).abs() < 3.0 * se + bias, "({x},{y}): {} vs {} se {se}", r.value, s.value);
        }
    }

    #[test]
    fn crn_estimates_are_reproducible() {
        let th = Theta::new(vec![10.0, 2.5]).unwrap();
        let a = sml_transition_density_crn(&ou_model(), &th, 4.0, 4.2, 0.1, 10, 500, 7, 3).unwrap();
        let b = sml_transition_density_crn(&ou_model(), &th, 4.0, 4.2, 0.1, 10, 500, 7, 3).unwrap();
        assert_eq!(a, b);
        let c = sml_transition_density_crn(&ou_model(), &th, 4.0, 4.2, 0.1, 10, 500, 7, 4).unwrap();
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn all_zero_weights_fail() {
        // Drift that is NaN everywhere makes every weight invalid.
        let m = UnitDiffusionModel::new("nan", ScalarFn::custom("nan", |_| f64::NAN), vec![ScalarFn::power(1.0, 0)]);
        let err = sml_transition_density(&m, &Theta::zeros(1), 0.0, 0.1, 0.1, 4, 10, 1).unwrap_err();
        assert!(matches!(err, EmlError::EstimationFailure(_)));
    }
}
