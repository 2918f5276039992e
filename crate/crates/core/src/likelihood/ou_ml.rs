use crate::eml::regression_estimate;
use crate::error::{EmlError, Result};
use crate::model::{ou_model, ou_transition_coeffs, ObservationSeries};
use crate::numeric::{self, normal_log_pdf};

const MAX_ITERATIONS: usize = 500;
/// On the per-interval mean negative log-likelihood.
const GRADIENT_TOLERANCE: f64 = 1e-7;

/// Exact log-likelihood of the OU model `dX = (a0 − a1 X)dt + dW`.
pub fn ou_exact_loglik(series: &ObservationSeries, a0: f64, a1: f64) -> f64 {
    let c = ou_transition_coeffs(a0, a1, series.delta);
    numeric::compensated_sum(series.x.windows(2).map(|w| normal_log_pdf(w[1], c.mean(w[0]), c.var)))
}

/// Gradient of [`ou_exact_loglik`] with respect to `(a0, a1)`.
pub fn ou_exact_loglik_gradient(series: &ObservationSeries, a0: f64, a1: f64) -> [f64; 2] {
    let tau = series.delta;
    let c = ou_transition_coeffs(a0, a1, tau);
    // Derivatives of β = e^{−a1τ}, shift = (a0/a1)(1 − β) and var = (1 − β²)/(2a1).
    let (dshift_da0, dshift_da1, dvar_da1) = if (a1 * tau).abs() < 1e-8 {
        (tau, -a0 * tau * tau / 2.0, -tau * tau)
    } else {
        let om = -(-a1 * tau).exp_m1();
        let om2 = -(-2.0 * a1 * tau).exp_m1();
        let beta = c.beta;
        (
            om / a1,
            a0 * (tau * beta / a1 - om / (a1 * a1)),
            tau * beta * beta / a1 - om2 / (2.0 * a1 * a1),
        )
    };
    let dbeta_da1 = -tau * c.beta;
    let mut g0 = numeric::CompensatedSum::new();
    let mut g1 = numeric::CompensatedSum::new();
    for w in series.x.windows(2) {
        let r = w[1] - c.mean(w[0]);
        let dr_da0 = -dshift_da0;
        let dr_da1 = -(dbeta_da1 * w[0] + dshift_da1);
        // ∂/∂p of −½ln v − r²/(2v)
        g0.add(-r * dr_da0 / c.var);
        g1.add(-r * dr_da1 / c.var + dvar_da1 * (r * r / c.var - 1.0) / (2.0 * c.var));
    }
    [g0.value(), g1.value()]
}

/// Exact-likelihood OU fit.
#[derive(Debug, Clone, PartialEq)]
pub struct OuFit {
    pub a0: f64,
    pub a1: f64,
    pub loglik: f64,
    pub iterations: usize,
}

fn bfgs(series: &ObservationSeries, start: [f64; 2]) -> std::result::Result<OuFit, String> {
    let n = series.intervals() as f64;
    let f = |p: [f64; 2]| -ou_exact_loglik(series, p[0], p[1]) / n;
    let grad = |p: [f64; 2]| {
        let g = ou_exact_loglik_gradient(series, p[0], p[1]);
        [-g[0] / n, -g[1] / n]
    };
    let mut x = start;
    let mut fx = f(x);
    let mut g = grad(x);
    if !fx.is_finite() {
        return Err(format!("non-finite objective at start {start:?}"));
    }
    let mut h = [[1.0, 0.0], [0.0, 1.0]];
    for it in 0..MAX_ITERATIONS {
        if g[0].hypot(g[1]) < GRADIENT_TOLERANCE {
            return Ok(OuFit { a0: x[0], a1: x[1], loglik: -fx * n, iterations: it });
        }
        let mut d = [-(h[0][0] * g[0] + h[0][1] * g[1]), -(h[1][0] * g[0] + h[1][1] * g[1])];
        let mut slope = d[0] * g[0] + d[1] * g[1];
        if slope >= 0.0 {
            h = [[1.0, 0.0], [0.0, 1.0]];
            d = [-g[0], -g[1]];
            slope = d[0] * g[0] + d[1] * g[1];
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = [x[0] + step * d[0], x[1] + step * d[1]];
            let fc = f(cand);
            if fc.is_finite() && fc <= fx + 1e-4 * step * slope {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fxn)) = accepted else {
            // No descent left at machine precision: accept the current point
            // if the gradient is already small relative to the objective.
            if g[0].hypot(g[1]) < 1e-6 {
                return Ok(OuFit { a0: x[0], a1: x[1], loglik: -fx * n, iterations: it });
            }
            return Err(format!("line search failed at iteration {it}, point {x:?}, gradient {g:?}"));
        };
        if fx - fxn <= 1e-15 * fx.abs().max(1.0) && g[0].hypot(g[1]) < 1e-5 {
            // Stalled at rounding level next to a stationary point.
            return Ok(OuFit { a0: xn[0], a1: xn[1], loglik: -fxn * n, iterations: it + 1 });
        }
        let gn = grad(xn);
        let s = [xn[0] - x[0], xn[1] - x[1]];
        let y = [gn[0] - g[0], gn[1] - g[1]];
        let sy = s[0] * y[0] + s[1] * y[1];
        if sy > 1e-14 {
            let rho = 1.0 / sy;
            let hy = [h[0][0] * y[0] + h[0][1] * y[1], h[1][0] * y[0] + h[1][1] * y[1]];
            let yhy = y[0] * hy[0] + y[1] * hy[1];
            for i in 0..2 {
                for j in 0..2 {
                    h[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        x = xn;
        fx = fxn;
        g = gn;
    }
    Err(format!("no convergence after {MAX_ITERATIONS} iterations, last point {x:?}, gradient {g:?}"))
}

/// Maximises [`ou_exact_loglik`] by BFGS with analytic gradients, restarted
/// from the regression estimate and from ±50% perturbations of it.
pub fn ou_ml_fit(series: &ObservationSeries) -> Result<OuFit> {
    if series.x.len() < 3 {
        return Err(EmlError::InvalidArgument("OU fit needs at least two intervals".into()));
    }
    let reg = regression_estimate(series, &ou_model())?;
    let (r0, r1) = (reg[0], reg[1]);
    let starts = [[r0, r1], [1.5 * r0, 1.5 * r1], [0.5 * r0, 0.5 * r1]];
    let mut best: Option<OuFit> = None;
    let mut trace = Vec::new();
    for start in starts {
        match bfgs(series, start) {
            Ok(fit) => {
                if best.as_ref().map_or(true, |b| fit.loglik > b.loglik) {
                    best = Some(fit);
                }
            }
            Err(e) => trace.push(e),
        }
    }
    best.ok_or_else(|| EmlError::NoConvergence(trace.join("; ")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ou_exact_simulate;
    use crate::rng::substream;

    fn data(k: usize, seed: u64) -> ObservationSeries {
        ou_exact_simulate(10.0, 2.5, 4.0, 1.0 / 12.0, k, &mut substream(seed, &[])).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = data(200, 1);
        for &(a0, a1) in &[(10.0, 2.5), (3.0, 0.7), (1.0, 1e-10), (-2.0, -0.3)] {
            let g = ou_exact_loglik_gradient(&s, a0, a1);
            let h = 1e-5;
            let f0 = (ou_exact_loglik(&s, a0 + h, a1) - ou_exact_loglik(&s, a0 - h, a1)) / (2.0 * h);
            let f1 = (ou_exact_loglik(&s, a0, a1 + h) - ou_exact_loglik(&s, a0, a1 - h)) / (2.0 * h);
            assert!((g[0] - f0).abs() < 1e-4 * (1.0 + f0.abs()), "{a0},{a1}: {} vs {f0}", g[0]);
            assert!((g[1] - f1).abs() < 1e-4 * (1.0 + f1.abs()), "{a0},{a1}: {} vs {f1}", g[1]);
        }
    }

    #[test]
    fn unimodal_in_intercept() {
        let s = ObservationSeries::new(vec![4.0, 4.0], 1.0 / 12.0, 0.0).unwrap();
        let at = ou_exact_loglik(&s, 10.0, 2.5);
        assert!(at > ou_exact_loglik(&s, 9.0, 2.5));
        assert!(at > ou_exact_loglik(&s, 11.0, 2.5));
    }

    #[test]
    fn fit_is_a_stationary_point() {
        let s = data(500, 2);
        let fit = ou_ml_fit(&s).unwrap();
        let g = ou_exact_loglik_gradient(&s, fit.a0, fit.a1);
        assert!(g[0].hypot(g[1]) < 1e-5 * s.intervals() as f64);
        for &(d0, d1) in &[(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
            assert!(ou_exact_loglik(&s, fit.a0 + d0, fit.a1 + d1) < fit.loglik);
        }
    }

    #[test]
    fn large_sample_consistency() {
        // Asymptotic standard errors for a1 with a0 = a1·m: Var(â1) ≈ 2a1/T and
        // Var(â0) ≈ (2a1/T)(m² + 1/(2a1)) with T the observation span.
        let s = data(10_000, 3);
        let fit = ou_ml_fit(&s).unwrap();
        let t = s.intervals() as f64 / 12.0;
        let se1 = (2.0 * 2.5 / t).sqrt();
        let se0 = (2.0 * 2.5 / t * (16.0 + 1.0 / 5.0)).sqrt();
        assert!((fit.a1 - 2.5).abs() < 3.0 * se1, "{fit:?}");
        assert!((fit.a0 - 10.0).abs() < 3.0 * se0, "{fit:?}");
    }
}
