//! Diffusion models with unit volatility and parameter-linear drift
//!
//! ```text
//! dX = μ(X, θ) dt + dW,    μ(x, θ) = g(x) + Σ aᵢ fᵢ(x)
//! ```
//!
//! together with the change of variables that brings a state-dependent
//! volatility model into this form, a catalogue of built-in models and the
//! simulators used to generate synthetic data.

mod builtin;
mod lamperti;
mod series;
mod simulate;

use std::fmt;
use std::sync::Arc;

use crate::error::{EmlError, Result};
use crate::numeric;

pub use builtin::{
    ait_sahalia_closed_form_drift, ait_sahalia_model, cir_model, cir_unit_model, cir_unit_params,
    constant_drift_model, ou_model, quadratic_model,
};
pub use lamperti::{lamperti_transform, LampertiMap, LampertiTransform, VolatilityModel};
pub use series::ObservationSeries;
pub use simulate::{
    euler_simulate, ou_exact_sample, ou_exact_simulate, ou_exact_transition, ou_transition_coeffs,
    OuTransition, MAX_DOMAIN_REDRAWS,
};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar function of the state with a derivative evaluator.
///
/// Monomials carry closed-form derivatives and antiderivatives; everything
/// else is a closure whose derivative falls back to central differences when
/// none is supplied and whose antiderivative is computed by quadrature.
#[derive(Clone)]
pub struct ScalarFn {
    label: String,
    kind: Kind,
}

#[derive(Clone)]
enum Kind {
    Zero,
    /// `coeff * x^power`
    Power { coeff: f64, power: i32 },
    Custom { value: RealFn, derivative: Option<RealFn> },
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFn({})", self.label)
    }
}

impl ScalarFn {
    pub fn zero() -> Self {
        Self { label: "0".into(), kind: Kind::Zero }
    }

    pub fn constant(c: f64) -> Self {
        Self::power(c, 0)
    }

    /// `coeff * x^power`.
    pub fn power(coeff: f64, power: i32) -> Self {
        let mono = match power {
            0 => "1".to_string(),
            1 => "x".to_string(),
            -1 => "1/x".to_string(),
            p if p < 0 => format!("x^({p})"),
            p => format!("x^{p}"),
        };
        let label = if coeff == 1.0 {
            mono
        } else if coeff == -1.0 {
            format!("-{mono}")
        } else {
            format!("{coeff}*{mono}")
        };
        Self { label, kind: Kind::Power { coeff, power } }
    }

    pub fn custom<F>(label: impl Into<String>, value: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            kind: Kind::Custom { value: Arc::new(value), derivative: None },
        }
    }

    pub fn custom_with_derivative<F, D>(label: impl Into<String>, value: F, derivative: D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            kind: Kind::Custom { value: Arc::new(value), derivative: Some(Arc::new(derivative)) },
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Zero)
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Power { coeff, power } => match power {
                0 => *coeff,
                1 => coeff * x,
                2 => coeff * x * x,
                -1 => coeff / x,
                p => coeff * x.powi(*p),
            },
            Kind::Custom { value, .. } => value(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Power { coeff, power } => match power {
                0 => 0.0,
                1 => *coeff,
                p => coeff * f64::from(*p) * x.powi(p - 1),
            },
            Kind::Custom { derivative: Some(d), .. } => d(x),
            Kind::Custom { value, derivative: None } => numeric::central_difference(|u| value(u), x),
        }
    }

    /// `∫_lo^hi f(u) du`.
    pub fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        match &self.kind {
            Kind::Zero => Ok(0.0),
            Kind::Power { coeff, power: -1 } => {
                if lo == hi {
                    Ok(0.0)
                } else if lo * hi > 0.0 {
                    Ok(coeff * (hi / lo).ln())
                } else {
                    Err(EmlError::Quadrature { lo, hi })
                }
            }
            Kind::Power { coeff, power } => {
                if *power < -1 && lo * hi <= 0.0 {
                    return Err(EmlError::Quadrature { lo, hi });
                }
                let q = power + 1;
                Ok(coeff * (hi.powi(q) - lo.powi(q)) / f64::from(q))
            }
            Kind::Custom { value, .. } => numeric::integrate(|u| value(u), lo, hi, 1e-9),
        }
    }
}

/// Drift coefficients `(a₀, …, a_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta(Vec<f64>);

impl Theta {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if let Some(v) = coefficients.iter().find(|v| !v.is_finite()) {
            return Err(EmlError::InvalidArgument(format!("non-finite coefficient {v}")));
        }
        Ok(Self(coefficients))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for Theta {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<&[f64]> for Theta {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

/// `dX = (g(X) + Σ aᵢ fᵢ(X)) dt + dW`.
#[derive(Debug, Clone)]
pub struct UnitDiffusionModel {
    pub label: String,
    pub offset: ScalarFn,
    pub basis: Vec<ScalarFn>,
    /// States must stay strictly above this bound.
    pub domain_lower: Option<f64>,
}

impl UnitDiffusionModel {
    pub fn new(label: impl Into<String>, offset: ScalarFn, basis: Vec<ScalarFn>) -> Self {
        Self { label: label.into(), offset, basis, domain_lower: None }
    }

    pub fn with_domain_lower(mut self, lower: f64) -> Self {
        self.domain_lower = Some(lower);
        self
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn check_theta(&self, theta: &Theta) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(EmlError::DimensionMismatch { expected: self.dim(), got: theta.len() });
        }
        Ok(())
    }

    #[inline]
    pub fn in_domain(&self, x: f64) -> bool {
        x.is_finite() && self.domain_lower.map_or(true, |l| x > l)
    }

    /// `μ(x, θ)` without checking the parameter length.
    #[inline]
    pub fn drift(&self, theta: &[f64], x: f64) -> f64 {
        let mut acc = self.offset.value(x);
        for (a, f) in theta.iter().zip(&self.basis) {
            acc += a * f.value(x);
        }
        acc
    }

    pub fn eval_drift(&self, theta: &Theta, x: f64) -> Result<f64> {
        self.check_theta(theta)?;
        if !self.in_domain(x) {
            return Err(EmlError::OutsideDomain { value: x, lower: self.domain_lower.unwrap_or(f64::NEG_INFINITY) });
        }
        Ok(self.drift(theta.as_slice(), x))
    }

    /// `∂μ/∂x (x, θ)`.
    pub fn drift_derivative(&self, theta: &[f64], x: f64) -> f64 {
        let mut acc = self.offset.derivative(x);
        for (a, f) in theta.iter().zip(&self.basis) {
            acc += a * f.derivative(x);
        }
        acc
    }

    /// `μ′(x, θ) + μ(x, θ)²`, the integrand of the Girsanov weight.
    #[inline]
    pub fn g_theta(&self, theta: &[f64], x: f64) -> f64 {
        let mu = self.drift(theta, x);
        self.drift_derivative(theta, x) + mu * mu
    }

    /// `∫_lo^hi μ(u, θ) du`.
    pub fn drift_integral(&self, theta: &[f64], lo: f64, hi: f64) -> Result<f64> {
        let mut acc = self.offset.integral(lo, hi)?;
        for (a, f) in theta.iter().zip(&self.basis) {
            if *a != 0.0 {
                acc += a * f.integral(lo, hi)?;
            }
        }
        Ok(acc)
    }

    pub fn basis_labels(&self) -> String {
        self.basis.iter().map(ScalarFn::label).collect::<Vec<_>>().join(", ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn ou_drift_examples() {
        let m = ou_model();
        let th = Theta::new(vec![10.0, 2.5]).unwrap();
        assert_eq!(m.eval_drift(&th, 0.0).unwrap(), 10.0);
        assert_eq!(m.eval_drift(&th, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_drift_example() {
        let m = quadratic_model();
        let th = Theta::new(vec![1.0, -1.0, -0.5]).unwrap();
        assert_eq!(m.eval_drift(&th, 1.0).unwrap(), -0.5);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = ou_model();
        let err = m.eval_drift(&Theta::new(vec![1.0]).unwrap(), 0.0).unwrap_err();
        assert_eq!(err, EmlError::DimensionMismatch { expected: 2, got: 1 });
    }

    #[test]
    fn non_finite_theta_rejected() {
        assert!(Theta::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn outside_domain_rejected() {
        let m = cir_unit_model();
        let th = Theta::new(vec![1.0, 1.0]).unwrap();
        assert!(m.eval_drift(&th, -1.0).is_err());
        assert!(m.eval_drift(&th, 1.0).is_ok());
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let fns = [
            ScalarFn::power(1.0, 0),
            ScalarFn::power(-1.0, 1),
            ScalarFn::power(0.7, 2),
            ScalarFn::power(2.0, -1),
            ScalarFn::power(1.5, 3),
        ];
        for f in &fns {
            for &x in &[0.3, 1.0, 2.7, 5.0] {
                let fd = numeric::central_difference(|u| f.value(u), x);
                assert!((f.derivative(x) - fd).abs() < 1e-6 * (1.0 + fd.abs()), "{f:?} at {x}");
            }
        }
    }

    #[test]
    fn closed_form_integrals_match_quadrature() {
        let fns = [ScalarFn::power(1.0, 0), ScalarFn::power(-1.0, 1), ScalarFn::power(0.7, 2), ScalarFn::power(2.0, -1)];
        for f in &fns {
            let g = f.clone();
            let q = numeric::integrate(move |u| g.value(u), 0.5, 3.0, 1e-12).unwrap();
            assert_relative_eq!(f.integral(0.5, 3.0).unwrap(), q, max_relative = 1e-9);
        }
        assert!(ScalarFn::power(1.0, -1).integral(-1.0, 1.0).is_err());
    }

    #[test]
    fn custom_function_numeric_fallbacks() {
        let f = ScalarFn::custom("sin", f64::sin);
        assert_relative_eq!(f.derivative(0.4), 0.4f64.cos(), epsilon = 1e-8);
        assert_relative_eq!(f.integral(0.0, 1.0).unwrap(), 1.0 - 1.0f64.cos(), epsilon = 1e-9);
    }

    #[test]
    fn g_theta_for_ou() {
        // μ = -z ⇒ g = z² - 1
        let m = ou_model();
        for &z in &[-2.0, 0.0, 1.5] {
            assert_relative_eq!(m.g_theta(&[0.0, 1.0], z), z * z - 1.0, epsilon = 1e-14);
        }
    }

    proptest! {
        #[test]
        fn drift_is_linear_in_theta(
            a in prop::collection::vec(-10.0f64..10.0, 3),
            b in prop::collection::vec(-10.0f64..10.0, 3),
            x in -3.0f64..3.0,
        ) {
            // g ≡ 0 so the offset does not break additivity.
            let m = quadratic_model();
            let sum: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
            let lhs = m.drift(&sum, x) - m.drift(&a, x) - m.drift(&b, x) + m.drift(&[0.0; 3], x);
            let scale = 1.0 + m.drift(&a, x).abs() + m.drift(&b, x).abs();
            prop_assert!(lhs.abs() <= 1e-14 * scale * 8.0);
        }

        #[test]
        fn transformed_drift_stays_linear(
            a in prop::collection::vec(-5.0f64..5.0, 3),
            b in prop::collection::vec(-5.0f64..5.0, 3),
            x in 0.01f64..0.2,
        ) {
            let vm = ait_sahalia_model(0.001, 3.0);
            let t = lamperti_transform(&vm).unwrap();
            let y = t.map.forward(x);
            let m = &t.model;
            let sum: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
            let lhs = m.drift(&sum, y) - m.drift(&a, y) - m.drift(&b, y) + m.drift(&[0.0; 3], y);
            let scale = 1.0 + m.drift(&a, y).abs() + m.drift(&b, y).abs() + m.drift(&[0.0; 3], y).abs();
            prop_assert!(lhs.abs() <= 1e-13 * scale);
        }
    }
}
