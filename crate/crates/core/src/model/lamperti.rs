//! Change of variables `Y = γ(X)`, `γ(x) = ∫ˣ du / σ(u)`, turning
//! `dX = μ dt + σ(X) dW` into a unit-volatility diffusion with drift
//!
//! ```text
//! μ_Y(y) = μ(γ⁻¹(y)) / σ(γ⁻¹(y)) − ½ σ′(γ⁻¹(y))
//! ```
//!
//! Each drift basis function `fᵢ` maps to `fᵢ/σ ∘ γ⁻¹`, so a drift that is
//! linear in its coefficients stays linear after the transform.

use std::sync::Arc;

use crate::error::{EmlError, Result};
use crate::numeric;

use super::{ObservationSeries, ScalarFn, UnitDiffusionModel};

/// `dX = μ(X, θ) dt + σ(X, ϑ) dW` for one fixed diffusion parameter `ϑ`.
#[derive(Debug, Clone)]
pub struct VolatilityModel {
    pub label: String,
    /// `μ(x, θ)` on the original state scale. Its `domain_lower` is the state domain.
    pub drift: UnitDiffusionModel,
    /// `x ↦ σ(x, ϑ)` with `∂σ/∂x`.
    pub sigma: ScalarFn,
    pub vartheta: Vec<f64>,
    /// Interior point used as the lower limit of `γ` when it has no closed form.
    pub reference: f64,
    pub(crate) closed_form: Option<ClosedForm>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ClosedForm {
    /// `σ(x) = s √x`, `γ(x) = 2√x / s`.
    SquareRoot { s: f64 },
    /// `σ(x) = √(s₁x + s₂x²)`.
    AitSahalia { s1: f64, s2: f64 },
}

impl VolatilityModel {
    pub fn new(
        label: impl Into<String>,
        drift: UnitDiffusionModel,
        sigma: ScalarFn,
        vartheta: Vec<f64>,
        reference: f64,
    ) -> Self {
        Self { label: label.into(), drift, sigma, vartheta, reference, closed_form: None }
    }

    pub(crate) fn with_closed_form(mut self, cf: ClosedForm) -> Self {
        self.closed_form = Some(cf);
        self
    }
}

/// Forward and inverse state maps of a Lamperti transform.
#[derive(Clone)]
pub struct LampertiMap {
    kind: MapKind,
}

#[derive(Clone)]
enum MapKind {
    SquareRoot { s: f64 },
    AitSahalia { s1: f64, s2: f64 },
    Numeric { sigma: ScalarFn, reference: f64, lower: Option<f64> },
}

impl std::fmt::Debug for LampertiMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            MapKind::SquareRoot { s } => write!(f, "LampertiMap(2√x/{s})"),
            MapKind::AitSahalia { s1, s2 } => write!(f, "LampertiMap(ait-sahalia {s1}, {s2})"),
            MapKind::Numeric { sigma, reference, .. } => {
                write!(f, "LampertiMap(∫ 1/{} from {reference})", sigma.label())
            }
        }
    }
}

impl LampertiMap {
    /// `γ(x)`; NaN outside the domain.
    pub fn forward(&self, x: f64) -> f64 {
        match &self.kind {
            MapKind::SquareRoot { s } => {
                if x >= 0.0 {
                    2.0 * x.sqrt() / s
                } else {
                    f64::NAN
                }
            }
            MapKind::AitSahalia { s1, s2 } => {
                if x > 0.0 {
                    2.0 * ((x * s2).sqrt() + (s1 + x * s2).sqrt()).ln() / s2.sqrt()
                } else {
                    f64::NAN
                }
            }
            MapKind::Numeric { sigma, reference, lower } => {
                if lower.is_some_and(|l| x <= l) {
                    return f64::NAN;
                }
                let s = sigma.clone();
                numeric::integrate(move |u| 1.0 / s.value(u), *reference, x, 1e-10).unwrap_or(f64::NAN)
            }
        }
    }

    /// `γ′(x) = 1/σ(x)`.
    pub fn forward_derivative(&self, x: f64) -> f64 {
        1.0 / self.sigma(x)
    }

    fn sigma(&self, x: f64) -> f64 {
        match &self.kind {
            MapKind::SquareRoot { s } => s * x.sqrt(),
            MapKind::AitSahalia { s1, s2 } => (s1 * x + s2 * x * x).sqrt(),
            MapKind::Numeric { sigma, .. } => sigma.value(x),
        }
    }

    /// `γ⁻¹(y)`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        match &self.kind {
            MapKind::SquareRoot { s } => {
                if y >= 0.0 {
                    Ok(s * s * y * y / 4.0)
                } else {
                    Err(EmlError::NotInvertible(y))
                }
            }
            MapKind::AitSahalia { s1, s2 } => {
                // z = √(x s₂) + √(s₁ + x s₂) = e^{y√s₂/2} and √(s₁+xs₂) − √(xs₂) = s₁/z.
                let z = (0.5 * y * s2.sqrt()).exp();
                let a = 0.5 * (z - s1 / z);
                if a > 0.0 {
                    Ok(a * a / s2)
                } else {
                    Err(EmlError::NotInvertible(y))
                }
            }
            MapKind::Numeric { reference, lower, .. } => {
                let x = numeric::invert_increasing(|u| self.forward(u), y, *reference, *lower)
                    .ok_or(EmlError::NotInvertible(y))?;
                let back = self.forward(x);
                if (back - y).abs() > 1e-7 * (1.0 + y.abs()) {
                    return Err(EmlError::NotInvertible(y));
                }
                Ok(x)
            }
        }
    }

    /// Lower bound of the transformed state, when the original domain has one.
    pub fn transformed_lower(&self) -> Option<f64> {
        match &self.kind {
            MapKind::SquareRoot { .. } => Some(0.0),
            MapKind::AitSahalia { s1, s2 } => Some(s1.ln() / s2.sqrt()),
            MapKind::Numeric { .. } => None,
        }
    }

    /// Maps every observation, failing if any level has no image.
    pub fn transform_series(&self, series: &ObservationSeries) -> Result<ObservationSeries> {
        for &x in &series.x {
            let s = self.sigma(x);
            if !(s > 0.0) {
                return Err(EmlError::NonPositiveVolatility { x, value: s });
            }
        }
        let out = series.map(|x| self.forward(x))?;
        Ok(out)
    }

    /// `Σ_{k≥1} log γ′(x_k)`, the change-of-variables term that puts a
    /// transformed-scale log-likelihood back on the original scale.
    pub fn log_jacobian(&self, series: &ObservationSeries) -> f64 {
        numeric::compensated_sum(series.x[1..].iter().map(|&x| self.forward_derivative(x).ln()))
    }
}

#[derive(Debug, Clone)]
pub struct LampertiTransform {
    pub model: UnitDiffusionModel,
    pub map: LampertiMap,
}

/// Number of probe points used to check positivity of `σ`.
const PROBES: i32 = 24;

pub fn lamperti_transform(vm: &VolatilityModel) -> Result<LampertiTransform> {
    let lower = vm.drift.domain_lower;
    probe_sigma(&vm.sigma, vm.reference, lower)?;

    let map = match vm.closed_form {
        Some(ClosedForm::SquareRoot { s }) => LampertiMap { kind: MapKind::SquareRoot { s } },
        Some(ClosedForm::AitSahalia { s1, s2 }) => LampertiMap { kind: MapKind::AitSahalia { s1, s2 } },
        None => LampertiMap {
            kind: MapKind::Numeric { sigma: vm.sigma.clone(), reference: vm.reference, lower },
        },
    };
    if vm.closed_form.is_none() && map.inverse(map.forward(vm.reference)).is_err() {
        return Err(EmlError::NotInvertible(0.0));
    }

    let basis = vm
        .drift
        .basis
        .iter()
        .map(|f| transform_fn(f, &vm.sigma, &map, false))
        .collect();
    let offset = transform_fn(&vm.drift.offset, &vm.sigma, &map, true);
    let mut model = UnitDiffusionModel::new(format!("{} (unit)", vm.label), offset, basis);
    model.domain_lower = map.transformed_lower();
    Ok(LampertiTransform { model, map })
}

fn probe_sigma(sigma: &ScalarFn, reference: f64, lower: Option<f64>) -> Result<()> {
    let mut points = vec![reference];
    for j in -PROBES / 2..PROBES / 2 {
        let step = 2f64.powi(j);
        points.push(reference + step);
        let below = reference - step;
        if lower.map_or(true, |l| below > l) {
            points.push(below);
        }
    }
    for x in points {
        let v = sigma.value(x);
        if !(v > 0.0) {
            return Err(EmlError::NonPositiveVolatility { x, value: v });
        }
    }
    Ok(())
}

/// `f/σ ∘ γ⁻¹`, plus `−½σ′ ∘ γ⁻¹` when `is_offset`.
fn transform_fn(f: &ScalarFn, sigma: &ScalarFn, map: &LampertiMap, is_offset: bool) -> ScalarFn {
    if let MapKind::SquareRoot { s } = map.kind {
        if let Some(mono) = square_root_monomial(f, s, is_offset) {
            return mono;
        }
    }
    let label = if is_offset {
        format!("{}/σ - σ'/2", f.label())
    } else {
        format!("{}/σ", f.label())
    };
    let (f, sigma, map) = (f.clone(), sigma.clone(), Arc::new(map.clone()));
    let (f2, sigma2, map2) = (f.clone(), sigma.clone(), map.clone());
    let value = move |y: f64| {
        let Ok(x) = map.inverse(y) else { return f64::NAN };
        let mut v = f.value(x) / sigma.value(x);
        if is_offset {
            v -= 0.5 * sigma.derivative(x);
        }
        v
    };
    // d/dy h(γ⁻¹(y)) = h′(x) σ(x).
    let derivative = move |y: f64| {
        let Ok(x) = map2.inverse(y) else { return f64::NAN };
        let s = sigma2.value(x);
        let ds = sigma2.derivative(x);
        let mut d = f2.derivative(x) - f2.value(x) * ds / s;
        if is_offset {
            let d2s = numeric::central_difference(|u| sigma2.derivative(u), x);
            d -= 0.5 * d2s * s;
        }
        d
    };
    ScalarFn::custom_with_derivative(label, value, derivative)
}

/// Under `σ = s√x`, `c xᵖ / σ(x)` at `x = s²y²/4` equals `2c (s²/4)ᵖ / s² · y^{2p−1}`
/// and `−½σ′ = −1/(2y)`.
fn square_root_monomial(f: &ScalarFn, s: f64, is_offset: bool) -> Option<ScalarFn> {
    let (coeff, power) = match f.kind {
        super::Kind::Zero if is_offset => return Some(ScalarFn::power(-0.5, -1)),
        super::Kind::Power { coeff, power } if !is_offset => (coeff, power),
        _ => return None,
    };
    let c = 2.0 * coeff * (s * s / 4.0).powi(power) / (s * s);
    Some(ScalarFn::power(c, 2 * power - 1))
}
