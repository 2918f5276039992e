//! Built-in models: Ornstein–Uhlenbeck, quadratic drift, square-root (CIR)
//! and the Aït-Sahalia nonlinear variance model.

use crate::error::{EmlError, Result};

use super::lamperti::ClosedForm;
use super::{ScalarFn, UnitDiffusionModel, VolatilityModel};

/// `dX = (a₀ − a₁X) dt + dW`.
pub fn ou_model() -> UnitDiffusionModel {
    UnitDiffusionModel::new("ou", ScalarFn::zero(), vec![ScalarFn::power(1.0, 0), ScalarFn::power(-1.0, 1)])
}

/// `dX = (a₀ + a₁X + a₂X²) dt + dW`.
pub fn quadratic_model() -> UnitDiffusionModel {
    UnitDiffusionModel::new(
        "quadratic",
        ScalarFn::zero(),
        vec![ScalarFn::power(1.0, 0), ScalarFn::power(1.0, 1), ScalarFn::power(1.0, 2)],
    )
}

/// `dX = c dt + dW`.
pub fn constant_drift_model() -> UnitDiffusionModel {
    UnitDiffusionModel::new("constant", ScalarFn::zero(), vec![ScalarFn::power(1.0, 0)])
}

/// Square-root process after `y = 2√x/σ`: `dY = (b₀/Y + b₁Y) dt + dW` on `Y > 0`.
pub fn cir_unit_model() -> UnitDiffusionModel {
    UnitDiffusionModel::new("cir-unit", ScalarFn::zero(), vec![ScalarFn::power(1.0, -1), ScalarFn::power(1.0, 1)])
        .with_domain_lower(0.0)
}

/// Coefficients `(b₀, b₁)` of [`cir_unit_model`] for `dV = κ(m − V) dt + σ√V dW`.
pub fn cir_unit_params(kappa: f64, mean: f64, sigma: f64) -> Result<(f64, f64)> {
    if !(sigma > 0.0) {
        return Err(EmlError::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    if !(kappa > 0.0) {
        return Err(EmlError::InvalidArgument(format!("kappa must be positive, got {kappa}")));
    }
    Ok((2.0 * kappa * mean / (sigma * sigma) - 0.5, -0.5 * kappa))
}

/// `dV = (a₀ − a₁V) dt + σ√V dW` with `θ = (κm, κ)`.
pub fn cir_model(sigma: f64) -> VolatilityModel {
    let drift = UnitDiffusionModel::new("cir", ScalarFn::zero(), vec![ScalarFn::power(1.0, 0), ScalarFn::power(-1.0, 1)])
        .with_domain_lower(0.0);
    let vol = ScalarFn::custom_with_derivative(
        format!("{sigma}*sqrt(x)"),
        move |x: f64| sigma * x.sqrt(),
        move |x: f64| 0.5 * sigma / x.sqrt(),
    );
    VolatilityModel::new("cir", drift, vol, vec![sigma], 1.0).with_closed_form(ClosedForm::SquareRoot { s: sigma })
}

/// `dV = (a₀ + a₁V + a₂V²) dt + √(σ₁V + σ₂V²) dW`.
pub fn ait_sahalia_model(sigma1: f64, sigma2: f64) -> VolatilityModel {
    let drift = UnitDiffusionModel::new(
        "ait-sahalia",
        ScalarFn::zero(),
        vec![ScalarFn::power(1.0, 0), ScalarFn::power(1.0, 1), ScalarFn::power(1.0, 2)],
    )
    .with_domain_lower(0.0);
    let vol = ScalarFn::custom_with_derivative(
        format!("sqrt({sigma1}*x+{sigma2}*x^2)"),
        move |x: f64| (sigma1 * x + sigma2 * x * x).sqrt(),
        move |x: f64| (sigma1 + 2.0 * sigma2 * x) / (2.0 * (sigma1 * x + sigma2 * x * x).sqrt()),
    );
    VolatilityModel::new("ait-sahalia", drift, vol, vec![sigma1, sigma2], 0.05)
        .with_closed_form(ClosedForm::AitSahalia { s1: sigma1, s2: sigma2 })
}

/// Transformed Aït-Sahalia drift written out in terms of `w = e^{y√σ₂}`.
/// Kept as an independent cross-check of the generic transform.
pub fn ait_sahalia_closed_form_drift(theta: &[f64], sigma1: f64, sigma2: f64, y: f64) -> f64 {
    let r2 = sigma2.sqrt();
    let w = (y * r2).exp();
    let root = ((w * w - sigma1 * sigma1).powi(2) / (w * w) / sigma2).sqrt();
    theta[0] * 4.0 / root
        + theta[1] * (w - sigma1).powi(2) / (w * root * sigma2)
        + theta[2] * (w - sigma1).powi(4) / (4.0 * w * w * root * sigma2 * sigma2)
        - (sigma1 * sigma1 + w * w) / (2.0 * w * root)
}
