//! Built-in models by name, with their default parameters.

use anyhow::{bail, Context, Result};
use eml_core::model::{
    ait_sahalia_model, cir_model, constant_drift_model, euler_simulate, lamperti_transform, ou_exact_simulate, ou_model,
    quadratic_model, ObservationSeries, Theta, UnitDiffusionModel, VolatilityModel,
};
use eml_core::rng::PathRng;

use crate::settings::Settings;

pub const MODEL_KEYS: [(&str, &str); 6] =
    [("model", "ou"), ("theta", ""), ("x0", ""), ("sigma", ""), ("sigma1", ""), ("sigma2", "")];

pub const MODEL_NAMES: &str = "ou, quadratic, constant, cir, ait-sahalia";

#[derive(Debug, Clone)]
pub enum Dynamics {
    Unit(UnitDiffusionModel),
    Volatility(VolatilityModel),
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub name: String,
    pub dynamics: Dynamics,
    pub theta: Theta,
    pub x0: f64,
}

/// Accepts the benchmark aliases `A` and `B`.
pub fn canonical_name(name: &str) -> Result<&'static str> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "ou" | "a" => "ou",
        "quadratic" | "b" => "quadratic",
        "constant" => "constant",
        "cir" => "cir",
        "ait-sahalia" | "ait_sahalia" => "ait-sahalia",
        other => bail!("unknown model {other:?}; expected one of {MODEL_NAMES}"),
    })
}

/// Resolves the model and fills its parameter defaults into `settings`.
pub fn resolve_model(settings: &mut Settings) -> Result<ModelSpec> {
    let name = canonical_name(settings.text("model")?)?;
    settings.default_to("model", name);
    let (theta, x0) = match name {
        "ou" => ("10,2.5", "4"),
        "quadratic" => ("1,-1,-0.5", "0.7"),
        "constant" => ("1", "0"),
        "cir" => ("2,2", "1"),
        _ => ("0.1,-1,-10", "0.04"),
    };
    settings.default_to("theta", theta);
    settings.default_to("x0", x0);
    match name {
        "cir" => settings.default_to("sigma", "0.5"),
        "ait-sahalia" => {
            settings.default_to("sigma1", "0.001");
            settings.default_to("sigma2", "3");
        }
        _ => {}
    }
    let dynamics = match name {
        "ou" => Dynamics::Unit(ou_model()),
        "quadratic" => Dynamics::Unit(quadratic_model()),
        "constant" => Dynamics::Unit(constant_drift_model()),
        "cir" => Dynamics::Volatility(cir_model(settings.positive_real("sigma")?)),
        _ => Dynamics::Volatility(ait_sahalia_model(settings.real("sigma1")?, settings.real("sigma2")?)),
    };
    let theta = Theta::new(settings.reals("theta")?)?;
    let spec = ModelSpec { name: name.to_string(), dynamics, theta, x0: settings.real("x0")? };
    let dim = match &spec.dynamics {
        Dynamics::Unit(m) => m.dim(),
        Dynamics::Volatility(v) => v.drift.dim(),
    };
    if spec.theta.len() != dim {
        bail!("model {name} has {dim} drift coefficients, theta has {}", spec.theta.len());
    }
    Ok(spec)
}

/// The volatility model of a named family at diffusion parameters `vartheta`.
pub fn volatility_family(name: &str, vartheta: &[f64]) -> eml_core::Result<VolatilityModel> {
    match (name, vartheta) {
        ("cir", [s]) => Ok(cir_model(*s)),
        ("ait-sahalia", [s1, s2]) => Ok(ait_sahalia_model(*s1, *s2)),
        _ => Err(eml_core::EmlError::InvalidArgument(format!(
            "model {name} does not take diffusion parameters {vartheta:?}"
        ))),
    }
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn unit_model(&self) -> Result<UnitDiffusionModel> {
        Ok(match &self.dynamics {
            Dynamics::Unit(m) => m.clone(),
            Dynamics::Volatility(vm) => lamperti_transform(vm)?.model,
        })
    }

    /// Unit-volatility model and the series on its scale.
    pub fn to_unit(&self, series: &ObservationSeries) -> Result<(UnitDiffusionModel, ObservationSeries)> {
        match &self.dynamics {
            Dynamics::Unit(m) => Ok((m.clone(), series.clone())),
            Dynamics::Volatility(vm) => {
                let t = lamperti_transform(vm)?;
                let ys = t.map.transform_series(series).context("transforming observations")?;
                Ok((t.model, ys))
            }
        }
    }

    /// Maps a state to the unit-volatility scale.
    pub fn to_unit_state(&self, x: f64) -> Result<f64> {
        match &self.dynamics {
            Dynamics::Unit(_) => Ok(x),
            Dynamics::Volatility(vm) => {
                let y = lamperti_transform(vm)?.map.forward(x);
                if !y.is_finite() {
                    bail!("state {x} is outside the domain of model {}", self.name);
                }
                Ok(y)
            }
        }
    }

    /// `K` observations `Δ` apart from `x0`: exact transitions for OU, Euler
    /// with `substeps` per interval otherwise (on the unit scale for
    /// state-dependent volatility).
    pub fn simulate(&self, delta: f64, k: usize, substeps: usize, rng: &mut PathRng) -> Result<ObservationSeries> {
        let th = &self.theta;
        Ok(match &self.dynamics {
            Dynamics::Unit(_) if self.name == "ou" => ou_exact_simulate(th[0], th[1], self.x0, delta, k, rng)?,
            Dynamics::Unit(m) => euler_simulate(m, th, self.x0, delta, k, substeps, rng)?,
            Dynamics::Volatility(vm) => {
                let t = lamperti_transform(vm)?;
                let y0 = t.map.forward(self.x0);
                let ys = euler_simulate(&t.model, th, y0, delta, k, substeps, rng)?;
                let xs = ys.x.iter().map(|&y| t.map.inverse(y)).collect::<eml_core::Result<Vec<f64>>>()?;
                ObservationSeries::new(xs, delta, 0.0)?
            }
        })
    }
}
