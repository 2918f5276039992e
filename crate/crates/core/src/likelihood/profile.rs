use rayon::prelude::*;

use super::density::sml_transition_density_crn;
use crate::bridge::BridgeConfig;
use crate::eml::eml_estimate;
use crate::error::{EmlError, Result};
use crate::model::{lamperti_transform, ObservationSeries, VolatilityModel};
use crate::numeric;

/// Settings of the simulated likelihood evaluated at each `θ*(ϑ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmlConfig {
    pub m: usize,
    pub s: usize,
    pub seed: u64,
}

impl SmlConfig {
    pub fn new(m: usize, s: usize, seed: u64) -> Result<Self> {
        if m == 0 || s == 0 {
            return Err(EmlError::InvalidArgument(format!("SML needs M ≥ 1 and S ≥ 1 (got M={m}, S={s})")));
        }
        Ok(Self { m, s, seed })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfilePoint {
    pub vartheta: Vec<f64>,
    pub theta_star: Vec<f64>,
    /// Log-likelihood of the original observations (log-Jacobian included).
    pub loglik: f64,
    /// Log-likelihood of the transformed observations.
    pub loglik_raw: f64,
    pub valid: bool,
    pub error: Option<String>,
}

impl ProfilePoint {
    fn invalid(vartheta: &[f64], err: EmlError) -> Self {
        Self {
            vartheta: vartheta.to_vec(),
            theta_star: Vec::new(),
            loglik: f64::NAN,
            loglik_raw: f64::NAN,
            valid: false,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodProfile {
    pub points: Vec<ProfilePoint>,
    pub bridge: BridgeConfig,
    pub sml: SmlConfig,
}

impl LikelihoodProfile {
    /// Valid point with the largest log-likelihood.
    pub fn argmax(&self) -> Option<&ProfilePoint> {
        self.points.iter().filter(|p| p.valid).max_by(|a, b| a.loglik.total_cmp(&b.loglik))
    }

    /// Columns `vartheta_1[,vartheta_2],loglik,theta_star_0..,valid`;
    /// invalid rows carry `NaN` values.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        let nv = self.points.first().map_or(1, |p| p.vartheta.len());
        let nt = self.points.iter().map(|p| p.theta_star.len()).max().unwrap_or(0);
        let mut header: Vec<String> = (1..=nv).map(|i| format!("vartheta_{i}")).collect();
        header.push("loglik".into());
        header.extend((0..nt).map(|i| format!("theta_star_{i}")));
        header.push("valid".into());
        out.push_str(&header.join(","));
        out.push('\n');
        for p in &self.points {
            let mut row: Vec<String> = p.vartheta.iter().map(|v| v.to_string()).collect();
            row.push(p.loglik.to_string());
            row.extend((0..nt).map(|i| p.theta_star.get(i).copied().unwrap_or(f64::NAN).to_string()));
            row.push(p.valid.to_string());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn evaluate<F>(series: &ObservationSeries, family: &F, vartheta: &[f64], bridge: BridgeConfig, sml: SmlConfig) -> Result<ProfilePoint>
where
    F: Fn(&[f64]) -> Result<VolatilityModel>,
{
    let vm = family(vartheta)?;
    let t = lamperti_transform(&vm)?;
    let ys = t.map.transform_series(series)?;
    ys.check_domain(&t.model)?;
    let est = eml_estimate(&ys, &t.model, bridge)?;
    let terms = (0..ys.intervals())
        .map(|k| {
            sml_transition_density_crn(&t.model, &est.theta_star, ys.x[k], ys.x[k + 1], ys.delta, sml.m, sml.s, sml.seed, k)
                .map(|d| d.log_value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let loglik_raw = numeric::compensated_sum(terms);
    let loglik = loglik_raw + t.map.log_jacobian(series);
    if !loglik.is_finite() {
        return Err(EmlError::EstimationFailure(format!("non-finite log-likelihood {loglik}")));
    }
    Ok(ProfilePoint {
        vartheta: vartheta.to_vec(),
        theta_star: est.theta_star.into_vec(),
        loglik,
        loglik_raw,
        valid: true,
        error: None,
    })
}

/// Profiles the simulated log-likelihood over diffusion parameters `ϑ`.
///
/// At each grid point the series is Lamperti-transformed, `θ*(ϑ)` is the EML
/// estimate on the transformed data and the likelihood is evaluated there.
/// Bridge and SML draws depend only on the seeds and the interval index, so
/// all grid points share them. Grid points that fail are kept as invalid rows.
pub fn profile_likelihood<F>(
    series: &ObservationSeries,
    family: F,
    grid: &[Vec<f64>],
    bridge: BridgeConfig,
    sml: SmlConfig,
) -> LikelihoodProfile
where
    F: Fn(&[f64]) -> Result<VolatilityModel> + Sync,
{
    let points = grid
        .par_iter()
        .map(|v| evaluate(series, &family, v, bridge, sml).unwrap_or_else(|e| ProfilePoint::invalid(v, e)))
        .collect();
    LikelihoodProfile { points, bridge, sml }
}
