use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use eml_core::bridge::BridgeConfig;
use eml_core::eml::{eml_estimate, regression_estimate};
use eml_core::likelihood::ou_ml_fit;
use eml_core::model::ObservationSeries;
use eml_core::rng::{derive_seed, tag};
use rayon::prelude::*;

use crate::models::{resolve_model, ModelSpec};
use crate::output::{cells, csv, error_cell, write_atomic};
use crate::settings::Settings;
use crate::Outcome;

pub(super) const DEFAULTS: [(&str, &str); 3] = [("method", "eml"), ("m", "31"), ("s", "200")];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Method {
    Eml { m: usize, s: usize },
    Regression,
    OuMl,
}

impl Method {
    pub(crate) fn parse(name: &str, m: usize, s: usize) -> Result<Self> {
        Ok(match name {
            "eml" => Method::Eml { m, s },
            "regression" => Method::Regression,
            "ou-ml" | "ml" => Method::OuMl,
            other => bail!("unknown method {other:?}; expected eml, regression or ou-ml"),
        })
    }
}

/// Drift coefficients of one series; `bridge_seed` keys the EML bridge paths.
pub(crate) fn estimate_series(spec: &ModelSpec, series: &ObservationSeries, method: Method, bridge_seed: u64) -> Result<Vec<f64>> {
    let (model, unit) = spec.to_unit(series)?;
    Ok(match method {
        Method::Eml { m, s } => eml_estimate(&unit, &model, BridgeConfig::new(m, s, bridge_seed)?)?.theta_star.into_vec(),
        Method::Regression => regression_estimate(&unit, &model)?.into_vec(),
        Method::OuMl => {
            if spec.name != "ou" {
                bail!("exact maximum likelihood is only available for the ou model");
            }
            let fit = ou_ml_fit(&unit)?;
            vec![fit.a0, fit.a1]
        }
    })
}

fn load(path: &Path) -> Result<ObservationSeries> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(ObservationSeries::from_csv(&text)?)
}

fn display_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

pub(super) fn run(mut settings: Settings, files: &[PathBuf]) -> Result<Outcome> {
    let spec = resolve_model(&mut settings)?;
    let seed = settings.seed()?;
    let method = Method::parse(settings.text("method")?, settings.count("m")?, settings.count("s")?)?;
    let dir = super::out_dir(&settings)?;
    let results: Vec<Result<Vec<f64>>> = files
        .par_iter()
        .enumerate()
        .map(|(i, f)| estimate_series(&spec, &load(f)?, method, derive_seed(seed, &[tag::BRIDGE, i as u64])))
        .collect();

    let n = spec.dim();
    let mut header = vec!["file".to_string(), "status".to_string()];
    header.extend((0..n).map(|i| format!("theta_{i}")));
    let mut failures = 0;
    let rows: Vec<Vec<String>> = files
        .iter()
        .zip(&results)
        .map(|(f, r)| {
            let mut row = vec![display_name(f)];
            match r {
                Ok(theta) => {
                    row.push("ok".into());
                    row.extend(cells(theta));
                }
                Err(e) => {
                    eprintln!("{}: {e:#}", f.display());
                    failures += 1;
                    row.push(format!("error: {}", error_cell(e)));
                    row.extend((0..n).map(|_| "NaN".to_string()));
                }
            }
            row
        })
        .collect();
    write_atomic(&dir.join("estimates.csv"), &csv(&settings.echo(), &header, &rows))?;
    Ok(Outcome { failures })
}
