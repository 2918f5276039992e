use anyhow::{bail, Result};
use eml_core::numeric::mean_var;
use eml_core::rng::{derive_seed, tag};
use rayon::prelude::*;

use super::estimate::{estimate_series, Method};
use super::simulate::simulate_replicate;
use crate::models::resolve_model;
use crate::output::{cells, csv, error_cell, write_atomic};
use crate::settings::Settings;
use crate::Outcome;

pub(super) const DEFAULTS: [(&str, &str); 6] =
    [("replications", "200"), ("k", "499"), ("delta", "1/12"), ("m", "31"), ("s", "200"), ("substeps", "100")];

/// Mean bias and standard deviation of one estimator for one coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub estimator: String,
    pub parameter: usize,
    pub true_value: f64,
    pub mean_bias: f64,
    pub std_dev: f64,
    pub n: usize,
}

/// Bias is the mean of `θ̂ − θ₀` over replicates; the spread is the sample
/// standard deviation of `θ̂`.
pub fn aggregate(estimator: &str, truth: &[f64], estimates: &[Vec<f64>]) -> Vec<BenchmarkRow> {
    truth
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let col: Vec<f64> = estimates.iter().map(|e| e[i]).collect();
            let (m, v) = mean_var(&col);
            BenchmarkRow {
                estimator: estimator.to_string(),
                parameter: i,
                true_value: t,
                mean_bias: m - t,
                std_dev: v.sqrt(),
                n: col.len(),
            }
        })
        .collect()
}

pub(super) fn run(mut settings: Settings) -> Result<Outcome> {
    let spec = resolve_model(&mut settings)?;
    if !matches!(spec.name.as_str(), "ou" | "quadratic") {
        bail!("benchmark supports models ou (A) and quadratic (B)");
    }
    let seed = settings.seed()?;
    let (reps, k, delta) = (settings.count("replications")?, settings.count("k")?, settings.positive_real("delta")?);
    let (m, substeps) = (settings.count("m")?, settings.count("substeps")?);
    let path_counts = settings.counts("s")?;
    let dir = super::out_dir(&settings)?;

    let mut estimators: Vec<(String, Method)> =
        path_counts.iter().map(|&s| (format!("eml_s{s}"), Method::Eml { m, s })).collect();
    if spec.name == "ou" {
        estimators.push(("ml".into(), Method::OuMl));
    }
    estimators.push(("regression".into(), Method::Regression));

    let started = std::time::Instant::now();
    let per_rep: Vec<(u64, Vec<Result<Vec<f64>>>)> = (0..reps)
        .into_par_iter()
        .map(|r| match simulate_replicate(&spec, seed, r, delta, k, substeps) {
            Ok((series, attempt)) => {
                let bridge_seed = derive_seed(seed, &[tag::BRIDGE, r as u64]);
                let est = estimators.iter().map(|(_, meth)| estimate_series(&spec, &series, *meth, bridge_seed)).collect();
                (attempt, est)
            }
            Err(e) => {
                let msg = format!("{e:#}");
                (0, estimators.iter().map(|_| Err(anyhow::anyhow!("{msg}"))).collect())
            }
        })
        .collect();
    eprintln!("benchmark: {reps} replicates in {:.1}s", started.elapsed().as_secs_f64());

    let n = spec.dim();
    let mut failures = 0;
    let mut header = vec!["replicate".to_string(), "attempt".into(), "estimator".into(), "status".into()];
    header.extend((0..n).map(|i| format!("theta_{i}")));
    let mut rows = Vec::new();
    let mut collected: Vec<Vec<Vec<f64>>> = vec![Vec::new(); estimators.len()];
    for (r, (attempt, ests)) in per_rep.iter().enumerate() {
        for (j, res) in ests.iter().enumerate() {
            let mut row = vec![r.to_string(), attempt.to_string(), estimators[j].0.clone()];
            match res {
                Ok(theta) => {
                    row.push("ok".into());
                    row.extend(cells(theta));
                    collected[j].push(theta.clone());
                }
                Err(e) => {
                    eprintln!("replicate {r} {}: {e:#}", estimators[j].0);
                    failures += 1;
                    row.push(format!("error: {}", error_cell(e)));
                    row.extend((0..n).map(|_| "NaN".to_string()));
                }
            }
            rows.push(row);
        }
    }
    let echo = settings.echo();
    write_atomic(&dir.join("replicates.csv"), &csv(&echo, &header, &rows))?;

    let table: Vec<Vec<String>> = estimators
        .iter()
        .zip(&collected)
        .flat_map(|((name, _), ests)| aggregate(name, spec.theta.as_slice(), ests))
        .map(|row| {
            vec![
                row.estimator,
                format!("a{}", row.parameter),
                row.true_value.to_string(),
                row.mean_bias.to_string(),
                row.std_dev.to_string(),
                row.n.to_string(),
            ]
        })
        .collect();
    let header: Vec<String> =
        ["estimator", "parameter", "true_value", "mean_bias", "std_dev", "n"].iter().map(|s| s.to_string()).collect();
    write_atomic(&dir.join("table1.csv"), &csv(&echo, &header, &table))?;
    Ok(Outcome { failures })
}
