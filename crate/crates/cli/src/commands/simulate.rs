use anyhow::{bail, Result};
use eml_core::rng::{self, tag};
use eml_core::EmlError;
use rayon::prelude::*;

use crate::models::{resolve_model, ModelSpec};
use crate::output::write_atomic;
use crate::settings::Settings;
use crate::Outcome;

pub(super) const DEFAULTS: [(&str, &str); 4] = [("k", "499"), ("delta", "1/12"), ("replications", "1"), ("substeps", "100")];

/// Fresh draws are taken when a simulated path leaves the domain or diverges.
pub(crate) const MAX_ATTEMPTS: u64 = 20;

/// Simulates replicate `r`, returning the series and the attempt that succeeded.
pub(crate) fn simulate_replicate(
    spec: &ModelSpec,
    seed: u64,
    r: usize,
    delta: f64,
    k: usize,
    substeps: usize,
) -> Result<(eml_core::model::ObservationSeries, u64)> {
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let mut g = rng::substream(seed, &[tag::SIMULATE, r as u64, attempt]);
        match spec.simulate(delta, k, substeps, &mut g) {
            Ok(s) => return Ok((s, attempt)),
            Err(e) => match e.downcast_ref::<EmlError>() {
                Some(EmlError::DomainExit { .. } | EmlError::PathDiverged { .. }) => last = Some(e),
                _ => return Err(e),
            },
        }
    }
    match last {
        Some(e) => Err(e.context(format!("replicate {r}: no valid path in {MAX_ATTEMPTS} attempts"))),
        None => bail!("replicate {r}: simulation failed"),
    }
}

pub(super) fn run(mut settings: Settings) -> Result<Outcome> {
    let spec = resolve_model(&mut settings)?;
    let seed = settings.seed()?;
    let (k, delta) = (settings.count("k")?, settings.positive_real("delta")?);
    let (reps, substeps) = (settings.count("replications")?, settings.count("substeps")?);
    let dir = super::out_dir(&settings)?;
    let echo = settings.echo();
    let results: Vec<Result<()>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let (series, attempt) = simulate_replicate(&spec, seed, r, delta, k, substeps)?;
            let mut comments = echo.clone();
            comments.push(format!("replicate={r}"));
            comments.push(format!("attempt={attempt}"));
            write_atomic(&dir.join(format!("series_{r:04}.csv")), &series.to_csv(&comments))
        })
        .collect();
    let mut failures = 0;
    for (r, res) in results.iter().enumerate() {
        if let Err(e) = res {
            eprintln!("replicate {r}: {e:#}");
            failures += 1;
        }
    }
    Ok(Outcome { failures })
}
