use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use eml_core::bridge::BridgeConfig;
use eml_core::likelihood::{profile_likelihood, SmlConfig};
use eml_core::model::ObservationSeries;
use eml_core::rng::{derive_seed, tag};

use crate::models::{canonical_name, volatility_family};
use crate::output::write_atomic;
use crate::settings::{parse_grid, Settings};
use crate::Outcome;

pub(super) const DEFAULTS: [(&str, &str); 7] = [
    ("model", "cir"),
    ("grid", ""),
    ("grid2", ""),
    ("m", "10"),
    ("s", "100"),
    ("sml-m", "10"),
    ("sml-s", "100"),
];

pub(super) fn run(mut settings: Settings, file: &Path) -> Result<Outcome> {
    let name = canonical_name(settings.text("model")?)?;
    settings.default_to("model", name);
    let grid: Vec<Vec<f64>> = match name {
        "cir" => {
            settings.default_to("grid", "0.1:1.2:12");
            parse_grid(settings.text("grid")?)?.into_iter().map(|v| vec![v]).collect()
        }
        "ait-sahalia" => {
            settings.default_to("grid", "0.0005:0.002:4");
            settings.default_to("grid2", "1:4:4");
            let g1 = parse_grid(settings.text("grid")?)?;
            let g2 = parse_grid(settings.text("grid2")?)?;
            g1.iter().flat_map(|&a| g2.iter().map(move |&b| vec![a, b])).collect()
        }
        other => bail!("profile needs a state-dependent volatility model (cir or ait-sahalia), got {other}"),
    };
    let seed = settings.seed()?;
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let series = ObservationSeries::from_csv(&text)?;
    let bridge = BridgeConfig::new(settings.count("m")?, settings.count("s")?, derive_seed(seed, &[tag::BRIDGE]))?;
    let sml = SmlConfig::new(settings.count("sml-m")?, settings.count("sml-s")?, derive_seed(seed, &[tag::SML]))?;
    let dir = super::out_dir(&settings)?;

    let profile = profile_likelihood(&series, |v| volatility_family(name, v), &grid, bridge, sml);
    let mut comments = settings.echo();
    comments.push("loglik includes the log-Jacobian of the transform (original data scale)".into());
    if let Some(best) = profile.argmax() {
        comments.push(format!("argmax={}", best.vartheta.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")));
    }
    let mut invalid = 0;
    for p in profile.points.iter().filter(|p| !p.valid) {
        invalid += 1;
        eprintln!("grid point {:?} invalid: {}", p.vartheta, p.error.as_deref().unwrap_or("unknown"));
    }
    write_atomic(&dir.join("profile.csv"), &profile.to_csv(&comments))?;
    // Invalid grid points are expected near domain edges; only a profile
    // with no valid point at all counts as a failure.
    Ok(Outcome { failures: usize::from(invalid == profile.points.len()) })
}
