mod benchmark;
mod diagnose;
mod estimate;
mod profile;
mod simulate;

use std::path::PathBuf;

use anyhow::Result;

use crate::models::MODEL_KEYS;
use crate::output::prepare_dir;
use crate::settings::Settings;
use crate::{Cli, Command, Outcome};

pub use benchmark::{aggregate, BenchmarkRow};

fn resolve(cli: &Cli, command: &str, specific: &[(&str, &str)], model: bool, mut flags: Vec<(&str, Option<String>)>) -> Result<Settings> {
    let mut defaults = vec![("seed", ""), ("out-dir", ".")];
    if model {
        defaults.extend(MODEL_KEYS);
    }
    defaults.extend_from_slice(specific);
    flags.push(("seed", cli.seed.map(|s| s.to_string())));
    flags.push(("out-dir", cli.out_dir.as_ref().map(|p| p.display().to_string())));
    Settings::resolve(command, &defaults, cli.config.as_deref(), flags)
}

fn out_dir(settings: &Settings) -> Result<PathBuf> {
    prepare_dir(&PathBuf::from(settings.text("out-dir")?))
}

pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Simulate { model, k, delta, replications, substeps } => {
            let mut flags = model.flags();
            flags.extend([
                ("k", k.clone()),
                ("delta", delta.clone()),
                ("replications", replications.clone()),
                ("substeps", substeps.clone()),
            ]);
            let s = resolve(cli, "simulate", &simulate::DEFAULTS, true, flags)?;
            simulate::run(s)
        }
        Command::Estimate { model, method, m, s, files } => {
            let mut flags = model.flags();
            flags.extend([("method", method.clone()), ("m", m.clone()), ("s", s.clone())]);
            let settings = resolve(cli, "estimate", &estimate::DEFAULTS, true, flags)?;
            estimate::run(settings, files)
        }
        Command::Benchmark { model, replications, k, delta, m, s, substeps } => {
            let mut flags = model.flags();
            flags.extend([
                ("replications", replications.clone()),
                ("k", k.clone()),
                ("delta", delta.clone()),
                ("m", m.clone()),
                ("s", s.clone()),
                ("substeps", substeps.clone()),
            ]);
            let settings = resolve(cli, "benchmark", &benchmark::DEFAULTS, true, flags)?;
            benchmark::run(settings)
        }
        Command::Profile { model, grid, grid2, m, s, sml_m, sml_s, file } => {
            let flags = vec![
                ("model", model.clone()),
                ("grid", grid.clone()),
                ("grid2", grid2.clone()),
                ("m", m.clone()),
                ("s", s.clone()),
                ("sml-m", sml_m.clone()),
                ("sml-s", sml_s.clone()),
            ];
            let settings = resolve(cli, "profile", &profile::DEFAULTS, false, flags)?;
            profile::run(settings, file)
        }
        Command::Diagnose { model, ys, deltas, m, s, bins, suite, suite_s } => {
            let mut flags = model.flags();
            flags.extend([
                ("ys", ys.clone()),
                ("deltas", deltas.clone()),
                ("m", m.clone()),
                ("s", s.clone()),
                ("bins", bins.clone()),
                ("suite", suite.clone()),
                ("suite-s", suite_s.clone()),
            ]);
            let settings = resolve(cli, "diagnose", &diagnose::DEFAULTS, true, flags)?;
            diagnose::run(settings)
        }
    }
}
