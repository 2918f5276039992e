use anyhow::{bail, Result};
use eml_core::diagnostics::{
    drift_envelope, histogram, histogram_csv, rn_samples, standard_functionals, theorem3a_check, theorem3a_suite,
    theorem3b_bound,
};
use eml_core::numeric::mean_stderr;
use eml_core::rng::{derive_seed, tag};

use crate::models::{resolve_model, Dynamics};
use crate::output::{csv, write_atomic};
use crate::settings::Settings;
use crate::Outcome;

pub(super) const DEFAULTS: [(&str, &str); 8] = [
    ("model", "ait-sahalia"),
    ("ys", ""),
    ("deltas", "1/26,1/12"),
    ("m", "30"),
    ("s", "10000"),
    ("bins", "200"),
    ("suite", "true"),
    ("suite-s", "10000"),
];

pub(super) fn run(mut settings: Settings) -> Result<Outcome> {
    let spec = resolve_model(&mut settings)?;
    let default_ys = match spec.dynamics {
        Dynamics::Volatility(_) if spec.name == "ait-sahalia" => "0.03,0.04,0.05".to_string(),
        _ => format!("{}", spec.x0),
    };
    settings.default_to("ys", default_ys);
    let seed = settings.seed()?;
    let (steps, samples, bins) = (settings.count("m")?, settings.count("s")?, settings.count("bins")?);
    if steps < 2 || samples < 2 {
        bail!("diagnose needs M ≥ 2 and S ≥ 2");
    }
    let ys = settings.reals("ys")?;
    let deltas = settings.reals("deltas")?;
    let run_suite = match settings.text("suite")? {
        "true" => true,
        "false" => false,
        other => bail!("suite must be true or false, got {other:?}"),
    };
    let dir = super::out_dir(&settings)?;
    let echo = settings.echo();
    let model = spec.unit_model()?;
    let xu = spec.to_unit_state(spec.x0)?;
    let path_mean = &standard_functionals()[0];

    let mut report = echo.iter().map(|l| format!("# {l}")).collect::<Vec<_>>();
    let mut failures = 0;
    for (i, &delta) in deltas.iter().enumerate() {
        if !(delta > 0.0) {
            bail!("bridge horizons must be positive, got {delta}");
        }
        for (j, &y) in ys.iter().enumerate() {
            let key = format!("d{i}_y{j}");
            let result = (|| -> Result<Vec<String>> {
                let yu = spec.to_unit_state(y)?;
                let batch = derive_seed(seed, &[tag::DIAGNOSTIC, i as u64, j as u64]);
                let check = derive_seed(seed, &[tag::DIAGNOSTIC, i as u64, j as u64, 1]);
                let rn = rn_samples(&model, &spec.theta, xu, yu, delta, steps, samples, batch)?;
                let other = rn_samples(&model, &spec.theta, xu, yu, delta, steps, samples, check)?;
                let (ind_mean, se_a) = mean_stderr(&rn.renormalized(other.normalizer).normalized);
                // The independent normalizer carries its own Monte Carlo error.
                let (_, se_b) = mean_stderr(&other.raw);
                let ind_se = se_a.hypot(se_b / other.normalizer);
                let mut comments = echo.clone();
                comments.push(format!("delta={delta}"));
                comments.push(format!("y={y}"));
                let hist = histogram(&rn.normalized, bins);
                write_atomic(&dir.join(format!("hist_{key}.csv")), &histogram_csv(&hist, &comments))?;

                let t3a = theorem3a_check(&model, &spec.theta, xu, yu, delta, path_mean, steps, samples, batch, None)?;
                let spread = 4.0 * delta.sqrt();
                let env = drift_envelope(&model, &spec.theta, xu.min(yu) - spread, xu.max(yu) + spread, 2001)?;
                let bound = theorem3b_bound(&env, delta, t3a.g_norm);
                let in_band = rn.normalized.iter().filter(|v| (0.5..=1.5).contains(*v)).count() as f64 / samples as f64;
                Ok(vec![
                    format!("{key}.delta={delta}"),
                    format!("{key}.y={y}"),
                    format!("{key}.normalizer={}", rn.normalizer),
                    format!("{key}.mean_vs_independent_normalizer={ind_mean}"),
                    format!("{key}.mean_vs_independent_normalizer_se={ind_se}"),
                    format!("{key}.mass_in_0.5_1.5={in_band}"),
                    format!("{key}.theorem3a_lhs={}", t3a.lhs),
                    format!("{key}.theorem3a_rhs={}", t3a.rhs),
                    format!("{key}.theorem3a_verdict={}", t3a.verdict()),
                    format!("{key}.envelope_sup={}", env.sup_val),
                    format!("{key}.envelope_inf={}", env.inf_val),
                    format!("{key}.envelope_may_be_unbounded={}", env.may_be_unbounded),
                    format!("{key}.theorem3b_bound={bound}"),
                ])
            })();
            match result {
                Ok(lines) => report.extend(lines),
                Err(e) => {
                    eprintln!("{key}: {e:#}");
                    failures += 1;
                    report.push(format!("{key}.error={}", format!("{e:#}").replace('\n', " ")));
                }
            }
        }
    }

    if run_suite {
        match theorem3a_suite(30, settings.count("suite-s")?, derive_seed(seed, &[tag::DIAGNOSTIC, u64::MAX])) {
            Ok(suite) => {
                let holds = suite.iter().filter(|(_, r)| r.holds).count();
                report.push(format!("suite.cases={}", suite.len()));
                report.push(format!("suite.holds={holds}"));
                if holds < suite.len() {
                    failures += 1;
                }
                let header: Vec<String> =
                    ["functional_id", "lhs", "lhs_se", "rhs", "verdict"].iter().map(|s| s.to_string()).collect();
                let rows: Vec<Vec<String>> = suite
                    .iter()
                    .map(|(case, r)| {
                        vec![
                            format!("{case}/{}", r.functional),
                            r.lhs.to_string(),
                            r.lhs_se.to_string(),
                            r.rhs.to_string(),
                            r.verdict().to_string(),
                        ]
                    })
                    .collect();
                write_atomic(&dir.join("theorem3a_suite.csv"), &csv(&echo, &header, &rows))?;
            }
            Err(e) => {
                eprintln!("suite: {e:#}");
                failures += 1;
                report.push(format!("suite.error={e}"));
            }
        }
    }
    report.push(String::new());
    write_atomic(&dir.join("diagnose.txt"), &report.join("\n"))?;
    Ok(Outcome { failures })
}
