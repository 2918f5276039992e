//! Flat `key=value` settings: defaults, then a config file, then flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

/// Keys that never appear in output headers: they must not change results.
const NOT_ECHOED: [&str; 3] = ["threads", "out-dir", "config"];

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    command: String,
    values: BTreeMap<String, String>,
}

/// Parses `key=value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key=value, got {line:?}", i + 1))?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

impl Settings {
    /// `defaults` lists every key the command accepts. Config-file keys
    /// outside that list are rejected; flags override the file.
    pub fn resolve(
        command: &str,
        defaults: &[(&str, &str)],
        config: Option<&Path>,
        flags: Vec<(&str, Option<String>)>,
    ) -> Result<Self> {
        let mut values: BTreeMap<String, String> =
            defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        if let Some(path) = config {
            let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            for (k, v) in parse_config(&text)? {
                if !values.contains_key(&k) {
                    bail!("config key {k:?} is not used by `{command}`");
                }
                values.insert(k, v);
            }
        }
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        }
        Ok(Self { command: command.to_string(), values })
    }

    pub fn text(&self, key: &str) -> Result<&str> {
        self.values.get(key).map(String::as_str).ok_or_else(|| anyhow!("missing setting {key}"))
    }

    /// Fills a key whose default depends on other settings.
    pub fn default_to(&mut self, key: &str, value: impl Into<String>) {
        let entry = self.values.entry(key.to_string()).or_default();
        if entry.is_empty() {
            *entry = value.into();
        }
    }

    pub fn real(&self, key: &str) -> Result<f64> {
        parse_real(self.text(key)?).with_context(|| format!("setting {key}"))
    }

    pub fn positive_real(&self, key: &str) -> Result<f64> {
        let v = self.real(key)?;
        if !(v > 0.0) {
            bail!("setting {key} must be positive, got {v}");
        }
        Ok(v)
    }

    pub fn count(&self, key: &str) -> Result<usize> {
        let text = self.text(key)?;
        let v: usize = text.parse().with_context(|| format!("setting {key}: {text:?} is not a count"))?;
        if v == 0 {
            bail!("setting {key} must be positive");
        }
        Ok(v)
    }

    pub fn seed(&self) -> Result<u64> {
        let text = self.text("seed")?;
        if text.is_empty() {
            bail!("a seed is required (--seed or seed= in the config file)");
        }
        text.parse().with_context(|| format!("seed {text:?} is not an unsigned integer"))
    }

    pub fn reals(&self, key: &str) -> Result<Vec<f64>> {
        parse_reals(self.text(key)?).with_context(|| format!("setting {key}"))
    }

    pub fn counts(&self, key: &str) -> Result<Vec<usize>> {
        self.text(key)?
            .split(',')
            .map(|t| {
                let v: usize = t.trim().parse().with_context(|| format!("setting {key}: {t:?} is not a count"))?;
                if v == 0 {
                    bail!("setting {key}: counts must be positive");
                }
                Ok(v)
            })
            .collect()
    }

    /// Header lines: the command, then every non-empty result-relevant setting.
    pub fn echo(&self) -> Vec<String> {
        let mut out = vec![format!("eml {}", self.command)];
        out.extend(
            self.values
                .iter()
                .filter(|(k, v)| !v.is_empty() && !NOT_ECHOED.contains(&k.as_str()))
                .map(|(k, v)| format!("{k}={v}")),
        );
        out
    }
}

/// A decimal number or a fraction such as `1/12`.
pub fn parse_real(text: &str) -> Result<f64> {
    let text = text.trim();
    let v = match text.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().with_context(|| format!("{text:?} is not a number"))?;
            let d: f64 = d.trim().parse().with_context(|| format!("{text:?} is not a number"))?;
            n / d
        }
        None => text.parse().with_context(|| format!("{text:?} is not a number"))?,
    };
    if !v.is_finite() {
        bail!("{text:?} is not finite");
    }
    Ok(v)
}

pub fn parse_reals(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(parse_real).collect()
}

/// `lo:hi:n` as `n` evenly spaced points including both ends, or a comma list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [lo, hi, n] => {
            let (lo, hi) = (parse_real(lo)?, parse_real(hi)?);
            let n: usize = n.trim().parse().with_context(|| format!("grid {text:?}: bad point count"))?;
            if n == 0 {
                bail!("grid {text:?} has no points");
            }
            if n == 1 {
                return Ok(vec![lo]);
            }
            Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).map(round_grid).collect())
        }
        [_] => parse_reals(text),
        _ => bail!("grid {text:?}: expected lo:hi:n or a comma list"),
    }
}

/// Removes representation noise so `0.1:1.2:12` prints as 0.1, 0.2, ….
fn round_grid(v: f64) -> f64 {
    let r = (v * 1e12).round() / 1e12;
    if (r - v).abs() <= 1e-12 * v.abs().max(1.0) {
        r
    } else {
        v
    }
}
