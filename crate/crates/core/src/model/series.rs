use crate::error::{EmlError, Result};

use super::UnitDiffusionModel;

/// `K + 1` observed levels at even spacing `delta` starting at `t0` (years).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    pub x: Vec<f64>,
    pub delta: f64,
    pub t0: f64,
}

impl ObservationSeries {
    pub fn new(x: Vec<f64>, delta: f64, t0: f64) -> Result<Self> {
        if x.len() < 2 {
            return Err(EmlError::InvalidArgument(format!(
                "series needs at least two observations, got {}",
                x.len()
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(EmlError::InvalidArgument(format!("observation spacing must be positive, got {delta}")));
        }
        if let Some((i, v)) = x.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(EmlError::InvalidArgument(format!("observation {i} is not finite ({v})")));
        }
        Ok(Self { x, delta, t0 })
    }

    /// Number of observation intervals `K`.
    pub fn intervals(&self) -> usize {
        self.x.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.delta
    }

    pub fn check_domain(&self, model: &UnitDiffusionModel) -> Result<()> {
        if let Some(lower) = model.domain_lower {
            if let Some(&v) = self.x.iter().find(|&&v| v <= lower) {
                return Err(EmlError::OutsideDomain { value: v, lower });
            }
        }
        Ok(())
    }

    /// Applies a state map to every observation.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::new(self.x.iter().map(|&v| f(v)).collect(), self.delta, self.t0)
    }

    /// `t,x` CSV. `comments` are written first as `#`-prefixed lines.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str("t,x\n");
        for (k, v) in self.x.iter().enumerate() {
            out.push_str(&format!("{},{}\n", self.time(k), v));
        }
        out
    }

    /// Parses `t,x` CSV, skipping `#` lines. The spacing is taken from the
    /// first two times and every later gap must agree with it.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        match rows.next() {
            Some((_, h)) if h.replace(' ', "") == "t,x" => {}
            Some((n, h)) => return Err(EmlError::Parse(format!("line {n}: expected header `t,x`, found `{h}`"))),
            None => return Err(EmlError::Parse("empty series file".into())),
        }
        let mut t = Vec::new();
        let mut x = Vec::new();
        for (n, line) in rows {
            let mut cols = line.split(',');
            let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(EmlError::Parse(format!("line {n}: expected two columns")));
            };
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| EmlError::Parse(format!("line {n}: `{}`: {e}", s.trim())))
            };
            t.push(parse(a)?);
            x.push(parse(b)?);
        }
        if t.len() < 2 {
            return Err(EmlError::Parse("series needs at least two rows".into()));
        }
        let delta = t[1] - t[0];
        for (k, w) in t.windows(2).enumerate() {
            let gap = w[1] - w[0];
            if (gap - delta).abs() > 1e-9 * delta.abs().max(1.0) {
                return Err(EmlError::Parse(format!(
                    "uneven spacing between rows {} and {}: {gap} vs {delta}",
                    k + 1,
                    k + 2
                )));
            }
        }
        // Recover the spacing from the full span to undo accumulated rounding.
        let delta = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        Self::new(x, delta, t[0])
    }
}
