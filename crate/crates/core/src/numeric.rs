//! Small numerical helpers shared across the crate.

use std::f64::consts::PI;

use crate::error::{EmlError, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Normal density with the given mean and variance.
#[inline]
pub fn normal_pdf(y: f64, mean: f64, var: f64) -> f64 {
    let d = y - mean;
    (-d * d / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

#[inline]
pub fn normal_log_pdf(y: f64, mean: f64, var: f64) -> f64 {
    let d = y - mean;
    -LN_SQRT_2PI - 0.5 * var.ln() - d * d / (2.0 * var)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another partial sum into this one, keeping both compensation terms.
    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Sample mean and unbiased sample variance.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    if values.iter().all(|&v| v == values[0]) {
        return (values[0], 0.0);
    }
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, ss / (n - 1) as f64)
}

/// Sample mean; exact when all values are equal.
pub fn mean(values: &[f64]) -> f64 {
    mean_var(values).0
}

/// Mean and its Monte Carlo standard error.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let (m, v) = mean_var(values);
    (m, (v / values.len() as f64).sqrt())
}

/// Central-difference step used for user-supplied functions.
#[inline]
pub fn fd_step(x: f64) -> f64 {
    1e-6_f64.max(1e-6 * x.abs())
}

pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = fd_step(x);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Adaptive Simpson quadrature to the requested relative tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    let (a, b, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
    let fa = f(a);
    let fb = f(b);
    let c = 0.5 * (a + b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    let tol = (rel_tol * scale).max(1e-300);
    let v = simpson_step(&f, a, b, fa, fc, fb, whole, tol, 50)
        .ok_or(EmlError::Quadrature { lo, hi })?;
    if !v.is_finite() {
        return Err(EmlError::Quadrature { lo, hi });
    }
    Ok(sign * v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fc: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Option<f64> {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return None;
    }
    if delta.abs() <= 15.0 * tol || depth == 0 {
        if depth == 0 && delta.abs() > 15.0 * tol * 1e3 {
            return None;
        }
        return Some(left + right + delta / 15.0);
    }
    Some(
        simpson_step(f, a, c, fa, fd, fc, left, 0.5 * tol, depth - 1)?
            + simpson_step(f, c, b, fc, fe, fb, right, 0.5 * tol, depth - 1)?,
    )
}

/// Solves `f(x) = target` for increasing `f` by bracket expansion and bisection.
///
/// `lower` is an optional hard lower bound of the search domain.
pub fn invert_increasing<F: Fn(f64) -> f64>(
    f: F,
    target: f64,
    start: f64,
    lower: Option<f64>,
) -> Option<f64> {
    let mut lo = start;
    let mut hi = start;
    let mut step = 1.0_f64.max(start.abs());
    let mut iters = 0;
    while f(lo) > target {
        iters += 1;
        if iters > 200 {
            return None;
        }
        lo = match lower {
            Some(l) => l + 0.5 * (lo - l),
            None => lo - step,
        };
        step *= 2.0;
    }
    step = 1.0_f64.max(start.abs());
    iters = 0;
    while f(hi) < target {
        iters += 1;
        if iters > 200 {
            return None;
        }
        hi += step;
        step *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
