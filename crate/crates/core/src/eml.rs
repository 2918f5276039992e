//! One-step expected-maximum-likelihood estimation.
//!
//! With the diffusion bridge replaced by the Brownian bridge, the
//! approximate complete log-likelihood is the quadratic
//! `Q(θ) = θ·b − ½ θᵀAθ + const` with
//!
//! ```text
//! A_ij = δ Σ_{k,m,s} fᵢ(u) fⱼ(u)
//! bᵢ   =   Σ_{k,m,s} (u_m − u_{m−1} − g(u) δ) fᵢ(u),      u = u_{m−1}
//! ```
//!
//! so the global maximiser solves `Aθ = b` directly.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::bridge::{fill_bridge_path, BridgeConfig, BridgeLattice};
use crate::error::{EmlError, Result};
use crate::model::{ObservationSeries, Theta, UnitDiffusionModel};
use crate::numeric::CompensatedSum;

/// Reciprocal condition numbers below this are treated as singular.
pub const RCOND_THRESHOLD: f64 = 1e-12;
/// Relative residual accepted from the linear solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalEquations {
    /// Row-major `(N+1)×(N+1)` symmetric matrix.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub n_terms: u64,
    pub basis: Vec<String>,
}

impl NormalEquations {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let n = b.len();
        if a.len() != n * n {
            return Err(EmlError::InvalidArgument(format!("matrix has {} entries, expected {}", a.len(), n * n)));
        }
        let basis = (0..n).map(|i| format!("f{i}")).collect();
        Ok(Self { a, b, n_terms: 0, basis })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn a_at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.dim() + j]
    }

    /// `θ·b − ½ θᵀAθ`.
    pub fn objective(&self, theta: &[f64]) -> f64 {
        let n = self.dim();
        let mut lin = 0.0;
        let mut quad = 0.0;
        for i in 0..n {
            lin += theta[i] * self.b[i];
            for j in 0..n {
                quad += theta[i] * self.a_at(i, j) * theta[j];
            }
        }
        lin - 0.5 * quad
    }
}

/// Compensated per-interval sums of `Σ fᵢfⱼ` (upper triangle) and `bᵢ`.
#[derive(Debug, Clone)]
struct Partial {
    n: usize,
    a: Vec<CompensatedSum>,
    b: Vec<CompensatedSum>,
    terms: u64,
}

impl Partial {
    fn new(n: usize) -> Self {
        Self { n, a: vec![CompensatedSum::new(); n * (n + 1) / 2], b: vec![CompensatedSum::new(); n], terms: 0 }
    }

    fn merge(&mut self, other: &Partial) {
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            x.merge(y);
        }
        for (x, y) in self.b.iter_mut().zip(&other.b) {
            x.merge(y);
        }
        self.terms += other.terms;
    }
}

struct PathAccumulator<'a> {
    model: &'a UnitDiffusionModel,
    delta: f64,
    clamp: Option<f64>,
    f: Vec<f64>,
}

impl<'a> PathAccumulator<'a> {
    fn new(model: &'a UnitDiffusionModel, delta: f64, clamp: Option<f64>) -> Self {
        Self { model, delta, clamp, f: vec![0.0; model.dim()] }
    }

    fn add_path(&mut self, path: &[f64], k: usize, s: usize, acc: &mut Partial) -> Result<()> {
        let n = acc.n;
        for m in 1..path.len() {
            let prev = path[m - 1];
            let u = match (self.clamp, self.model.domain_lower) {
                (Some(eps), Some(lower)) => prev.max(lower + eps),
                _ => prev,
            };
            let g = self.model.offset.value(u);
            if !g.is_finite() {
                return Err(EmlError::NonFiniteBasis { k, s, m: m - 1, state: prev });
            }
            for (fi, basis) in self.f.iter_mut().zip(&self.model.basis) {
                *fi = basis.value(u);
                if !fi.is_finite() {
                    return Err(EmlError::NonFiniteBasis { k, s, m: m - 1, state: prev });
                }
            }
            let inc = path[m] - prev - g * self.delta;
            let mut idx = 0;
            for i in 0..n {
                for j in i..n {
                    acc.a[idx].add(self.f[i] * self.f[j]);
                    idx += 1;
                }
                acc.b[i].add(inc * self.f[i]);
            }
            acc.terms += 1;
        }
        Ok(())
    }
}

fn finish(partials: Vec<Partial>, model: &UnitDiffusionModel, delta: f64) -> NormalEquations {
    let n = model.dim();
    let mut total = Partial::new(n);
    for p in &partials {
        total.merge(p);
    }
    let mut a = vec![0.0; n * n];
    let mut idx = 0;
    for i in 0..n {
        for j in i..n {
            let v = delta * total.a[idx].value();
            a[i * n + j] = v;
            a[j * n + i] = v;
            idx += 1;
        }
    }
    NormalEquations {
        a,
        b: total.b.iter().map(CompensatedSum::value).collect(),
        n_terms: total.terms,
        basis: model.basis.iter().map(|f| f.label().to_string()).collect(),
    }
}

/// Builds `A` and `b` from a stored lattice.
pub fn accumulate_normal_equations(lattice: &BridgeLattice, model: &UnitDiffusionModel) -> Result<NormalEquations> {
    let cfg = lattice.config;
    let delta = cfg.step(lattice.delta_obs);
    let partials = (0..lattice.intervals())
        .into_par_iter()
        .map(|k| {
            let mut acc = Partial::new(model.dim());
            let mut pa = PathAccumulator::new(model, delta, cfg.clamp_to_domain);
            for s in 0..cfg.s {
                pa.add_path(lattice.path(k, s), k, s, &mut acc)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(partials, model, delta))
}

/// Same sums as [`accumulate_normal_equations`] over
/// `build_lattice(series, config)`, without storing the paths.
pub fn accumulate_streaming(
    series: &ObservationSeries,
    model: &UnitDiffusionModel,
    config: BridgeConfig,
) -> Result<NormalEquations> {
    let delta = config.step(series.delta);
    let partials = (0..series.intervals())
        .into_par_iter()
        .map(|k| {
            let mut acc = Partial::new(model.dim());
            let mut pa = PathAccumulator::new(model, delta, config.clamp_to_domain);
            let mut buf = vec![0.0; config.m + 1];
            for s in 0..config.s {
                fill_bridge_path(series.x[k], series.x[k + 1], delta, &mut config.path_rng(k, s), &mut buf);
                pa.add_path(&buf, k, s, &mut acc)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(partials, model, delta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub theta: Theta,
    /// `λ_max / λ_min` of `A`.
    pub condition: f64,
    pub min_eigenvalue: f64,
}

/// Solves `Aθ = b` by Cholesky with one step of iterative refinement.
pub fn solve_theta(ne: &NormalEquations) -> Result<Solution> {
    let n = ne.dim();
    let a = DMatrix::from_row_slice(n, n, &ne.a);
    for i in 0..n {
        for j in 0..i {
            let (x, y) = (a[(i, j)], a[(j, i)]);
            if (x - y).abs() > 1e-12 * (x.abs() + y.abs()).max(f64::MIN_POSITIVE) {
                return Err(EmlError::InvalidArgument(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    if a.iter().chain(&ne.b).any(|v| !v.is_finite()) {
        return Err(EmlError::InvalidArgument("normal equations contain non-finite entries".into()));
    }
    let singular = |rcond: f64| EmlError::Singular { rcond, basis: ne.basis.join(", ") };

    let eig = a.clone().symmetric_eigen().eigenvalues;
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let rcond = if max > 0.0 { (min / max).max(0.0) } else { 0.0 };
    if rcond < RCOND_THRESHOLD {
        return Err(singular(rcond));
    }
    let chol = a.clone().cholesky().ok_or_else(|| singular(rcond))?;
    let b = DVector::from_column_slice(&ne.b);
    let mut theta = chol.solve(&b);
    let r = residual(&ne.a, &ne.b, theta.as_slice());
    theta += chol.solve(&DVector::from_vec(r));
    let r = residual(&ne.a, &ne.b, theta.as_slice());
    let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let bnorm = b.norm();
    if rnorm > RESIDUAL_TOLERANCE * bnorm {
        return Err(EmlError::Residual { residual: rnorm, tolerance: RESIDUAL_TOLERANCE * bnorm });
    }
    Ok(Solution { theta: Theta::new(theta.as_slice().to_vec())?, condition: max / min, min_eigenvalue: min })
}

/// `b − Aθ` with compensated products and sums.
fn residual(a: &[f64], b: &[f64], theta: &[f64]) -> Vec<f64> {
    let n = b.len();
    (0..n)
        .map(|i| {
            let mut acc = CompensatedSum::new();
            acc.add(b[i]);
            for j in 0..n {
                let p = -a[i * n + j] * theta[j];
                let err = (-a[i * n + j]).mul_add(theta[j], -p);
                acc.add(p);
                acc.add(err);
            }
            acc.value()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub theta_star: Theta,
    pub condition_estimate: f64,
    pub min_eigenvalue: f64,
    pub n_terms: u64,
    pub config: BridgeConfig,
}

/// Bridge sampling, accumulation and the linear solve in one pass.
pub fn eml_estimate(
    series: &ObservationSeries,
    model: &UnitDiffusionModel,
    config: BridgeConfig,
) -> Result<EstimationResult> {
    if config.clamp_to_domain.is_none() {
        series.check_domain(model)?;
    }
    let ne = accumulate_streaming(series, model, config)?;
    let sol = solve_theta(&ne)?;
    Ok(EstimationResult {
        theta_star: sol.theta,
        condition_estimate: sol.condition,
        min_eigenvalue: sol.min_eigenvalue,
        n_terms: ne.n_terms,
        config,
    })
}

/// Least squares of `x_k − x_{k−1} − g(x_{k−1})Δ` on `Δ·fᵢ(x_{k−1})`, i.e. EML
/// without auxiliary points.
pub fn regression_estimate(series: &ObservationSeries, model: &UnitDiffusionModel) -> Result<Theta> {
    if series.intervals() < model.dim() {
        return Err(EmlError::InvalidArgument(format!(
            "regression needs at least {} intervals, got {}",
            model.dim(),
            series.intervals()
        )));
    }
    let ne = accumulate_streaming(series, model, BridgeConfig::new(1, 1, 0)?)?;
    Ok(solve_theta(&ne)?.theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::build_lattice;
    use crate::model::{ou_model, quadratic_model, ScalarFn};
    use approx::assert_relative_eq;

    fn constant_model() -> UnitDiffusionModel {
        UnitDiffusionModel::new("c", ScalarFn::zero(), vec![ScalarFn::power(1.0, 0)])
    }

    /// Independent scalar triple sum over (k, s, m).
    fn brute_force(lat: &BridgeLattice, model: &UnitDiffusionModel) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = model.dim();
        let cfg = lat.config;
        let delta = lat.delta_obs / cfg.m as f64;
        let mut a = vec![vec![0.0; n]; n];
        let mut b = vec![0.0; n];
        for k in 0..lat.intervals() {
            for s in 0..cfg.s {
                for m in 1..=cfg.m {
                    let u0 = lat.get(k, s, m - 1);
                    let u1 = lat.get(k, s, m);
                    for i in 0..n {
                        let fi = model.basis[i].value(u0);
                        for j in 0..n {
                            a[i][j] += delta * fi * model.basis[j].value(u0);
                        }
                        b[i] += (u1 - u0 - model.offset.value(u0) * delta) * fi;
                    }
                }
            }
        }
        (a, b)
    }

    #[test]
    fn single_increment_gives_mean_rate() {
        let series = ObservationSeries::new(vec![0.0, 1.0], 0.1, 0.0).unwrap();
        let lat = build_lattice(&series, BridgeConfig::new(1, 1, 0).unwrap());
        let ne = accumulate_normal_equations(&lat, &constant_model()).unwrap();
        assert_relative_eq!(ne.a[0], 0.1);
        assert_eq!(ne.b, vec![1.0]);
        assert_relative_eq!(solve_theta(&ne).unwrap().theta[0], 10.0, epsilon = 1e-12);
    }

    #[test]
    fn hand_lattice_matches_brute_force() {
        let cfg = BridgeConfig::new(3, 2, 0).unwrap();
        let values = vec![
            0.5, 0.7, 0.4, 0.9, // k=0 s=0
            0.5, 0.2, 0.6, 0.9, // k=0 s=1
            0.9, 1.3, 1.1, 0.8, // k=1 s=0
            0.9, 0.6, 0.75, 0.8, // k=1 s=1
        ];
        let lat = BridgeLattice::from_values(values, 2, cfg, 0.3).unwrap();
        for model in [quadratic_model(), ou_model()] {
            let ne = accumulate_normal_equations(&lat, &model).unwrap();
            let (a, b) = brute_force(&lat, &model);
            for i in 0..model.dim() {
                for j in 0..model.dim() {
                    assert!((ne.a_at(i, j) - a[i][j]).abs() < 1e-12);
                }
                assert!((ne.b[i] - b[i]).abs() < 1e-12);
            }
            assert_eq!(ne.n_terms, 12);
        }
    }

    #[test]
    fn offset_enters_with_step_length() {
        let cfg = BridgeConfig::new(2, 1, 0).unwrap();
        let lat = BridgeLattice::from_values(vec![1.0, 2.0, 4.0], 1, cfg, 1.0).unwrap();
        let model = UnitDiffusionModel::new("g", ScalarFn::power(1.0, 1), vec![ScalarFn::power(1.0, 0)]);
        let ne = accumulate_normal_equations(&lat, &model).unwrap();
        // (2 − 1 − 1·0.5) + (4 − 2 − 2·0.5)
        assert_relative_eq!(ne.b[0], 1.5);
        let (_, b) = brute_force(&lat, &model);
        assert_relative_eq!(ne.b[0], b[0]);
    }

    #[test]
    fn duplicated_paths_double_sums_and_keep_theta() {
        let series = ObservationSeries::new(vec![4.0, 4.3, 3.9, 4.1, 4.6], 1.0 / 12.0, 0.0).unwrap();
        let cfg = BridgeConfig::new(5, 3, 11).unwrap();
        let lat = build_lattice(&series, cfg);
        let mut doubled = Vec::new();
        for k in 0..lat.intervals() {
            for _ in 0..2 {
                doubled.extend_from_slice(lat.interval(k));
            }
        }
        let lat2 = BridgeLattice::from_values(doubled, lat.intervals(), BridgeConfig { s: 6, ..cfg }, lat.delta_obs).unwrap();
        let m = ou_model();
        let ne1 = accumulate_normal_equations(&lat, &m).unwrap();
        let ne2 = accumulate_normal_equations(&lat2, &m).unwrap();
        for (x, y) in ne1.a.iter().zip(&ne2.a).chain(ne1.b.iter().zip(&ne2.b)) {
            assert_relative_eq!(2.0 * x, *y, max_relative = 1e-13);
        }
        let t1 = solve_theta(&ne1).unwrap().theta;
        let t2 = solve_theta(&ne2).unwrap().theta;
        for i in 0..2 {
            assert_relative_eq!(t1[i], t2[i], max_relative = 1e-10);
        }
    }

    #[test]
    fn solve_examples() {
        let id = NormalEquations::new(vec![1.0, 0.0, 0.0, 1.0], vec![3.0, -1.0]).unwrap();
        assert_eq!(solve_theta(&id).unwrap().theta.as_slice(), &[3.0, -1.0]);
        let ne = NormalEquations::new(vec![2.0, 1.0, 1.0, 2.0], vec![3.0, 3.0]).unwrap();
        let th = solve_theta(&ne).unwrap().theta;
        assert_relative_eq!(th[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(th[1], 1.0, epsilon = 1e-14);
        let ne = NormalEquations::new(vec![1.0, 1.0, 1.0, 1.0], vec![1.0, 2.0]).unwrap();
        let err = solve_theta(&ne).unwrap_err();
        assert!(matches!(err, EmlError::Singular { .. }));
        assert!(err.to_string().contains("f0, f1"));
    }

    #[test]
    fn dependent_basis_is_named_in_error() {
        let model = UnitDiffusionModel::new("dup", ScalarFn::zero(), vec![ScalarFn::power(1.0, 1), ScalarFn::power(2.0, 1)]);
        let series = ObservationSeries::new(vec![0.1, 0.5, 0.2, 0.9], 0.1, 0.0).unwrap();
        let err = eml_estimate(&series, &model, BridgeConfig::new(4, 5, 1).unwrap()).unwrap_err();
        assert!(err.to_string().contains("x, 2*x"), "{err}");
    }

    #[test]
    fn non_finite_basis_reports_location() {
        let model = UnitDiffusionModel::new("inv", ScalarFn::zero(), vec![ScalarFn::power(1.0, -1)]);
        let cfg = BridgeConfig::new(2, 1, 0).unwrap();
        let lat = BridgeLattice::from_values(vec![1.0, 0.0, -1.0], 1, cfg, 1.0).unwrap();
        let err = accumulate_normal_equations(&lat, &model).unwrap_err();
        assert_eq!(err, EmlError::NonFiniteBasis { k: 0, s: 0, m: 1, state: 0.0 });
        let lat = BridgeLattice::from_values(vec![1.0, 0.0, 1.0], 1, cfg.with_clamp(1e-3), 1.0).unwrap();
        let model = model.with_domain_lower(0.0);
        let ne = accumulate_normal_equations(&lat, &model).unwrap();
        assert!(ne.a[0].is_finite());
    }

    #[test]
    fn streaming_matches_dense() {
        let series = ObservationSeries::new((0..40).map(|i| 4.0 + (i as f64 * 0.7).sin()).collect(), 1.0 / 12.0, 0.0).unwrap();
        let cfg = BridgeConfig::new(8, 7, 5).unwrap();
        let m = quadratic_model();
        let dense = accumulate_normal_equations(&build_lattice(&series, cfg), &m).unwrap();
        let stream = accumulate_streaming(&series, &m, cfg).unwrap();
        for (x, y) in dense.a.iter().zip(&stream.a).chain(dense.b.iter().zip(&stream.b)) {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn theta_star_maximises_quadratic_objective() {
        let series = ObservationSeries::new((0..60).map(|i| 4.0 + (i as f64 * 1.3).cos()).collect(), 1.0 / 12.0, 0.0).unwrap();
        let ne = accumulate_streaming(&series, &ou_model(), BridgeConfig::new(10, 20, 3).unwrap()).unwrap();
        let th = solve_theta(&ne).unwrap().theta.into_vec();
        let best = ne.objective(&th);
        for eps in [1e-4, 1e-2] {
            for i in 0..th.len() {
                for sign in [-1.0, 1.0] {
                    let mut p = th.clone();
                    p[i] += sign * eps;
                    assert!(ne.objective(&p) < best);
                }
            }
        }
    }

    #[test]
    fn regression_with_constant_basis_telescopes() {
        let x = vec![1.0, 1.4, 0.9, 2.2, 2.0];
        let d = 0.25;
        let series = ObservationSeries::new(x.clone(), d, 0.0).unwrap();
        let th = regression_estimate(&series, &constant_model()).unwrap();
        assert_relative_eq!(th[0], (x[4] - x[0]) / (4.0 * d), max_relative = 1e-14);
    }

    #[test]
    fn regression_two_increments_hand_solve() {
        // Increments Δx = (1, −0.5) from states (0, 1), Δ = 0.5, basis {1, −x}:
        // rows [0.5, 0]·θ = 1, [0.5, −0.5]·θ = −0.5 ⇒ θ = (2, 3).
        let series = ObservationSeries::new(vec![0.0, 1.0, 0.5], 0.5, 0.0).unwrap();
        let th = regression_estimate(&series, &ou_model()).unwrap();
        assert_relative_eq!(th[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(th[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn regression_needs_enough_data() {
        let series = ObservationSeries::new(vec![0.0, 1.0], 0.5, 0.0).unwrap();
        assert!(regression_estimate(&series, &ou_model()).is_err());
    }

    #[test]
    fn eml_with_single_step_equals_regression() {
        let series = ObservationSeries::new((0..30).map(|i| 4.0 + (i as f64).sin()).collect(), 1.0 / 12.0, 0.0).unwrap();
        let r = regression_estimate(&series, &ou_model()).unwrap();
        let e = eml_estimate(&series, &ou_model(), BridgeConfig::new(1, 1, 99).unwrap()).unwrap();
        for i in 0..2 {
            assert_relative_eq!(r[i], e.theta_star[i], max_relative = 1e-10);
        }
    }
}
