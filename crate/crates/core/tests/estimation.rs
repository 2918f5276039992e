use eml_core::bridge::{build_lattice, BridgeConfig};
use eml_core::eml::{eml_estimate, regression_estimate};
use eml_core::likelihood::ou_ml_fit;
use eml_core::model::{
    cir_model, cir_unit_model, cir_unit_params, euler_simulate, lamperti_transform, ou_exact_simulate, ou_model,
    quadratic_model, ObservationSeries, Theta,
};
use eml_core::rng::substream;
use proptest::prelude::*;

#[test]
fn eml_recovers_ou_parameters() {
    let series = ou_exact_simulate(10.0, 2.5, 4.0, 1.0 / 12.0, 6000, &mut substream(1, &[])).unwrap();
    let est = eml_estimate(&series, &ou_model(), BridgeConfig::new(10, 100, 2).unwrap()).unwrap();
    let ml = ou_ml_fit(&series).unwrap();
    // T = 500 years: asymptotic SE of a1 is √(2·2.5/500) = 0.1.
    assert!((est.theta_star[1] - 2.5).abs() < 0.4, "{:?}", est.theta_star);
    assert!((est.theta_star[0] - 10.0).abs() < 1.7, "{:?}", est.theta_star);
    // Both estimators use the same data; they should be close to each other.
    assert!((est.theta_star[1] - ml.a1).abs() < 0.15, "{:?} vs {ml:?}", est.theta_star);
}

#[test]
fn eml_recovers_quadratic_drift() {
    let th = Theta::new(vec![1.0, -1.0, -0.5]).unwrap();
    let series = euler_simulate(&quadratic_model(), &th, 0.7, 1.0 / 12.0, 6000, 100, &mut substream(2, &[])).unwrap();
    let est = eml_estimate(&series, &quadratic_model(), BridgeConfig::new(10, 100, 3).unwrap()).unwrap();
    for (got, want) in est.theta_star.as_slice().iter().zip([1.0, -1.0, -0.5]) {
        assert!((got - want).abs() < 0.5, "{:?}", est.theta_star);
    }
}

#[test]
fn eml_recovers_cir_parameters_through_the_transform() {
    let (kappa, mean, sigma) = (2.0, 1.0, 0.5);
    let (b0, b1) = cir_unit_params(kappa, mean, sigma).unwrap();
    let unit = Theta::new(vec![b0, b1]).unwrap();
    let ys = euler_simulate(&cir_unit_model(), &unit, 4.0, 1.0 / 52.0, 5000, 100, &mut substream(4, &[])).unwrap();
    let xs = ys.map(|y| sigma * sigma * y * y / 4.0).unwrap();
    let t = lamperti_transform(&cir_model(sigma)).unwrap();
    let zs = t.map.transform_series(&xs).unwrap();
    for (a, b) in zs.x.iter().zip(&ys.x) {
        assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
    }
    let est = eml_estimate(&zs, &t.model, BridgeConfig::new(8, 100, 5).unwrap()).unwrap();
    // θ = (κ·mean, κ); T ≈ 96 years gives an SE of about 0.2 for κ.
    assert!((est.theta_star[1] - kappa).abs() < 0.8, "{:?}", est.theta_star);
    assert!((est.theta_star[0] - kappa * mean).abs() < 0.8, "{:?}", est.theta_star);
}

fn series_strategy() -> impl Strategy<Value = ObservationSeries> {
    (prop::collection::vec(-3.0..3.0f64, 5..40), 0.01..1.0f64)
        .prop_map(|(x, d)| ObservationSeries::new(x, d, 0.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eml_without_auxiliary_points_is_regression(series in series_strategy(), seed in any::<u64>()) {
        let model = quadratic_model();
        let reg = regression_estimate(&series, &model);
        let eml = eml_estimate(&series, &model, BridgeConfig::new(1, 1, seed).unwrap());
        match (reg, eml) {
            (Ok(r), Ok(e)) => {
                for (a, b) in r.as_slice().iter().zip(e.theta_star.as_slice()) {
                    prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} vs {b}");
                }
            }
            (Err(_), Err(_)) => {}
            (r, e) => prop_assert!(false, "disagreeing outcomes {r:?} / {e:?}"),
        }
    }

    #[test]
    fn lattice_endpoints_are_observations(series in series_strategy(), m in 1usize..12, s in 1usize..6, seed in any::<u64>()) {
        let lat = build_lattice(&series, BridgeConfig::new(m, s, seed).unwrap());
        for k in 0..series.intervals() {
            for j in 0..s {
                let p = lat.path(k, j);
                prop_assert_eq!(p[0].to_bits(), series.x[k].to_bits());
                prop_assert_eq!(p[m].to_bits(), series.x[k + 1].to_bits());
            }
        }
    }
}
