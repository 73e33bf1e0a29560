mod common;

use common::normal_draws;
use trend_core::experiments::synthetic_features;
use trend_core::{
    fit_dimension, fit_model, log_likelihood, DistributionKind, FeatureMatrix, FitConfig, FitStatus, TgnParams,
};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn assert_recovers(fit: &TgnParams, truth: &TgnParams, tol: f64) {
    assert!(rel(fit.mu, truth.mu) < tol, "mu {} vs {}", fit.mu, truth.mu);
    assert!(rel(fit.sigma, truth.sigma) < tol, "sigma {} vs {}", fit.sigma, truth.sigma);
    assert!(rel(fit.beta, truth.beta) < tol, "beta {} vs {}", fit.beta, truth.beta);
}

#[test]
fn recovers_exponential_like_dimension() {
    let truth = TgnParams::new(0.1, 0.3, 1.0, 0.0, f64::INFINITY);
    let values = truth.density().unwrap().sample(50_000, 2024);
    let fit = fit_dimension(&values, &FitConfig::default()).unwrap();
    assert_eq!(fit.status, FitStatus::Ok);
    assert_recovers(&fit.params, &truth, 0.05);
}

#[test]
fn fit_model_recovers_each_column() {
    let truths = [
        TgnParams::new(0.1, 0.3, 1.0, 0.0, f64::INFINITY),
        TgnParams::new(0.6, 0.4, 1.8, 0.0, f64::INFINITY),
        TgnParams::new(0.3, 0.2, 0.8, 0.0, f64::INFINITY),
    ];
    let m = synthetic_features(&truths, 50_000, 0.0, 5).unwrap();
    let model = fit_model(&m, &FitConfig::default()).unwrap();
    assert_eq!(model.d(), 3);
    for (fit, truth) in model.dims.iter().zip(&truths) {
        assert_recovers(&fit.params, truth, 0.05);
    }
}

#[test]
fn zero_column_is_isolated() {
    let truth = TgnParams::new(0.5, 0.3, 1.2, 0.0, f64::INFINITY);
    let col = truth.density().unwrap().sample(2000, 3);
    let m = FeatureMatrix::from_columns(&[col.clone(), vec![0.0; 2000]], "z").unwrap();
    let alone = FeatureMatrix::from_columns(&[col], "z").unwrap();
    let model = fit_model(&m, &FitConfig::default()).unwrap();
    assert_eq!(model.dims[1].status, FitStatus::FallbackDegenerate);
    assert_eq!(model.dims[1].n_zero, 2000);
    let single = fit_model(&alone, &FitConfig::default()).unwrap();
    assert_eq!(model.dims[0], single.dims[0]);
}

#[test]
fn constant_values_fall_back() {
    let fit = fit_dimension(&[1.0; 100], &FitConfig::default()).unwrap();
    assert_eq!(fit.status, FitStatus::FallbackDegenerate);
    assert_eq!(fit.params.mu, 1.0);
}

#[test]
fn normal_kind_is_closed_form() {
    let values: Vec<f64> = normal_draws(120_000, 8)
        .into_iter()
        .map(|z| 0.5 + 0.2 * z)
        .filter(|&x| x >= 0.0)
        .take(50_000)
        .collect();
    let fit = fit_dimension(&values, &FitConfig::with_kind(DistributionKind::Normal)).unwrap();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mle_var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    assert!((fit.params.mu - mean).abs() < 1e-12);
    let std = fit.params.sigma / std::f64::consts::SQRT_2;
    assert!(rel(std, mle_var.sqrt()) < 1e-12);
    let analytic = -0.5 * n * (2.0 * std::f64::consts::PI * mle_var).ln() - 0.5 * n;
    assert!((fit.log_likelihood - analytic).abs() < 1e-9 * analytic.abs());
}

#[test]
fn training_likelihood_matches_fit() {
    let truths = [TgnParams::new(0.2, 0.3, 0.9, 0.0, f64::INFINITY), TgnParams::new(0.5, 0.2, 1.5, 0.0, f64::INFINITY)];
    let m = synthetic_features(&truths, 5000, 0.1, 6).unwrap();
    let model = fit_model(&m, &FitConfig::default()).unwrap();
    let ll = log_likelihood(&model, &m).unwrap();
    for (j, dim) in model.dims.iter().enumerate() {
        assert!((ll.per_dim[j] - dim.log_likelihood).abs() < 1e-9 * dim.log_likelihood.abs().max(1.0));
        assert_eq!(ll.n_used[j], dim.n_used);
    }
    assert_eq!(ll.n_clamped, 0);
}

#[test]
fn likelihood_ordering_on_leptokurtic_data() {
    let truths: Vec<TgnParams> = (0..4)
        .map(|j| TgnParams::new(0.02 * j as f64, 0.2 + 0.05 * j as f64, 0.6 + 0.1 * j as f64, 0.0, f64::INFINITY))
        .collect();
    let m = synthetic_features(&truths, 20_000, 0.0, 12).unwrap();
    let mean_ll = |kind| {
        let model = fit_model(&m, &FitConfig::with_kind(kind)).unwrap();
        log_likelihood(&model, &m).unwrap().mean_per_sample()
    };
    let tgn = mean_ll(DistributionKind::TruncatedGeneralizedNormal);
    let gn = mean_ll(DistributionKind::GeneralizedNormal);
    let normal = mean_ll(DistributionKind::Normal);
    for j in 0..truths.len() {
        assert!(tgn[j] > gn[j] && gn[j] > normal[j], "dim {j}: {} {} {}", tgn[j], gn[j], normal[j]);
    }
}

#[test]
fn scale_equivariance() {
    let truth = TgnParams::new(0.4, 0.3, 1.3, 0.0, f64::INFINITY);
    let values = truth.density().unwrap().sample(20_000, 77);
    let base = fit_dimension(&values, &FitConfig::default()).unwrap().params;
    for c in [0.01, 7.5] {
        let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
        let p = fit_dimension(&scaled, &FitConfig::default()).unwrap().params;
        assert!(rel(p.mu, base.mu * c) < 1e-4, "c={c} mu");
        assert!(rel(p.sigma, base.sigma * c) < 1e-4, "c={c} sigma");
        assert!(rel(p.beta, base.beta) < 1e-4, "c={c} beta");
        assert!(rel(p.a2, base.a2 * c) < 1e-12);
    }
}

#[test]
fn repeated_fits_are_identical() {
    let truths = [TgnParams::new(0.2, 0.3, 0.9, 0.0, f64::INFINITY); 6];
    let m = synthetic_features(&truths, 3000, 0.05, 1).unwrap();
    let a = fit_model(&m, &FitConfig::default()).unwrap();
    let b = fit_model(&m, &FitConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fitted_density_is_normalized() {
    let q = trend_core::QuadratureSpec::default();
    for (k, beta) in [0.6, 1.0, 2.4].into_iter().enumerate() {
        let values = TgnParams::new(0.3, 0.4, beta, 0.0, f64::INFINITY).density().unwrap().sample(5000, k as u64);
        let p = fit_dimension(&values, &FitConfig::default()).unwrap().params;
        let d = p.density().unwrap();
        let mass = trend_core::quadrature::integrate_with_breaks(|x| d.pdf(x), &q.over(p.a1, p.a2), &[p.mu])
            .unwrap()
            .value;
        assert!((mass - 1.0).abs() < 1e-6, "beta {beta}: {mass}");
    }
}
