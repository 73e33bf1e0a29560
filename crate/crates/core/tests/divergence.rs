mod common;

use std::f64::consts::{LN_2, SQRT_2};

use common::piecewise_midpoint;
use rand::Rng;
use trend_core::{jsd, kld, QuadratureSpec, TgnParams};

fn q() -> QuadratureSpec {
    QuadratureSpec::default()
}

/// Exponential KL divergence KL(Exp(a) ‖ Exp(b)) = ln(a/b) + b/a − 1.
fn exponential_kld(a: f64, b: f64) -> f64 {
    (a / b).ln() + b / a - 1.0
}

#[test]
fn kld_analytic_oracles() {
    let p = TgnParams::untruncated(0.0, SQRT_2, 2.0);
    let r = TgnParams::untruncated(1.0, SQRT_2, 2.0);
    assert!((kld(&p, &r, &q()).unwrap() - 0.5).abs() < 1e-6);

    // rate 1 and rate 2 exponentials as truncated Laplace densities
    let e1 = TgnParams::new(0.0, 1.0, 1.0, 0.0, f64::INFINITY);
    let e2 = TgnParams::new(0.0, 0.5, 1.0, 0.0, f64::INFINITY);
    assert!((kld(&e1, &e2, &q()).unwrap() - exponential_kld(1.0, 2.0)).abs() < 1e-6);
    assert!((kld(&e1, &e2, &q()).unwrap() - (1.0 - LN_2)).abs() < 1e-6);
    assert!((kld(&e2, &e1, &q()).unwrap() - exponential_kld(2.0, 1.0)).abs() < 1e-6);
    assert!(kld(&e1, &e1, &q()).unwrap().abs() < 1e-9);
}

fn riemann_jsd(p: &TgnParams, r: &TgnParams) -> f64 {
    let dp = p.density().unwrap();
    let dr = r.density().unwrap();
    let (plo, phi) = dp.effective_support();
    let (rlo, rhi) = dr.effective_support();
    let mut breaks = vec![plo.min(rlo), phi.max(rhi)];
    let (lo, hi) = (breaks[0], breaks[1]);
    let mut add = |x: f64| {
        if x.is_finite() && x > lo && x < hi {
            breaks.push(x);
        }
    };
    for x in [p.a1, p.a2, r.a1, r.a2] {
        add(x);
    }
    // graded pieces around each location, where a cusp may sit
    for mu in [p.mu, r.mu] {
        add(mu);
        for w in [1e-3, 1e-2, 0.1, 1.0] {
            add(mu - w);
            add(mu + w);
        }
    }
    breaks.sort_by(f64::total_cmp);
    let f = |x: f64| {
        let (a, b) = (dp.pdf(x), dr.pdf(x));
        let m = 0.5 * (a + b);
        let term = |v: f64| if v > 0.0 { v * (v / m).log2() } else { 0.0 };
        0.5 * (term(a) + term(b))
    };
    piecewise_midpoint(f, &breaks, 1 << 20)
}

#[test]
fn jsd_gaussian_pair_matches_riemann_sum() {
    let p = TgnParams::untruncated(0.0, SQRT_2, 2.0);
    let r = TgnParams::untruncated(1.0, SQRT_2, 2.0);
    let v = jsd(&p, &r, &q()).unwrap();
    assert!(v > 0.0 && v < 1.0);
    assert!((v - riemann_jsd(&p, &r)).abs() < 1e-9);
}

fn random_params<R: Rng>(rng: &mut R) -> TgnParams {
    let sigma = rng.random_range(0.1..1.5);
    let mu = rng.random_range(-0.5..2.0);
    let beta = rng.random_range(0.5..3.0);
    let a1 = if rng.random_bool(0.5) { 0.0 } else { f64::NEG_INFINITY };
    let a2 = if rng.random_bool(0.5) { rng.random_range(2.5..5.0) } else { f64::INFINITY };
    TgnParams::new(mu, sigma, beta, a1, a2)
}

#[test]
fn jsd_matches_riemann_sum_on_random_pairs() {
    let mut rng = common::rng(31);
    let mut n = 0;
    while n < 50 {
        let p = random_params(&mut rng);
        let r = random_params(&mut rng);
        if p.density().is_err() || r.density().is_err() {
            continue;
        }
        n += 1;
        let v = jsd(&p, &r, &q()).unwrap();
        let oracle = riemann_jsd(&p, &r);
        assert!((v - oracle).abs() < 1e-6, "{p:?} {r:?}: {v} vs {oracle}");
    }
}

#[test]
fn jsd_nondecreasing_as_locations_separate() {
    let p = TgnParams::new(0.5, 0.4, 1.2, 0.0, 4.0);
    let mut last = 0.0;
    for k in 0..10 {
        let r = TgnParams { mu: 0.5 + 0.2 * k as f64, ..p };
        let v = jsd(&p, &r, &q()).unwrap();
        assert!(v >= last - 1e-12, "step {k}: {v} < {last}");
        last = v;
    }
    assert!(last > 0.1);
}

#[test]
fn jsd_extremes() {
    let a = TgnParams::new(0.5, 0.3, 1.5, 0.0, 1.0);
    let b = TgnParams::new(2.5, 0.3, 1.5, 2.0, 3.0);
    assert!((jsd(&a, &b, &q()).unwrap() - 1.0).abs() < 1e-9);
    assert!(jsd(&a, &a, &q()).unwrap().abs() < 1e-9);
}
