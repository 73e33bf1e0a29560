use proptest::prelude::*;
use trend_core::analysis::{kurtosis, pcc};
use trend_core::divergence::trend_score;
use trend_core::special::lower_incomplete_gamma;
use trend_core::{
    histogram, integrate, jsd, subsample, DimensionFit, DistributionKind, FeatureMatrix, FitStatus, FittedModel,
    QuadratureSpec, TgnParams,
};

fn params() -> impl Strategy<Value = TgnParams> {
    (0.1f64..1.5, 0.3f64..4.0, -1.0f64..2.0, prop::option::of(-4.0f64..1.0), prop::option::of(0.2f64..6.0))
        .prop_map(|(sigma, beta, mu, lo, width)| {
            let a1 = lo.map_or(f64::NEG_INFINITY, |l| mu + l * sigma);
            let a2 = match (lo, width) {
                (Some(l), Some(w)) => mu + (l + w) * sigma,
                (None, Some(w)) => mu + (w - 2.0) * sigma,
                (_, None) => f64::INFINITY,
            };
            TgnParams::new(mu, sigma, beta, a1, a2)
        })
}

fn model(ps: &[TgnParams]) -> FittedModel {
    FittedModel {
        dims: ps
            .iter()
            .map(|&params| DimensionFit {
                params,
                log_likelihood: 0.0,
                n_used: 100,
                n_zero: 0,
                converged: true,
                status: FitStatus::Ok,
                iterations: 1,
            })
            .collect(),
        kind: DistributionKind::TruncatedGeneralizedNormal,
        source_tag: String::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lower_gamma_monotone_in_upper_limit(u in 0.05f64..12.0, v1 in 0.0f64..60.0, dv in 0.0f64..20.0) {
        let a = lower_incomplete_gamma(u, v1).unwrap();
        let b = lower_incomplete_gamma(u, v1 + dv).unwrap();
        prop_assert!(a <= b * (1.0 + 1e-15));
    }

    #[test]
    fn log_pdf_is_log_of_pdf(p in params(), t in -3.0f64..3.0) {
        let d = p.density().unwrap();
        let x = p.mu + t * p.sigma;
        prop_assume!(d.in_support(x));
        let pdf = d.pdf(x);
        prop_assume!(pdf > 1e-300);
        prop_assert!((d.log_pdf(x).unwrap() - pdf.ln()).abs() < 1e-10 * pdf.ln().abs().max(1.0));
    }

    #[test]
    fn pdf_symmetric_under_symmetric_truncation(mu in -1.0f64..1.0, sigma in 0.1f64..2.0, beta in 0.3f64..4.0,
                                               half in 0.1f64..5.0, t in 0.0f64..0.95) {
        let p = TgnParams::new(mu, sigma, beta, mu - half, mu + half).density().unwrap();
        let s = t * half;
        prop_assert!((p.pdf(mu + s) - p.pdf(mu - s)).abs() < 1e-12);
    }

    #[test]
    fn integrate_is_deterministic(a in -5.0f64..0.0, w in 0.1f64..10.0, k in 0.1f64..5.0) {
        let spec = QuadratureSpec::new(a, a + w);
        let f = |x: f64| (k * x).sin().abs() + x * x;
        prop_assert_eq!(integrate(f, &spec).unwrap().to_bits(), integrate(f, &spec).unwrap().to_bits());
    }

    #[test]
    fn jsd_symmetric_and_bounded(p in params(), r in params()) {
        let q = QuadratureSpec::default();
        let ab = jsd(&p, &r, &q).unwrap();
        let ba = jsd(&r, &p, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(jsd(&p, &p, &q).unwrap() < 1e-9);
    }

    #[test]
    fn trend_symmetric(ps in prop::collection::vec((params(), params()), 1..4)) {
        let (a, b): (Vec<_>, Vec<_>) = ps.into_iter().unzip();
        let q = QuadratureSpec::default();
        let ab = trend_score(&model(&a), &model(&b), &q).unwrap();
        let ba = trend_score(&model(&b), &model(&a), &q).unwrap();
        prop_assert!((ab.trend - ba.trend).abs() < 1e-12);
        prop_assert!(ab.per_dim_jsd.iter().all(|j| (0.0..=1.0).contains(j)));
        prop_assert!(trend_score(&model(&a), &model(&a), &q).unwrap().trend <= 1e-9);
    }

    #[test]
    fn tfea_round_trip(n in 1usize..40, d in 1usize..12, seed in any::<u64>(), tag in "[a-z0-9 /._-]{0,24}") {
        let mut state = seed;
        let values: Vec<f32> = (0..n * d)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 40) as f32) / 1024.0 - 4096.0
            })
            .collect();
        let m = FeatureMatrix::new(n, d, values, tag).unwrap();
        let back = FeatureMatrix::from_tfea_bytes(&m.to_tfea_bytes()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn subsample_rows_are_distinct_originals(n in 1usize..300, fraction in 0.01f64..=1.0, seed in any::<u64>()) {
        let values: Vec<f32> = (0..n).map(|i| i as f32).collect();
        let m = FeatureMatrix::new(n, 1, values, "").unwrap();
        let k = (fraction * n as f64).floor() as usize;
        match subsample(&m, fraction, seed) {
            Ok(s) => {
                prop_assert_eq!(s.n(), k);
                let mut rows: Vec<f32> = s.values().to_vec();
                rows.sort_by(f32::total_cmp);
                rows.dedup();
                prop_assert_eq!(rows.len(), k);
                prop_assert!(rows.iter().all(|&v| v >= 0.0 && (v as usize) < n));
                prop_assert_eq!(subsample(&m, fraction, seed).unwrap(), s);
            }
            Err(_) => prop_assert_eq!(k, 0),
        }
    }

    #[test]
    fn kurtosis_affine_invariant(values in prop::collection::vec(-10.0f64..10.0, 8..200), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        prop_assume!(kurtosis(&values).is_some());
        let moved: Vec<f64> = values.iter().map(|v| a * v + b).collect();
        let (k0, k1) = (kurtosis(&values).unwrap(), kurtosis(&moved).unwrap());
        prop_assert!((k0 - k1).abs() < 1e-9 * k0.max(1.0));
    }

    #[test]
    fn histogram_conserves_counts(values in prop::collection::vec(0.0f64..100.0, 1..300), bins in 1usize..40) {
        let m = FeatureMatrix::from_columns(&[values.clone()], "").unwrap();
        let h = histogram(&m, 0, bins).unwrap();
        prop_assert_eq!(h.counts.iter().sum::<u64>(), values.len() as u64);
        prop_assert_eq!(h.edges.len(), bins + 1);
    }

    #[test]
    fn pcc_bitwise_symmetric(cols in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 20), 2..5)) {
        let m = FeatureMatrix::from_columns(&cols, "").unwrap();
        for i in 0..cols.len() {
            for j in 0..cols.len() {
                let a = pcc(&m, i, j).unwrap().map(f64::to_bits);
                let b = pcc(&m, j, i).unwrap().map(f64::to_bits);
                prop_assert_eq!(a, b);
            }
        }
    }
}
