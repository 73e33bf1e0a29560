//! Fixtures shared by the benchmarks.

use trend_core::experiments::synthetic_features;
use trend_core::{FeatureMatrix, TgnParams};

/// `d` left-truncated, heavy-tailed columns with varied parameters.
pub fn leptokurtic_features(n: usize, d: usize, seed: u64) -> FeatureMatrix {
    let params: Vec<TgnParams> = (0..d)
        .map(|j| {
            let t = j as f64 / d.max(1) as f64;
            TgnParams::new(0.05 + 0.3 * t, 0.2 + 0.2 * t, 0.7 + 0.6 * t, 0.0, f64::INFINITY)
        })
        .collect();
    synthetic_features(&params, n, 0.0, seed).expect("valid synthetic parameters")
}
