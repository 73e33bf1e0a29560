//! Per-dimension truncated generalized normal fits of embedding features and
//! the TREND score (mean per-dimension Jensen–Shannon divergence), with an
//! FID baseline, feature analyses and the toy/robustness experiments.
//!
//! ```
//! use trend_core::{fit_model, trend_score, FeatureMatrix, FitConfig, QuadratureSpec};
//!
//! let col: Vec<f64> = (1..=200).map(|i| (i as f64 * 0.37).sin().abs() + 0.01).collect();
//! let features = FeatureMatrix::from_columns(&[col], "demo").unwrap();
//! let model = fit_model(&features, &FitConfig::default()).unwrap();
//! let report = trend_score(&model, &model, &QuadratureSpec::default()).unwrap();
//! assert!(report.trend < 1e-9);
//! ```

pub mod analysis;
pub mod divergence;
pub mod error;
pub mod experiments;
pub mod features;
pub mod fid;
pub mod fitting;
pub mod optimize;
pub mod quadrature;
pub mod special;
pub mod tgn;

pub use analysis::{dimension_stats, histogram, pairwise_pcc, DimensionStats, Histogram, PairSelection, PccReport};
pub use divergence::{jsd, kld, trend_score, ScoreReport};
pub use error::{Error, Result};
pub use experiments::{robustness, run_toy, RobustnessRow, ToyReport, ToyScenario, DEFAULT_SEED};
pub use features::{load_features, read_feature_file, subsample, write_feature_file, FeatureMatrix};
pub use fid::{fid, fid_with, gaussian_stats, FidOptions, GaussianStats};
pub use fitting::{
    fit_dimension, fit_model, log_likelihood, model_from_text, model_to_text, DimensionFit, FitConfig, FitStatus,
    FittedModel, LikelihoodReport,
};
pub use quadrature::{integrate, QuadratureSpec};
pub use tgn::{DistributionKind, Tgn, TgnParams};
