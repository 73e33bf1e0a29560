//! Toy scenarios contrasting TREND with FID, synthetic feature generation
//! and the sample-count robustness harness.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::divergence::trend_score;
use crate::error::{Error, Result};
use crate::features::{subsample, FeatureMatrix};
use crate::fid::{fid_with, gaussian_stats, FidOptions};
use crate::fitting::{fit_model, FitConfig};
use crate::quadrature::QuadratureSpec;
use crate::tgn::TgnParams;

/// Seed used by every command when none is given.
pub const DEFAULT_SEED: u64 = 20_220_905;

/// Sample size per toy distribution when none is given.
pub const DEFAULT_TOY_SAMPLES: usize = 50_000;

pub const MIN_TOY_SAMPLES: usize = 1000;

/// Subsampling fractions of the robustness experiment.
pub const DEFAULT_FRACTIONS: [f64; 4] = [1.0, 0.2, 0.1, 0.02];

/// Derive the seed of stream `k` from a base seed (splitmix64 finalizer).
pub fn stream_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ToyScenario {
    /// Models share the ground-truth location but differ in scale and shape;
    /// FID barely separates them while TREND clearly prefers model 2.
    SameLocation,
    /// One model matches the ground truth's mean and variance but not its
    /// shape, which FID cannot see.
    MomentMatched,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyModel {
    pub name: String,
    pub params: TgnParams,
}

impl ToyScenario {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Self::SameLocation),
            2 => Ok(Self::MomentMatched),
            _ => Err(Error::InvalidParams(format!("unknown toy scenario {n}, expected 1 or 2"))),
        }
    }

    pub fn number(&self) -> u8 {
        match self {
            Self::SameLocation => 1,
            Self::MomentMatched => 2,
        }
    }

    // Constants come from tools/tune_toy_scenarios.py.
    pub fn ground_truth(&self) -> TgnParams {
        match self {
            Self::SameLocation => TgnParams::new(1.0, 0.5, 1.2, 0.0, f64::INFINITY),
            Self::MomentMatched => TgnParams::new(0.3, 0.4, 0.9, 0.0, f64::INFINITY),
        }
    }

    pub fn models(&self) -> Vec<ToyModel> {
        let m = |name: &str, mu, sigma, beta| ToyModel {
            name: name.into(),
            params: TgnParams::new(mu, sigma, beta, 0.0, f64::INFINITY),
        };
        match self {
            Self::SameLocation => vec![m("model-1", 1.0, 0.8, 1.8), m("model-2", 1.0, 0.6, 1.25)],
            Self::MomentMatched => vec![m("model", -1.0367, 1.3942, 1.8)],
        }
    }
}

/// Draw `n` values from `params` into a one-column feature matrix.
pub fn toy_sample(params: &TgnParams, n: usize, seed: u64, tag: &str) -> Result<FeatureMatrix> {
    let values = params.density()?.sample(n, seed);
    FeatureMatrix::from_columns(&[values], tag)
}

/// Ground-truth sample followed by one sample per model.
pub fn toy_fixtures(scenario: ToyScenario, n: usize, seed: u64) -> Result<Vec<FeatureMatrix>> {
    if n < MIN_TOY_SAMPLES {
        return Err(Error::InvalidParams(format!("toy scenarios need at least {MIN_TOY_SAMPLES} samples, got {n}")));
    }
    let mut out = vec![toy_sample(&scenario.ground_truth(), n, stream_seed(seed, 0), "ground-truth")?];
    for (k, model) in scenario.models().iter().enumerate() {
        out.push(toy_sample(&model.params, n, stream_seed(seed, k as u64 + 1), &model.name)?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    pub trend: f64,
    pub fid: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyScore {
    pub name: String,
    pub params: TgnParams,
    pub scores: MetricPair,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyReport {
    pub scenario: u8,
    pub n: usize,
    pub seed: u64,
    pub ground_truth: TgnParams,
    pub models: Vec<ToyScore>,
    /// Scores between the two halves of the ground-truth sample.
    pub noise_floor: MetricPair,
}

impl ToyReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "scenario {} n {} seed {}", self.scenario, self.n, self.seed).unwrap();
        writeln!(out, "name\ttrend\tfid").unwrap();
        for m in &self.models {
            writeln!(out, "{}\t{:e}\t{:e}", m.name, m.scores.trend, m.scores.fid).unwrap();
        }
        writeln!(out, "noise-floor\t{:e}\t{:e}", self.noise_floor.trend, self.noise_floor.fid).unwrap();
        out
    }
}

/// TREND and FID of `test` against `reference`, fitting both from scratch.
pub fn score_pair(
    test: &FeatureMatrix,
    reference: &FeatureMatrix,
    fit: &FitConfig,
    quad: &QuadratureSpec,
    fid_opts: &FidOptions,
) -> Result<MetricPair> {
    let t = fit_model(test, fit)?;
    let r = fit_model(reference, fit)?;
    Ok(MetricPair {
        trend: trend_score(&t, &r, quad)?.trend,
        fid: fid_with(&gaussian_stats(test)?, &gaussian_stats(reference)?, fid_opts)?,
    })
}

/// Scores between the first and second half of a sample.
pub fn self_score(sample: &FeatureMatrix, fit: &FitConfig, quad: &QuadratureSpec) -> Result<MetricPair> {
    let half = sample.n() / 2;
    let first: Vec<usize> = (0..half).collect();
    let second: Vec<usize> = (half..2 * half).collect();
    score_pair(
        &sample.select_rows(&first),
        &sample.select_rows(&second),
        fit,
        quad,
        &FidOptions::default(),
    )
}

pub fn run_toy(
    scenario: ToyScenario,
    n: usize,
    seed: u64,
    fit: &FitConfig,
    quad: &QuadratureSpec,
) -> Result<ToyReport> {
    let fixtures = toy_fixtures(scenario, n, seed)?;
    let (truth, samples) = fixtures.split_first().expect("ground truth sample present");
    let reference = fit_model(truth, fit)?;
    let ref_stats = gaussian_stats(truth)?;
    let mut models = Vec::new();
    for (model, sample) in scenario.models().into_iter().zip(samples) {
        let fitted = fit_model(sample, fit)?;
        models.push(ToyScore {
            name: model.name,
            params: model.params,
            scores: MetricPair {
                trend: trend_score(&fitted, &reference, quad)?.trend,
                fid: fid_with(&gaussian_stats(sample)?, &ref_stats, &FidOptions::default())?,
            },
        });
    }
    Ok(ToyReport {
        scenario: scenario.number(),
        n,
        seed,
        ground_truth: scenario.ground_truth(),
        models,
        noise_floor: self_score(truth, fit, quad)?,
    })
}

/// Independent columns, column `j` drawn from `params[j]`; each entry is
/// then replaced by an exact zero with probability `zero_fraction`.
pub fn synthetic_features(params: &[TgnParams], n: usize, zero_fraction: f64, seed: u64) -> Result<FeatureMatrix> {
    if !(0.0..1.0).contains(&zero_fraction) {
        return Err(Error::InvalidParams(format!("zero fraction must be in [0, 1), got {zero_fraction}")));
    }
    let mut columns = Vec::with_capacity(params.len());
    for (j, p) in params.iter().enumerate() {
        let mut col = p.density()?.sample(n, stream_seed(seed, 2 * j as u64));
        if zero_fraction > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, 2 * j as u64 + 1));
            for v in &mut col {
                if rng.random::<f64>() < zero_fraction {
                    *v = 0.0;
                }
            }
        }
        columns.push(col);
    }
    FeatureMatrix::from_columns(&columns, format!("synthetic:{seed}"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub fraction: f64,
    pub n_test: usize,
    pub trend: f64,
    pub fid: f64,
}

pub fn robustness_to_text(rows: &[RobustnessRow]) -> String {
    let mut out = String::from("fraction\tn_test\ttrend\tfid\n");
    for r in rows {
        writeln!(out, "{}\t{}\t{:e}\t{:e}", r.fraction, r.n_test, r.trend, r.fid).unwrap();
    }
    out
}

/// Subsample the test set at each fraction, refit and rescore against the
/// whole reference set, which is fitted once.
pub fn robustness(
    test: &FeatureMatrix,
    reference: &FeatureMatrix,
    fractions: &[f64],
    seed: u64,
    fit: &FitConfig,
    quad: &QuadratureSpec,
    fid_opts: &FidOptions,
) -> Result<Vec<RobustnessRow>> {
    if fractions.is_empty() {
        return Err(Error::Empty("no fractions given".into()));
    }
    let reference_model = fit_model(reference, fit)?;
    let ref_stats = gaussian_stats(reference)?;
    let mut rows = Vec::with_capacity(fractions.len());
    for (k, &fraction) in fractions.iter().enumerate() {
        let sub = subsample(test, fraction, stream_seed(seed, k as u64))?;
        let model = fit_model(&sub, fit)?;
        rows.push(RobustnessRow {
            fraction,
            n_test: sub.n(),
            trend: trend_score(&model, &reference_model, quad)?.trend,
            fid: fid_with(&gaussian_stats(&sub)?, &ref_stats, fid_opts)?,
        });
    }
    Ok(rows)
}
