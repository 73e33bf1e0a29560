//! Per-dimension maximum-likelihood fitting.
//!
//! For the truncated kind, exact zeros (the mass removed by the embedding's
//! rectifier) are dropped, the support is fixed to `[0, max]` of the
//! remaining values, and `(μ, σ, β)` maximize
//!
//! ```text
//! log L = n log β − n log σ − n log G − Σ (|xⱼ − μ| / σ)^β
//! ```
//!
//! by bounded trust-region descent on the mean negative log-likelihood,
//! started from (sample mean, sample standard deviation, 2). The objective is
//! evaluated on values divided by their standard deviation, which makes the
//! fit scale-equivariant and keeps the three coordinates comparably sized.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::optimize::{minimize_box, TrustRegionOptions};
use crate::special::ln_gamma_unchecked;
use crate::tgn::{ln_normalizer, DistributionKind, Tgn, TgnParams};

/// Variance below which a dimension is treated as a point mass.
const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub kind: DistributionKind,
    /// Relative central-difference step for the gradient.
    pub grad_step: f64,
    pub conv_tol: f64,
    pub max_iters: usize,
    pub min_samples: usize,
    pub beta_bounds: (f64, f64),
    pub sigma_floor: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            kind: DistributionKind::TruncatedGeneralizedNormal,
            grad_step: 1e-6,
            conv_tol: 1e-6,
            max_iters: 500,
            min_samples: 32,
            beta_bounds: (0.05, 20.0),
            sigma_floor: 1e-8,
        }
    }
}

impl FitConfig {
    pub fn with_kind(kind: DistributionKind) -> Self {
        FitConfig {
            kind,
            ..FitConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.beta_bounds;
        if !(lo > 0.0) || !(lo < hi) {
            return Err(Error::InvalidParams(format!("beta bounds ({lo}, {hi}) must satisfy 0 < low < high")));
        }
        if self.min_samples < 8 {
            return Err(Error::InvalidParams(format!("min_samples = {} must be at least 8", self.min_samples)));
        }
        if !(self.grad_step > 0.0) || !(self.conv_tol > 0.0) || !(self.sigma_floor > 0.0) {
            return Err(Error::InvalidParams("grad_step, conv_tol and sigma_floor must be > 0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParams("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FitStatus {
    Ok,
    FallbackDegenerate,
    MaxItersReached,
}

impl FitStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitStatus::Ok => "ok",
            FitStatus::FallbackDegenerate => "degenerate",
            FitStatus::MaxItersReached => "max-iters",
        }
    }
}

impl FromStr for FitStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(FitStatus::Ok),
            "degenerate" => Ok(FitStatus::FallbackDegenerate),
            "max-iters" => Ok(FitStatus::MaxItersReached),
            other => Err(Error::InvalidParams(format!("unknown fit status '{other}'"))),
        }
    }
}

/// Result of fitting one dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit {
    pub params: TgnParams,
    /// Log-likelihood of the fitted values at the optimum.
    pub log_likelihood: f64,
    pub n_used: usize,
    pub n_zero: usize,
    pub converged: bool,
    pub status: FitStatus,
    pub iterations: usize,
}

impl DimensionFit {
    pub fn is_degenerate(&self) -> bool {
        self.status == FitStatus::FallbackDegenerate
    }
}

/// Independent per-dimension densities for a whole feature matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub dims: Vec<DimensionFit>,
    pub kind: DistributionKind,
    pub source_tag: String,
}

impl FittedModel {
    pub fn d(&self) -> usize {
        self.dims.len()
    }
}

struct SampleSummary {
    n: usize,
    mean: f64,
    /// Population (divide-by-n) standard deviation.
    std_dev: f64,
    /// Divide-by-(n-1) standard deviation.
    sample_std: f64,
    max: f64,
}

fn summarize(values: &[f64]) -> SampleSummary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    SampleSummary {
        n,
        mean,
        std_dev: (ss / n as f64).sqrt(),
        sample_std: if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 },
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Sum of log-densities under `params`; values outside the support are
/// clamped to the nearest bound. Returns `(sum, clamped_count)`.
pub(crate) fn sum_log_density(density: &Tgn, values: &[f64]) -> (f64, usize) {
    let mut clamped = 0;
    let sum = values
        .iter()
        .map(|&x| {
            if !density.in_support(x) {
                clamped += 1;
            }
            density.log_pdf_clamped(x)
        })
        .sum();
    (sum, clamped)
}

/// Mean negative log-likelihood; `+∞` where the parameters are infeasible.
fn mean_nll(values: &[f64], mu: f64, sigma: f64, beta: f64, a1: f64, a2: f64) -> f64 {
    if !(sigma > 0.0) || !(beta > 0.0) || !mu.is_finite() {
        return f64::INFINITY;
    }
    let ln_g = if a1.is_finite() || a2.is_finite() {
        match ln_normalizer(&TgnParams::new(mu, sigma, beta, a1, a2)) {
            Ok(v) => v,
            Err(_) => return f64::INFINITY,
        }
    } else {
        std::f64::consts::LN_2 + ln_gamma_unchecked(1.0 / beta)
    };
    let inv_sigma = 1.0 / sigma;
    let tail: f64 = values.iter().map(|&x| ((x - mu).abs() * inv_sigma).powf(beta)).sum();
    let v = -beta.ln() + sigma.ln() + ln_g + tail / values.len() as f64;
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(row) => Err(Error::NonFinite { row, col: 0 }),
        None => Ok(()),
    }
}

fn finish(params: TgnParams, used: &[f64], n_zero: usize, status: FitStatus, iterations: usize) -> Result<DimensionFit> {
    let density = params.density()?;
    let (log_likelihood, _) = sum_log_density(&density, used);
    Ok(DimensionFit {
        params,
        log_likelihood,
        n_used: used.len(),
        n_zero,
        converged: status == FitStatus::Ok,
        status,
        iterations,
    })
}

/// Fit one dimension's values.
///
/// Near-degenerate input (fewer than `min_samples` usable values, or
/// variance below 1e-12) is not an error: it yields a
/// [`FitStatus::FallbackDegenerate`] fit centred on the sample mean with
/// `σ = sigma_floor` and `β = 2`.
pub fn fit_dimension(values: &[f64], config: &FitConfig) -> Result<DimensionFit> {
    config.validate()?;
    if values.is_empty() {
        return Err(Error::Empty("no values to fit".into()));
    }
    check_finite(values)?;

    let truncated = config.kind.is_truncated();
    let (used, n_zero): (Vec<f64>, usize) = if truncated {
        if let Some(pos) = values.iter().position(|&v| v < 0.0) {
            return Err(Error::domain(
                "fit_dimension",
                format!("negative value {} at row {pos}; truncated fits need values >= 0", values[pos]),
            ));
        }
        let used: Vec<f64> = values.iter().copied().filter(|&v| v != 0.0).collect();
        let zeros = values.len() - used.len();
        (used, zeros)
    } else {
        (values.to_vec(), 0)
    };

    let a1 = if truncated { 0.0 } else { f64::NEG_INFINITY };

    let summary = (!used.is_empty()).then(|| summarize(&used));
    let degenerate = match &summary {
        None => true,
        Some(s) => s.n < config.min_samples || s.std_dev * s.std_dev < DEGENERATE_VARIANCE,
    };
    if degenerate {
        let mu = summary.as_ref().map_or(0.0, |s| s.mean);
        let a2 = if truncated {
            summary.as_ref().map_or(0.0, |s| s.max).max(a1 + config.sigma_floor)
        } else {
            f64::INFINITY
        };
        let params = TgnParams::new(mu, config.sigma_floor, 2.0, a1, a2);
        return finish(params, &used, n_zero, FitStatus::FallbackDegenerate, 0);
    }
    let s = summary.unwrap();

    if config.kind == DistributionKind::Normal {
        return finish(TgnParams::normal(s.mean, s.std_dev), &used, n_zero, FitStatus::Ok, 0);
    }

    let a2 = if truncated { s.max } else { f64::INFINITY };
    let scale = s.sample_std;
    let scaled: Vec<f64> = used.iter().map(|v| v / scale).collect();
    let (sa1, sa2) = (a1 / scale, a2 / scale);

    let objective = |p: &[f64]| mean_nll(&scaled, p[0], p[1], p[2], sa1, sa2);
    let start = [s.mean / scale, 1.0, 2.0];
    let lower = [f64::NEG_INFINITY, config.sigma_floor / scale, config.beta_bounds.0];
    let upper = [f64::INFINITY, f64::INFINITY, config.beta_bounds.1];
    let opts = TrustRegionOptions {
        grad_step: config.grad_step,
        tol: config.conv_tol,
        max_iters: config.max_iters,
    };
    let m = minimize_box(objective, &start, &lower, &upper, &opts);

    let status = if m.converged { FitStatus::Ok } else { FitStatus::MaxItersReached };
    let params = TgnParams::new(m.x[0] * scale, m.x[1] * scale, m.x[2], a1, a2);
    finish(params, &used, n_zero, status, m.iterations)
}

/// Fit every column independently; dimensions run in parallel and are
/// assembled in index order.
///
/// Only non-finite (or, for the truncated kind, negative) input aborts the
/// whole model; degenerate columns are reported through their status.
pub fn fit_model(features: &FeatureMatrix, config: &FitConfig) -> Result<FittedModel> {
    config.validate()?;
    if features.d() == 0 {
        return Err(Error::Empty("feature matrix has no dimensions".into()));
    }
    if features.n() == 0 {
        return Err(Error::Empty("feature matrix has no rows".into()));
    }
    let dims = (0..features.d())
        .into_par_iter()
        .map(|j| {
            fit_dimension(&features.column(j), config).map_err(|e| match e {
                Error::NonFinite { row, .. } => Error::NonFinite { row, col: j },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FittedModel {
        dims,
        kind: config.kind,
        source_tag: features.tag().to_string(),
    })
}

/// Per-dimension log-likelihood of `features` under `model`.
#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodReport {
    /// Summed log-density per dimension.
    pub per_dim: Vec<f64>,
    /// Samples scored per dimension (zeros excluded for the truncated kind).
    pub n_used: Vec<usize>,
    /// Samples clamped into a fitted support.
    pub n_clamped: usize,
}

impl LikelihoodReport {
    /// Per-dimension average log-density.
    pub fn mean_per_sample(&self) -> Vec<f64> {
        self.per_dim
            .iter()
            .zip(&self.n_used)
            .map(|(s, &n)| if n > 0 { s / n as f64 } else { f64::NAN })
            .collect()
    }

    pub fn average(&self) -> f64 {
        self.per_dim.iter().sum::<f64>() / self.per_dim.len() as f64
    }
}

/// Score `features` under `model`, mirroring the fit's zero-omission.
///
/// Evaluation values outside a fitted support receive the boundary
/// log-density instead of `-∞` and are counted in `n_clamped`.
pub fn log_likelihood(model: &FittedModel, features: &FeatureMatrix) -> Result<LikelihoodReport> {
    if model.d() != features.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            found: features.d(),
        });
    }
    let truncated = model.kind.is_truncated();
    let results = model
        .dims
        .par_iter()
        .enumerate()
        .map(|(j, fit)| {
            let mut col = features.column(j);
            if truncated {
                col.retain(|&v| v != 0.0);
            }
            let density = fit.params.density()?;
            let (sum, clamped) = sum_log_density(&density, &col);
            Ok((sum, col.len(), clamped))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LikelihoodReport {
        per_dim: results.iter().map(|r| r.0).collect(),
        n_used: results.iter().map(|r| r.1).collect(),
        n_clamped: results.iter().map(|r| r.2).sum(),
    })
}

const MODEL_HEADER: &str = "# trend-model v1";
const MODEL_COLUMNS: &str = "# index kind mu sigma beta a1 a2 log_likelihood n_used n_zero status";

/// Serialize to the line-oriented model format.
///
/// ```text
/// # trend-model v1
/// # kind: tgn
/// # source: <tag>
/// # index kind mu sigma beta a1 a2 log_likelihood n_used n_zero status
/// 0 tgn 8e-2 2.5e-1 1.03e0 0e0 4.1e0 -1.2e3 49000 1000 ok
/// ```
///
/// Reals use the shortest exponent form that round-trips exactly.
pub fn model_to_text(model: &FittedModel) -> String {
    let mut out = String::new();
    writeln!(out, "{MODEL_HEADER}").unwrap();
    writeln!(out, "# kind: {}", model.kind).unwrap();
    writeln!(out, "# source: {}", model.source_tag.replace('\n', " ")).unwrap();
    writeln!(out, "{MODEL_COLUMNS}").unwrap();
    for (i, f) in model.dims.iter().enumerate() {
        let p = &f.params;
        writeln!(
            out,
            "{i} {} {:e} {:e} {:e} {:e} {:e} {:e} {} {} {}",
            model.kind,
            p.mu,
            p.sigma,
            p.beta,
            p.a1,
            p.a2,
            f.log_likelihood,
            f.n_used,
            f.n_zero,
            f.status.as_str()
        )
        .unwrap();
    }
    out
}

/// Parse the line-oriented model format.
pub fn model_from_text(text: &str) -> Result<FittedModel> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == MODEL_HEADER => {}
        _ => return Err(Error::MalformedHeader(format!("model file must start with '{MODEL_HEADER}'"))),
    }
    let mut kind = None;
    let mut source_tag = String::new();
    let mut dims = Vec::new();
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |detail: String| Error::Parse {
            line: lineno + 1,
            detail,
        };
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(k) = comment.strip_prefix("kind:") {
                kind = Some(k.trim().parse::<DistributionKind>()?);
            } else if let Some(s) = comment.strip_prefix("source:") {
                source_tag = s.trim().to_string();
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 11 {
            return Err(parse_err(format!("expected 11 fields, found {}", fields.len())));
        }
        let index: usize = fields[0].parse().map_err(|e| parse_err(format!("index: {e}")))?;
        if index != dims.len() {
            return Err(parse_err(format!("expected index {}, found {index}", dims.len())));
        }
        let row_kind: DistributionKind = fields[1].parse()?;
        match kind {
            None => kind = Some(row_kind),
            Some(k) if k != row_kind => return Err(parse_err(format!("kind {row_kind} differs from {k}"))),
            _ => {}
        }
        let real = |i: usize| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|e| parse_err(format!("field {i} '{}': {e}", fields[i])))
        };
        let count = |i: usize| -> Result<usize> {
            fields[i]
                .parse::<usize>()
                .map_err(|e| parse_err(format!("field {i} '{}': {e}", fields[i])))
        };
        let params = TgnParams::new(real(2)?, real(3)?, real(4)?, real(5)?, real(6)?);
        params.validate()?;
        let status: FitStatus = fields[10].parse()?;
        dims.push(DimensionFit {
            params,
            log_likelihood: real(7)?,
            n_used: count(8)?,
            n_zero: count(9)?,
            converged: status == FitStatus::Ok,
            status,
            iterations: 0,
        });
    }
    let kind = kind.ok_or_else(|| Error::MalformedHeader("model has no kind".into()))?;
    if dims.is_empty() {
        return Err(Error::Empty("model has no dimensions".into()));
    }
    Ok(FittedModel {
        dims,
        kind,
        source_tag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tgn_samples(mu: f64, sigma: f64, beta: f64, n: usize, seed: u64) -> Vec<f64> {
        TgnParams::new(mu, sigma, beta, 0.0, f64::INFINITY)
            .density()
            .unwrap()
            .sample(n, seed)
    }

    #[test]
    fn constant_input_is_degenerate() {
        let fit = fit_dimension(&[1.0; 100], &FitConfig::default()).unwrap();
        assert_eq!(fit.status, FitStatus::FallbackDegenerate);
        assert!(!fit.converged);
        assert_eq!(fit.params.mu, 1.0);
        assert_eq!(fit.params.beta, 2.0);
        assert_eq!(fit.n_used + fit.n_zero, 100);
    }

    #[test]
    fn few_samples_is_degenerate() {
        let fit = fit_dimension(&[0.0, 0.5, 0.7, 1.0, 0.0, 0.2], &FitConfig::default()).unwrap();
        assert_eq!(fit.status, FitStatus::FallbackDegenerate);
        assert_eq!(fit.n_zero, 2);
        assert_eq!(fit.n_used, 4);
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = FitConfig::default();
        assert!(matches!(fit_dimension(&[1.0, f64::NAN], &cfg), Err(Error::NonFinite { row: 1, .. })));
        assert!(fit_dimension(&[], &cfg).is_err());
        assert!(fit_dimension(&[1.0, -0.5], &cfg).is_err());
        let bad = FitConfig {
            min_samples: 4,
            ..cfg
        };
        assert!(fit_dimension(&[1.0, 2.0], &bad).is_err());
    }

    #[test]
    fn normal_kind_is_closed_form() {
        let values = tgn_samples(0.5, 0.2 * std::f64::consts::SQRT_2, 2.0, 5000, 11);
        let fit = fit_dimension(&values, &FitConfig::with_kind(DistributionKind::Normal)).unwrap();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert_eq!(fit.params.mu, mean);
        assert!((fit.params.sigma / std::f64::consts::SQRT_2 - sd).abs() < 1e-15);
        assert_eq!(fit.params.beta, 2.0);
        let analytic = -0.5 * n * (2.0 * std::f64::consts::PI * sd * sd).ln() - 0.5 * n;
        assert!((fit.log_likelihood - analytic).abs() < 1e-9 * analytic.abs());
    }

    #[test]
    fn zeros_are_omitted() {
        let mut values = tgn_samples(0.4, 0.3, 1.2, 4000, 5);
        values.extend(std::iter::repeat(0.0).take(1000));
        let fit = fit_dimension(&values, &FitConfig::default()).unwrap();
        assert_eq!(fit.n_zero, 1000);
        assert_eq!(fit.n_used, 4000);
        assert_eq!(fit.params.a1, 0.0);
        assert_eq!(fit.params.a2, values.iter().copied().fold(0.0, f64::max));
    }

    #[test]
    fn objective_not_worse_than_start() {
        let values = tgn_samples(0.1, 0.3, 0.8, 3000, 9);
        let fit = fit_dimension(&values, &FitConfig::default()).unwrap();
        let s = summarize(&values);
        let start = TgnParams::new(s.mean, s.sample_std, 2.0, 0.0, s.max).density().unwrap();
        let (ll_start, _) = sum_log_density(&start, &values);
        assert!(fit.log_likelihood >= ll_start);
        assert!(fit.converged);
    }

    #[test]
    fn model_text_round_trip() {
        let columns = vec![tgn_samples(0.2, 0.3, 1.1, 500, 1), vec![0.0; 500]];
        let fm = FeatureMatrix::from_columns(&columns, "fixture a").unwrap();
        let model = fit_model(&fm, &FitConfig::default()).unwrap();
        assert_eq!(model.dims[1].status, FitStatus::FallbackDegenerate);
        let text = model_to_text(&model);
        let back = model_from_text(&text).unwrap();
        assert_eq!(back.kind, model.kind);
        assert_eq!(back.source_tag, "fixture a");
        for (a, b) in model.dims.iter().zip(&back.dims) {
            assert_eq!(a.params, b.params);
            assert_eq!(a.log_likelihood.to_bits(), b.log_likelihood.to_bits());
            assert_eq!((a.n_used, a.n_zero, a.status), (b.n_used, b.n_zero, b.status));
        }
        assert!(model_from_text("nonsense").is_err());
        let broken = text.replace(" ok", " maybe");
        assert!(model_from_text(&broken).is_err());
    }

    #[test]
    fn likelihood_on_training_data_matches_fit() {
        let columns = vec![tgn_samples(0.2, 0.3, 1.1, 2000, 1), tgn_samples(1.0, 0.5, 0.7, 2000, 2)];
        let fm = FeatureMatrix::from_columns(&columns, "t").unwrap();
        let model = fit_model(&fm, &FitConfig::default()).unwrap();
        let report = log_likelihood(&model, &fm).unwrap();
        for (fit, ll) in model.dims.iter().zip(&report.per_dim) {
            assert!((fit.log_likelihood - ll).abs() <= 1e-9 * ll.abs().max(1.0));
        }
        assert_eq!(report.n_clamped, 0);
        let narrow = FeatureMatrix::from_columns(&columns[..1], "t").unwrap();
        assert!(log_likelihood(&model, &narrow).is_err());
    }
}
