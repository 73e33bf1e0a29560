//! Kullback–Leibler and Jensen–Shannon divergences between fitted densities,
//! and the dimension-averaged TREND score.
//!
//! JSD uses base-2 logarithms so every per-dimension value lies in `[0, 1]`.
//! Both divergences are evaluated by adaptive quadrature; the integrand of
//! the JSD is written symmetrically in its two arguments, so swapping them
//! gives a bit-identical result.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{DimensionFit, FittedModel};
use crate::quadrature::{integrate_with_breaks, QuadratureSpec};
use crate::tgn::{DistributionKind, Tgn, TgnParams};

fn breakpoints(p: &Tgn, q: &Tgn) -> Vec<f64> {
    let mut b: Vec<f64> = p.breakpoints().into_iter().chain(q.breakpoints()).collect();
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// `KL(p ‖ q)` in nats. `+∞` when `p` has support where `q` has none.
pub fn kld(p: &TgnParams, q: &TgnParams, quad: &QuadratureSpec) -> Result<f64> {
    let dp = p.density()?;
    let dq = q.density()?;
    if p.a1 < q.a1 || p.a2 > q.a2 {
        return Ok(f64::INFINITY);
    }
    let (lo, hi) = dp.effective_support();
    let integrand = |t: f64| {
        let lp = dp.log_pdf_clamped(t);
        let lq = dq.log_pdf_clamped(t);
        let w = lp.exp();
        if w == 0.0 {
            0.0
        } else {
            w * (lp - lq)
        }
    };
    let r = integrate_with_breaks(integrand, &quad.over(lo, hi), &breakpoints(&dp, &dq))?;
    Ok(r.value.max(0.0))
}

/// One side of the JSD integrand: `a·log₂(2a / (a + b))`.
#[inline]
fn half_term(a: f64, b: f64) -> f64 {
    if a <= 0.0 {
        0.0
    } else {
        a * (2.0 * a / (a + b)).log2()
    }
}

/// Jensen–Shannon divergence in bits, in `[0, 1]`.
pub fn jsd(p: &TgnParams, q: &TgnParams, quad: &QuadratureSpec) -> Result<f64> {
    let dp = p.density()?;
    let dq = q.density()?;
    jsd_densities(&dp, &dq, quad)
}

pub(crate) fn jsd_densities(dp: &Tgn, dq: &Tgn, quad: &QuadratureSpec) -> Result<f64> {
    let (plo, phi) = dp.effective_support();
    let (qlo, qhi) = dq.effective_support();
    let lo = plo.min(qlo);
    let hi = phi.max(qhi);
    let integrand = |t: f64| {
        let a = dp.pdf(t);
        let b = dq.pdf(t);
        0.5 * (half_term(a, b) + half_term(b, a))
    };
    let r = integrate_with_breaks(integrand, &quad.over(lo, hi), &breakpoints(dp, dq))?;
    Ok(r.value.clamp(0.0, 1.0))
}

/// Dimension-averaged JSD between two fitted models, with diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub trend: f64,
    pub per_dim_jsd: Vec<f64>,
    /// Evaluation samples clamped into a fitted support while scoring.
    pub n_clamped: usize,
    pub test_tag: String,
    pub ref_tag: String,
    /// Dimensions scored by the degenerate-fit rule instead of quadrature.
    pub degenerate_dims: Vec<usize>,
    pub warnings: Vec<String>,
}

impl ScoreReport {
    /// Line-oriented text: a `key value` header, then one `dim jsd` line each.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "trend {:e}", self.trend).unwrap();
        writeln!(out, "test {}", self.test_tag).unwrap();
        writeln!(out, "reference {}", self.ref_tag).unwrap();
        writeln!(out, "dimensions {}", self.per_dim_jsd.len()).unwrap();
        writeln!(out, "clamped {}", self.n_clamped).unwrap();
        writeln!(out, "degenerate {}", self.degenerate_dims.len()).unwrap();
        for w in &self.warnings {
            writeln!(out, "warning {w}").unwrap();
        }
        for (i, j) in self.per_dim_jsd.iter().enumerate() {
            writeln!(out, "{i} {j:e}").unwrap();
        }
        out
    }
}

/// JSD for one dimension, applying the degenerate-fit rule: 1 if exactly
/// one side is degenerate, 0 if both are.
fn dimension_jsd(test: &DimensionFit, reference: &DimensionFit, quad: &QuadratureSpec) -> Result<(f64, bool)> {
    match (test.is_degenerate(), reference.is_degenerate()) {
        (true, true) => Ok((0.0, true)),
        (true, false) | (false, true) => Ok((1.0, true)),
        (false, false) => jsd(&test.params, &reference.params, quad).map(|j| (j, false)),
    }
}

/// TREND: the mean over dimensions of the JSD between matching densities.
///
/// The mean is accumulated in index order, so the score does not depend on
/// how the per-dimension work was scheduled.
pub fn trend_score(test: &FittedModel, reference: &FittedModel, quad: &QuadratureSpec) -> Result<ScoreReport> {
    if test.d() != reference.d() {
        return Err(Error::DimensionMismatch {
            expected: reference.d(),
            found: test.d(),
        });
    }
    if test.d() == 0 {
        return Err(Error::Empty("models have no dimensions".into()));
    }
    let mut warnings = Vec::new();
    if test.kind != reference.kind {
        warnings.push(format!("kind mismatch: test is {}, reference is {}", test.kind, reference.kind));
    } else if test.kind != DistributionKind::TruncatedGeneralizedNormal {
        warnings.push(format!("models are {}, not tgn", test.kind));
    }

    let per_dim: Vec<(f64, bool)> = test
        .dims
        .par_iter()
        .zip(reference.dims.par_iter())
        .map(|(t, r)| dimension_jsd(t, r, quad))
        .collect::<Result<_>>()?;

    let per_dim_jsd: Vec<f64> = per_dim.iter().map(|(j, _)| *j).collect();
    let degenerate_dims: Vec<usize> = per_dim
        .iter()
        .enumerate()
        .filter_map(|(i, (_, d))| d.then_some(i))
        .collect();
    let trend = per_dim_jsd.iter().sum::<f64>() / per_dim_jsd.len() as f64;

    Ok(ScoreReport {
        trend,
        per_dim_jsd,
        n_clamped: 0,
        test_tag: test.source_tag.clone(),
        ref_tag: reference.source_tag.clone(),
        degenerate_dims,
        warnings,
    })
}
