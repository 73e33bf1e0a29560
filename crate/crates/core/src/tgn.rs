//! Truncated generalized normal (TGN) densities.
//!
//! The density on `[a1, a2]` is
//!
//! ```text
//! f(x) = β / (σ G) · exp(-(|x - μ| / σ)^β)
//! ```
//!
//! where `G` renormalizes the truncated mass. With `a = 1/β` and
//! `zᵢ = (|Aᵢ - μ| / σ)^β`, `G = s₂ γ(a, z₂) - s₁ γ(a, z₁)` with
//! `sᵢ = sign(Aᵢ - μ)`. That reduces to `γ(a, z₁) + γ(a, z₂)` when `μ` lies
//! inside the support and stays a valid normalizer when it does not.
//!
//! `σ` is a scale parameter: with `β = 2` and no truncation the density is
//! normal with standard deviation `σ/√2`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadratureSpec};
use crate::special::{gamma_unchecked, ln_gamma_unchecked, regularized_unchecked, upper_gamma_quantile, GammaInterval};

/// Densities below `exp(-UNDERFLOW_LOG)` are reported as exactly zero.
const UNDERFLOW_LOG: f64 = 700.0;

/// Tail mass treated as negligible when an infinite bound has to be cut off.
const TAIL_CUTOFF: f64 = 1e-18;

/// Which member of the family a fitted density belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionKind {
    /// `β = 2`, no truncation.
    Normal,
    /// Free `β`, no truncation.
    #[serde(rename = "gn")]
    GeneralizedNormal,
    /// Free `β`, truncated to `[0, max]`.
    #[serde(rename = "tgn")]
    TruncatedGeneralizedNormal,
}

impl DistributionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DistributionKind::Normal => "normal",
            DistributionKind::GeneralizedNormal => "gn",
            DistributionKind::TruncatedGeneralizedNormal => "tgn",
        }
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self, DistributionKind::TruncatedGeneralizedNormal)
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(DistributionKind::Normal),
            "gn" | "generalized-normal" => Ok(DistributionKind::GeneralizedNormal),
            "tgn" | "truncated-generalized-normal" => Ok(DistributionKind::TruncatedGeneralizedNormal),
            other => Err(Error::InvalidParams(format!("unknown distribution kind '{other}'"))),
        }
    }
}

/// Location, scale, shape and truncation bounds of one TGN density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TgnParams {
    pub mu: f64,
    pub sigma: f64,
    pub beta: f64,
    pub a1: f64,
    pub a2: f64,
}

impl TgnParams {
    pub fn new(mu: f64, sigma: f64, beta: f64, a1: f64, a2: f64) -> Self {
        TgnParams { mu, sigma, beta, a1, a2 }
    }

    /// Generalized normal without truncation.
    pub fn untruncated(mu: f64, sigma: f64, beta: f64) -> Self {
        TgnParams::new(mu, sigma, beta, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Normal density with the given mean and standard deviation.
    pub fn normal(mean: f64, std_dev: f64) -> Self {
        TgnParams::untruncated(mean, std_dev * std::f64::consts::SQRT_2, 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::InvalidParams(format!("mu = {} must be finite", self.mu)));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParams(format!("sigma = {} must be finite and > 0", self.sigma)));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParams(format!("beta = {} must be finite and > 0", self.beta)));
        }
        if self.a1.is_nan() || self.a2.is_nan() || !(self.a1 < self.a2) {
            return Err(Error::InvalidParams(format!(
                "truncation bounds must satisfy a1 < a2, got [{}, {}]",
                self.a1, self.a2
            )));
        }
        Ok(())
    }

    /// Validate and precompute the normalizer.
    pub fn density(&self) -> Result<Tgn> {
        Tgn::new(*self)
    }
}

/// A validated TGN density with its normalizer cached.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tgn {
    params: TgnParams,
    ln_norm: f64,
}

/// Standardized distance `(|x - μ| / σ)^β`.
#[inline]
fn standardized(x: f64, mu: f64, sigma: f64, beta: f64) -> f64 {
    ((x - mu).abs() / sigma).powf(beta)
}

/// Regularized mass of `[l, r]` for the untruncated family, in units where
/// the whole line has mass 2 (one per side of `μ`).
pub(crate) fn interval_mass(mu: f64, sigma: f64, beta: f64, l: f64, r: f64) -> f64 {
    let a = 1.0 / beta;
    let z = |x: f64| standardized(x, mu, sigma, beta);
    let same_side = |near: f64, far: f64| {
        let (p_near, q_near) = regularized_unchecked(a, near);
        let (p_far, q_far) = regularized_unchecked(a, far);
        if p_near < 0.5 {
            p_far - p_near
        } else {
            q_near - q_far
        }
    };
    if l >= mu {
        same_side(z(l), z(r))
    } else if r <= mu {
        same_side(z(r), z(l))
    } else {
        regularized_unchecked(a, z(l)).0 + regularized_unchecked(a, z(r)).0
    }
}

/// `ln G` for the given parameters, or an error if the normalizer vanishes.
pub(crate) fn ln_normalizer(p: &TgnParams) -> Result<f64> {
    let mass = interval_mass(p.mu, p.sigma, p.beta, p.a1, p.a2);
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::InvalidParams(format!(
            "normalizer vanishes for mu={}, sigma={}, beta={} on [{}, {}]",
            p.mu, p.sigma, p.beta, p.a1, p.a2
        )));
    }
    Ok(ln_gamma_unchecked(1.0 / p.beta) + mass.ln())
}

impl Tgn {
    pub fn new(params: TgnParams) -> Result<Self> {
        params.validate()?;
        let ln_norm = ln_normalizer(&params)?;
        Ok(Tgn { params, ln_norm })
    }

    pub fn params(&self) -> &TgnParams {
        &self.params
    }

    /// `G`, the truncation normalizer.
    pub fn normalizer(&self) -> f64 {
        self.ln_norm.exp()
    }

    pub fn ln_normalizer(&self) -> f64 {
        self.ln_norm
    }

    pub fn in_support(&self, x: f64) -> bool {
        x >= self.params.a1 && x <= self.params.a2
    }

    #[inline]
    fn log_density_unchecked(&self, x: f64) -> f64 {
        let p = &self.params;
        p.beta.ln() - p.sigma.ln() - self.ln_norm - standardized(x, p.mu, p.sigma, p.beta)
    }

    /// Density at `x`; exactly zero outside `[a1, a2]` and below `e^-700`.
    #[inline]
    pub fn pdf(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return 0.0;
        }
        let lp = self.log_density_unchecked(x);
        if lp < -UNDERFLOW_LOG {
            0.0
        } else {
            lp.exp()
        }
    }

    /// Log-density at `x`; a domain error outside the support.
    pub fn log_pdf(&self, x: f64) -> Result<f64> {
        if !self.in_support(x) {
            return Err(Error::domain(
                "log_pdf",
                format!("x = {x} outside support [{}, {}]", self.params.a1, self.params.a2),
            ));
        }
        Ok(self.log_density_unchecked(x))
    }

    /// Log-density with `x` clamped into the support first.
    pub(crate) fn log_pdf_clamped(&self, x: f64) -> f64 {
        self.log_density_unchecked(x.clamp(self.params.a1, self.params.a2))
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        let p = &self.params;
        if x <= p.a1 {
            return 0.0;
        }
        if x >= p.a2 {
            return 1.0;
        }
        let total = (self.ln_norm - ln_gamma_unchecked(1.0 / p.beta)).exp();
        (interval_mass(p.mu, p.sigma, p.beta, p.a1, x) / total).clamp(0.0, 1.0)
    }

    /// Finite interval holding all but a negligible tail of the mass.
    pub fn effective_support(&self) -> (f64, f64) {
        let p = &self.params;
        if p.a1.is_finite() && p.a2.is_finite() {
            return (p.a1, p.a2);
        }
        let reach = p.sigma * upper_gamma_quantile(1.0 / p.beta, TAIL_CUTOFF).powf(1.0 / p.beta);
        let lo = if p.a1.is_finite() { p.a1 } else { (p.mu - reach).min(p.a2 - p.sigma) };
        let hi = if p.a2.is_finite() { p.a2 } else { (p.mu + reach).max(p.a1 + p.sigma) };
        (lo, hi)
    }

    /// Points where the density is not smooth: the mode and the bounds.
    pub(crate) fn breakpoints(&self) -> [f64; 3] {
        [self.params.mu, self.params.a1, self.params.a2]
    }

    /// `count` independent draws, reproducible for a given `seed`.
    ///
    /// Inverse-CDF sampling: pick a side of `μ` in proportion to its mass,
    /// then invert the restricted gamma law of `(|x - μ|/σ)^β` on that side.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(count, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        let p = &self.params;
        let a = 1.0 / p.beta;
        let z = |x: f64| standardized(x, p.mu, p.sigma, p.beta);
        let left = (p.a1 < p.mu).then(|| GammaInterval::new(a, z(p.a2.min(p.mu)), z(p.a1)));
        let right = (p.a2 > p.mu).then(|| GammaInterval::new(a, z(p.a1.max(p.mu)), z(p.a2)));
        let left_mass = left.map_or(0.0, |g| g.mass());
        let right_mass = right.map_or(0.0, |g| g.mass());
        let left_share = left_mass / (left_mass + right_mass);

        (0..count)
            .map(|_| {
                let side: f64 = rng.random();
                let u: f64 = rng.random();
                let x = match (left, right) {
                    (Some(l), _) if side < left_share => p.mu - p.sigma * l.quantile(u).powf(a),
                    (_, Some(r)) => p.mu + p.sigma * r.quantile(u).powf(a),
                    (Some(l), None) => p.mu - p.sigma * l.quantile(u).powf(a),
                    (None, None) => p.mu,
                };
                x.clamp(p.a1, p.a2)
            })
            .collect()
    }

    /// Mean, variance and kurtosis (normal reference value 3) by quadrature.
    pub fn moments(&self, quad: &QuadratureSpec) -> Result<Moments> {
        let (lo, hi) = self.effective_support();
        let spec = quad.over(lo, hi);
        let breaks = self.breakpoints();
        let raw = |k: i32, centre: f64| -> Result<f64> {
            integrate_with_breaks(|x| (x - centre).powi(k) * self.pdf(x), &spec, &breaks).map(|r| r.value)
        };
        let mean = raw(1, 0.0)?;
        let variance = raw(2, mean)?;
        let fourth = raw(4, mean)?;
        Ok(Moments {
            mean,
            variance,
            kurtosis: fourth / (variance * variance),
        })
    }

    /// Fourth standardized central moment (3 for a normal density).
    pub fn kurtosis(&self, quad: &QuadratureSpec) -> Result<f64> {
        self.moments(quad).map(|m| m.kurtosis)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub kurtosis: f64,
}

/// Kurtosis of the untruncated family, `Γ(5/β)Γ(1/β) / Γ(3/β)²`.
pub fn untruncated_kurtosis(beta: f64) -> f64 {
    (ln_gamma_unchecked(5.0 / beta) + ln_gamma_unchecked(1.0 / beta) - 2.0 * ln_gamma_unchecked(3.0 / beta)).exp()
}

/// Variance of the untruncated family, `σ² Γ(3/β) / Γ(1/β)`.
pub fn untruncated_variance(sigma: f64, beta: f64) -> f64 {
    sigma * sigma * gamma_unchecked(3.0 / beta) / gamma_unchecked(1.0 / beta)
}
