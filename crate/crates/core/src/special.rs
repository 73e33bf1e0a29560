//! Gamma-family special functions.
//!
//! The lower incomplete gamma function is evaluated through the regularized
//! pair `P(u, v)` / `Q(u, v)`: a power series below `v = u + 1`, a continued
//! fraction (modified Lentz) above it. `γ(u, v)` is then `P(u, v)·Γ(u)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const SERIES_MAX_ITER: usize = 10_000;
const CF_MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

fn lanczos_sum(z: f64) -> f64 {
    // z is the shifted argument (u - 1)
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    acc
}

/// Natural log of `Γ(u)` for `u > 0`.
pub fn ln_gamma(u: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::domain("ln_gamma", format!("u = {u} must be finite and > 0")));
    }
    Ok(ln_gamma_unchecked(u))
}

pub(crate) fn ln_gamma_unchecked(u: f64) -> f64 {
    if u < 0.5 {
        // reflection: Γ(u)Γ(1-u) = π / sin(πu)
        (PI / (PI * u).sin()).ln() - ln_gamma_unchecked(1.0 - u)
    } else {
        let z = u - 1.0;
        let t = z + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
    }
}

/// `Γ(u)` for `u > 0`. Overflows to `+∞` above `u ≈ 171.6`.
pub fn gamma_function(u: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::domain("gamma_function", format!("u = {u} must be finite and > 0")));
    }
    Ok(gamma_unchecked(u))
}

pub(crate) fn gamma_unchecked(u: f64) -> f64 {
    if u < 0.5 {
        PI / ((PI * u).sin() * gamma_unchecked(1.0 - u))
    } else if u > 140.0 {
        ln_gamma_unchecked(u).exp()
    } else {
        let z = u - 1.0;
        let t = z + LANCZOS_G + 0.5;
        // split the power so t^(z+0.5) does not overflow before e^-t is applied
        let half = t.powf(0.5 * (z + 0.5));
        (2.0 * PI).sqrt() * half * (half * (-t).exp()) * lanczos_sum(z)
    }
}

/// Regularized incomplete gamma pair `(P(u, v), Q(u, v))` with `P + Q = 1`.
pub fn regularized_gamma(u: f64, v: f64) -> Result<(f64, f64)> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::domain("regularized_gamma", format!("u = {u} must be finite and > 0")));
    }
    if !(v >= 0.0) {
        return Err(Error::domain("regularized_gamma", format!("v = {v} must be >= 0")));
    }
    Ok(regularized_unchecked(u, v))
}

pub(crate) fn regularized_unchecked(u: f64, v: f64) -> (f64, f64) {
    if v == 0.0 {
        return (0.0, 1.0);
    }
    if v == f64::INFINITY {
        return (1.0, 0.0);
    }
    let ln_prefactor = u * v.ln() - v - ln_gamma_unchecked(u);
    if v < u + 1.0 {
        let p = series_p(u, v, ln_prefactor);
        (p, 1.0 - p)
    } else {
        let q = continued_fraction_q(u, v, ln_prefactor);
        (1.0 - q, q)
    }
}

fn series_p(u: f64, v: f64, ln_prefactor: f64) -> f64 {
    let mut ap = u;
    let mut term = 1.0 / u;
    let mut sum = term;
    for _ in 0..SERIES_MAX_ITER {
        ap += 1.0;
        term *= v / ap;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON * 0.5 {
            break;
        }
    }
    (sum.ln() + ln_prefactor).exp().min(1.0)
}

fn continued_fraction_q(u: f64, v: f64, ln_prefactor: f64) -> f64 {
    let mut b = v + 1.0 - u;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=CF_MAX_ITER {
        let an = -(i as f64) * (i as f64 - u);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON * 0.5 {
            break;
        }
    }
    (h.ln() + ln_prefactor).exp().min(1.0)
}

/// Lower incomplete gamma function `γ(u, v) = ∫₀ᵛ t^{u-1} e^{-t} dt`.
///
/// Tends to `Γ(u)` as `v → ∞`; `v = +∞` is accepted and returns `Γ(u)`.
pub fn lower_incomplete_gamma(u: f64, v: f64) -> Result<f64> {
    let (p, _) = regularized_gamma(u, v)?;
    Ok(p * gamma_unchecked(u))
}

/// Which tail of the regularized gamma a target probability is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tail {
    Lower,
    Upper,
}

/// A `Gamma(u, 1)` variable restricted to `[lo, hi]`, with the regularized
/// tail values at both ends precomputed for repeated quantile queries.
#[derive(Clone, Copy, Debug)]
pub(crate) struct GammaInterval {
    u: f64,
    lo: f64,
    hi: f64,
    tail: Tail,
    start: f64,
    width: f64,
}

impl GammaInterval {
    pub(crate) fn new(u: f64, lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        let (p_lo, q_lo) = regularized_unchecked(u, lo);
        let (p_hi, q_hi) = regularized_unchecked(u, hi);
        // express targets in whichever tail keeps them away from 1
        let (tail, start, width) = if p_lo < 0.5 {
            (Tail::Lower, p_lo, p_hi - p_lo)
        } else {
            (Tail::Upper, q_lo, q_lo - q_hi)
        };
        GammaInterval { u, lo, hi, tail, start, width }
    }

    /// Regularized mass of the interval.
    pub(crate) fn mass(&self) -> f64 {
        self.width
    }

    /// Quantile at position `fraction ∈ [0, 1]` within the interval's mass.
    pub(crate) fn quantile(&self, fraction: f64) -> f64 {
        let target = match self.tail {
            Tail::Lower => self.start + fraction * self.width,
            Tail::Upper => self.start - fraction * self.width,
        };
        if !(target > 0.0) || self.width <= 0.0 {
            return match self.tail {
                Tail::Lower => self.lo,
                Tail::Upper => if self.hi.is_finite() { self.hi } else { self.lo },
            };
        }
        solve_gamma_tail(self.u, self.tail, target, self.lo, self.hi).clamp(self.lo, self.hi)
    }
}

#[cfg(test)]
pub(crate) fn truncated_gamma_quantile(u: f64, lo: f64, hi: f64, fraction: f64) -> f64 {
    GammaInterval::new(u, lo, hi).quantile(fraction)
}

/// Upper-tail quantile: the `w` with `Q(u, w) = q`.
pub(crate) fn upper_gamma_quantile(u: f64, q: f64) -> f64 {
    solve_gamma_tail(u, Tail::Upper, q, 0.0, f64::INFINITY)
}

fn solve_gamma_tail(u: f64, tail: Tail, target: f64, lo: f64, hi: f64) -> f64 {
    let ln_target = target.ln();
    let lg = ln_gamma_unchecked(u);
    // residual is increasing in w for both tails
    let residual = |w: f64| -> (f64, f64) {
        let (p, q) = regularized_unchecked(u, w);
        let ln_dens = if w > 0.0 {
            (u - 1.0) * w.ln() - w - lg
        } else {
            f64::NEG_INFINITY
        };
        match tail {
            Tail::Lower => (p.ln() - ln_target, (ln_dens - p.ln()).exp()),
            Tail::Upper => (ln_target - q.ln(), (ln_dens - q.ln()).exp()),
        }
    };

    let mut lo = lo;
    let mut hi = hi;
    if !hi.is_finite() {
        hi = (u + 1.0).max(lo * 2.0 + 1.0);
        while residual(hi).0 < 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return hi;
            }
        }
    }

    let mut w = match tail {
        Tail::Lower => (target.ln() / u + ln_gamma_unchecked(u + 1.0) / u).exp(),
        Tail::Upper => -target.ln() + (u - 1.0) * (-target.ln()).max(1.0).ln(),
    };
    if !(w > lo && w < hi) || !w.is_finite() {
        w = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
    }

    for _ in 0..200 {
        let (r, slope) = residual(w);
        if r == 0.0 {
            return w;
        }
        if r < 0.0 {
            lo = w;
        } else {
            hi = w;
        }
        let next = match tail {
            // lower tail is close to linear in ln w
            Tail::Lower => w * (-r / (w * slope)).exp(),
            Tail::Upper => w - r / slope,
        };
        let next = if next.is_finite() && next > lo && next < hi {
            next
        } else if lo > 0.0 && hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if (next - w).abs() <= 1e-15 * w.abs() || (hi - lo) <= 1e-15 * hi.abs() {
            return next;
        }
        w = next;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_known_values() {
        assert!(rel(gamma_function(1.0).unwrap(), 1.0) < 1e-12);
        assert!(rel(gamma_function(0.5).unwrap(), PI.sqrt()) < 1e-12);
        assert!(rel(gamma_function(4.0).unwrap(), 6.0) < 1e-12);
        assert!(rel(gamma_function(10.0).unwrap(), 362_880.0) < 1e-12);
        assert!(rel(gamma_function(0.1).unwrap(), 9.513_507_698_668_732) < 1e-12);
        assert!(rel(gamma_function(20.0).unwrap(), 121_645_100_408_832_000.0) < 1e-12);
    }

    #[test]
    fn gamma_domain_errors() {
        assert!(gamma_function(0.0).is_err());
        assert!(gamma_function(-1.5).is_err());
        assert!(lower_incomplete_gamma(0.0, 1.0).is_err());
        assert!(lower_incomplete_gamma(1.0, -1e-9).is_err());
        assert!(lower_incomplete_gamma(1.0, f64::NAN).is_err());
    }

    #[test]
    fn lower_incomplete_examples() {
        assert_eq!(lower_incomplete_gamma(1.0, 0.0).unwrap(), 0.0);
        let expected = 1.0 - (-2.0f64).exp();
        assert!(rel(lower_incomplete_gamma(1.0, 2.0).unwrap(), expected) < 1e-12);
        // γ(1/2, v) = √π·erf(√v)
        assert!(rel(lower_incomplete_gamma(0.5, 25.0).unwrap(), PI.sqrt() * (1.0 - 1.5375e-12)) < 1e-12);
        assert!(rel(lower_incomplete_gamma(3.0, f64::INFINITY).unwrap(), 2.0) < 1e-12);
    }

    #[test]
    fn integer_shape_closed_form() {
        // γ(n, v) = (n-1)! e^-v Σ_{k≥n} v^k / k!, free of cancellation
        for &v in &[0.1, 0.9, 2.5, 4.0, 7.5, 30.0] {
            for n in 1..6 {
                let mut term = 1.0;
                let mut sum = 0.0;
                for k in 1..400 {
                    term *= v / k as f64;
                    if k >= n {
                        sum += term;
                    }
                }
                let fact: f64 = (1..n).map(|k| k as f64).product();
                let expected = fact * (-v).exp() * sum;
                let got = lower_incomplete_gamma(n as f64, v).unwrap();
                assert!(rel(got, expected) < 1e-12, "n={n} v={v}: {got} vs {expected}");
            }
        }
    }

    #[test]
    fn converges_to_complete_gamma() {
        for i in 0..=99 {
            let u = 0.1 + 9.9 * i as f64 / 99.0;
            let g = gamma_function(u).unwrap();
            assert!(rel(lower_incomplete_gamma(u, 700.0).unwrap(), g) <= 1e-10, "u={u}");
        }
    }

    #[test]
    fn quantile_inverts_both_tails() {
        for &u in &[0.05, 0.3, 1.0, 2.5, 20.0] {
            for &q in &[1e-15, 1e-6, 0.2, 0.5, 0.9] {
                let w = upper_gamma_quantile(u, q);
                let (_, back) = regularized_unchecked(u, w);
                assert!(rel(back, q) < 1e-9, "u={u} q={q} w={w} back={back}");
            }
            for &f in &[0.0, 0.1, 0.5, 0.99, 1.0] {
                let w = truncated_gamma_quantile(u, 0.5, 3.0, f);
                assert!((0.5..=3.0).contains(&w));
                let (p_lo, _) = regularized_unchecked(u, 0.5);
                let (p_hi, _) = regularized_unchecked(u, 3.0);
                let (p, _) = regularized_unchecked(u, w);
                assert!(((p - p_lo) / (p_hi - p_lo) - f).abs() < 1e-9);
            }
        }
    }
}
