//! Per-dimension statistics, inter-dimension correlation and histograms of
//! a feature matrix, with delimiter-separated export.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::fid::scatter_matrix;

/// Default number of sampled pairs for the correlation summary.
pub const DEFAULT_PCC_PAIRS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionStats {
    pub zero_fraction: f64,
    pub mean: f64,
    pub std: f64,
    /// Standard (non-excess) kurtosis of the values that are not exactly
    /// zero; `None` with fewer than four of them.
    pub kurtosis: Option<f64>,
}

/// Fourth standardized central moment; `None` for fewer than four values or
/// zero variance.
pub fn kurtosis(values: &[f64]) -> Option<f64> {
    if values.len() < 4 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (m2, m4) = values.iter().fold((0.0, 0.0), |(m2, m4), &v| {
        let c = (v - mean) * (v - mean);
        (m2 + c, m4 + c * c)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    (m2 > 0.0).then(|| m4 / (m2 * m2))
}

fn column_stats(col: &[f64]) -> DimensionStats {
    let n = col.len() as f64;
    let zeros = col.iter().filter(|&&v| v == 0.0).count();
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let nonzero: Vec<f64> = col.iter().copied().filter(|&v| v != 0.0).collect();
    DimensionStats {
        zero_fraction: zeros as f64 / n,
        mean,
        std: var.sqrt(),
        kurtosis: kurtosis(&nonzero),
    }
}

pub fn dimension_stats(features: &FeatureMatrix) -> Result<Vec<DimensionStats>> {
    if features.n() < 4 {
        return Err(Error::InsufficientSamples {
            available: features.n(),
            required: 4,
        });
    }
    Ok((0..features.d())
        .into_par_iter()
        .map(|j| column_stats(&features.column(j)))
        .collect())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:e}"))
}

pub fn stats_to_delimited(stats: &[DimensionStats], delimiter: char) -> String {
    let mut out = String::new();
    let d = delimiter;
    writeln!(out, "dim{d}zero_fraction{d}mean{d}std{d}kurtosis").unwrap();
    for (i, s) in stats.iter().enumerate() {
        writeln!(
            out,
            "{i}{d}{:e}{d}{:e}{d}{:e}{d}{}",
            s.zero_fraction,
            s.mean,
            s.std,
            fmt_opt(s.kurtosis)
        )
        .unwrap();
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairSelection {
    All,
    Sampled { pairs: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub i: usize,
    pub j: usize,
    /// `None` when either dimension has zero variance.
    pub pcc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PccReport {
    pub pairs: Vec<PairCorrelation>,
    pub mean_abs_pcc: f64,
    pub std_abs_pcc: f64,
    pub mean_pcc: f64,
    pub std_pcc: f64,
    /// Pairs whose correlation is undefined.
    pub n_undefined: usize,
}

/// Map a linear index over the strict upper triangle to `(i, j)`, `i < j`.
fn pair_from_index(mut k: usize, d: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = d - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
        i += 1;
    }
}

fn selected_pairs(d: usize, selection: PairSelection) -> Vec<(usize, usize)> {
    let total = d * d.saturating_sub(1) / 2;
    match selection {
        PairSelection::Sampled { pairs, seed } if pairs < total => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = rand::seq::index::sample(&mut rng, total, pairs).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|k| pair_from_index(k, d)).collect()
        }
        _ => (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect(),
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    if n == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Pearson correlation between a single pair of dimensions.
///
/// A dimension paired with itself gives exactly 1; pairs are read from one
/// triangle of the cross-product matrix so `pcc(i, j)` and `pcc(j, i)` are
/// bit-identical.
pub fn pcc(features: &FeatureMatrix, i: usize, j: usize) -> Result<Option<f64>> {
    let d = features.d();
    if i >= d || j >= d {
        return Err(Error::InvalidParams(format!("dimension {} out of range for d={d}", i.max(j))));
    }
    let (a, b) = (i.min(j), i.max(j));
    let sub = FeatureMatrix::from_columns(&[features.column(a), features.column(b)], "")?;
    let (_, s) = scatter_matrix(&sub);
    Ok(correlation(s[(0, 1)], s[(0, 0)], s[(1, 1)], a == b))
}

fn correlation(sxy: f64, sxx: f64, syy: f64, same: bool) -> Option<f64> {
    if !(sxx > 0.0 && syy > 0.0) {
        return None;
    }
    if same {
        return Some(1.0);
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn pairwise_pcc(features: &FeatureMatrix, selection: PairSelection) -> Result<PccReport> {
    if features.n() < 3 {
        return Err(Error::InsufficientSamples {
            available: features.n(),
            required: 3,
        });
    }
    let d = features.d();
    let list = selected_pairs(d, selection);
    let pairs: Vec<PairCorrelation> = match selection {
        PairSelection::Sampled { .. } if list.len() < d * d.saturating_sub(1) / 2 => {
            let columns: Vec<Vec<f64>> = (0..d).into_par_iter().map(|j| centred(&features.column(j))).collect();
            let norms: Vec<f64> = columns.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
            list.par_iter()
                .map(|&(i, j)| {
                    let sxy = columns[i].iter().zip(&columns[j]).map(|(x, y)| x * y).sum();
                    PairCorrelation {
                        i,
                        j,
                        pcc: correlation(sxy, norms[i], norms[j], false),
                    }
                })
                .collect()
        }
        _ => {
            let (_, s) = scatter_matrix(features);
            list.iter()
                .map(|&(i, j)| PairCorrelation {
                    i,
                    j,
                    pcc: correlation(s[(i, j)], s[(i, i)], s[(j, j)], false),
                })
                .collect()
        }
    };

    let defined = pairs.iter().filter_map(|p| p.pcc);
    let (mean_pcc, std_pcc) = mean_std(defined.clone());
    let (mean_abs_pcc, std_abs_pcc) = mean_std(defined.map(f64::abs));
    let n_undefined = pairs.iter().filter(|p| p.pcc.is_none()).count();
    Ok(PccReport {
        pairs,
        mean_abs_pcc,
        std_abs_pcc,
        mean_pcc,
        std_pcc,
        n_undefined,
    })
}

fn centred(col: &[f64]) -> Vec<f64> {
    let mean = col.iter().sum::<f64>() / col.len() as f64;
    col.iter().map(|v| v - mean).collect()
}

pub fn pcc_to_delimited(report: &PccReport, delimiter: char) -> String {
    let d = delimiter;
    let mut out = String::new();
    writeln!(out, "i{d}j{d}pcc{d}abs_pcc").unwrap();
    for p in &report.pairs {
        writeln!(out, "{}{d}{}{d}{}{d}{}", p.i, p.j, fmt_opt(p.pcc), fmt_opt(p.pcc.map(f64::abs))).unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub dim: usize,
    /// `bins + 1` equally spaced edges from 0 to the column maximum.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Equal-width histogram of one dimension over `[0, max]`.
///
/// Values below zero land in the first bin and the maximum in the last, so
/// the counts always sum to `n`. An all-zero column uses the range `[0, 1]`.
pub fn histogram(features: &FeatureMatrix, dim: usize, bins: usize) -> Result<Histogram> {
    if dim >= features.d() {
        return Err(Error::InvalidParams(format!("dimension {dim} out of range for d={}", features.d())));
    }
    if bins == 0 {
        return Err(Error::InvalidParams("histogram needs at least one bin".into()));
    }
    let col = features.column(dim);
    let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let upper = if max > 0.0 { max } else { 1.0 };
    let width = upper / bins as f64;
    let edges = (0..=bins).map(|k| if k == bins { upper } else { k as f64 * width }).collect();
    let mut counts = vec![0u64; bins];
    for v in col {
        let k = ((v / width).floor().max(0.0) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(Histogram { dim, edges, counts })
}

pub fn histogram_to_delimited(h: &Histogram, delimiter: char) -> String {
    let d = delimiter;
    let mut out = String::new();
    writeln!(out, "dim{d}lower{d}upper{d}count").unwrap();
    for (k, c) in h.counts.iter().enumerate() {
        writeln!(out, "{}{d}{:e}{d}{:e}{d}{c}", h.dim, h.edges[k], h.edges[k + 1]).unwrap();
    }
    out
}
