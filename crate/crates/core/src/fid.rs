//! Fréchet distance between Gaussian fits to two feature sets.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Eigenvalues down to this (negative) value are treated as rounding noise.
pub const PSD_TOLERANCE: f64 = 1e-8;

const ROW_CHUNK: usize = 2048;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianStats {
    pub mean: Vec<f64>,
    /// Row-major `d × d` sample covariance.
    pub cov: Vec<f64>,
    pub n: usize,
}

impl GaussianStats {
    pub fn d(&self) -> usize {
        self.mean.len()
    }

    pub fn cov_matrix(&self) -> DMatrix<f64> {
        let d = self.d();
        DMatrix::from_row_slice(d, d, &self.cov)
    }
}

/// Unnormalized centred cross-product matrix and column means.
pub(crate) fn scatter_matrix(features: &FeatureMatrix) -> (DVector<f64>, DMatrix<f64>) {
    let (n, d) = (features.n(), features.d());
    let mut mean = DVector::zeros(d);
    for i in 0..n {
        for (j, &v) in features.row(i).iter().enumerate() {
            mean[j] += v as f64;
        }
    }
    mean /= n.max(1) as f64;

    let mut scatter = DMatrix::zeros(d, d);
    let mut start = 0;
    while start < n {
        let rows = ROW_CHUNK.min(n - start);
        let block = DMatrix::from_fn(rows, d, |r, c| features.get(start + r, c) as f64 - mean[c]);
        scatter += block.transpose() * &block;
        start += rows;
    }
    // use one triangle so the result is exactly symmetric
    for i in 0..d {
        for j in 0..i {
            scatter[(i, j)] = scatter[(j, i)];
        }
    }
    (mean, scatter)
}

/// Sample mean and covariance (denominator `n − 1`).
pub fn gaussian_stats(features: &FeatureMatrix) -> Result<GaussianStats> {
    if features.n() < 2 {
        return Err(Error::InsufficientSamples {
            available: features.n(),
            required: 2,
        });
    }
    let (mean, scatter) = scatter_matrix(features);
    let cov = scatter / (features.n() - 1) as f64;
    let d = features.d();
    let mut flat = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            flat.push(cov[(i, j)]);
        }
    }
    Ok(GaussianStats {
        mean: mean.iter().copied().collect(),
        cov: flat,
        n: features.n(),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FidOptions {
    /// Added to the diagonal of both covariances before the square root.
    pub ridge: f64,
}

fn clamped_eigenvalues(eig: &DVector<f64>) -> Result<Vec<f64>> {
    eig.iter()
        .map(|&l| {
            if l < -PSD_TOLERANCE {
                Err(Error::NotPositiveSemiDefinite { eigenvalue: l })
            } else {
                Ok(l.max(0.0))
            }
        })
        .collect()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `‖μa − μb‖² + tr(Σa + Σb − 2(Σa Σb)^{1/2})`.
///
/// The trace of the square root is taken from the symmetric product
/// `Σa^{1/2} Σb Σa^{1/2}`, which has the same spectrum as `Σa Σb`.
pub fn fid(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    fid_with(a, b, &FidOptions::default())
}

pub fn fid_with(a: &GaussianStats, b: &GaussianStats, opts: &FidOptions) -> Result<f64> {
    if a.d() != b.d() {
        return Err(Error::DimensionMismatch {
            expected: a.d(),
            found: b.d(),
        });
    }
    if !(opts.ridge >= 0.0 && opts.ridge.is_finite()) {
        return Err(Error::InvalidParams(format!("ridge must be finite and non-negative, got {}", opts.ridge)));
    }
    let d = a.d();
    let ridge = DMatrix::<f64>::identity(d, d) * opts.ridge;
    let mut ca = a.cov_matrix() + &ridge;
    let mut cb = b.cov_matrix() + &ridge;
    symmetrize(&mut ca);
    symmetrize(&mut cb);

    let eig_a = SymmetricEigen::new(ca.clone());
    let la = clamped_eigenvalues(&eig_a.eigenvalues)?;
    clamped_eigenvalues(&SymmetricEigen::new(cb.clone()).eigenvalues)?;
    let root = DVector::from_iterator(d, la.iter().map(|l| l.sqrt()));
    let v = &eig_a.eigenvectors;
    let sqrt_a = v * DMatrix::from_diagonal(&root) * v.transpose();

    let mut inner = &sqrt_a * &cb * &sqrt_a;
    symmetrize(&mut inner);
    let lm = clamped_eigenvalues(&SymmetricEigen::new(inner).eigenvalues)?;
    let tr_sqrt: f64 = lm.iter().map(|l| l.sqrt()).sum();

    let mean_term: f64 = a.mean.iter().zip(&b.mean).map(|(x, y)| (x - y) * (x - y)).sum();
    let value = mean_term + ca.trace() + cb.trace() - 2.0 * tr_sqrt;
    Ok(value.max(0.0))
}

/// Convenience: FID between two feature matrices.
pub fn fid_features(test: &FeatureMatrix, reference: &FeatureMatrix, opts: &FidOptions) -> Result<f64> {
    fid_with(&gaussian_stats(test)?, &gaussian_stats(reference)?, opts)
}
