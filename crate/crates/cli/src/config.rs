//! Optional TOML configuration. Command-line flags override file values.

use std::path::Path;

use serde::Deserialize;
use trend_core::fid::FidOptions;
use trend_core::quadrature::{DEFAULT_ABS_TOL, DEFAULT_MAX_INTERVALS, DEFAULT_REL_TOL};
use trend_core::{DistributionKind, FitConfig, QuadratureSpec, DEFAULT_SEED};

use crate::args::Tuning;
use crate::error::CliError;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub fit: FitConfig,
    pub quadrature: QuadratureSection,
    pub fid: FidOptions,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        QuadratureSection {
            abs_tol: DEFAULT_ABS_TOL,
            rel_tol: DEFAULT_REL_TOL,
            max_intervals: DEFAULT_MAX_INTERVALS,
        }
    }
}

/// Effective settings after merging the config file and flags.
#[derive(Clone, Debug)]
pub struct Settings {
    pub seed: u64,
    pub fit: FitConfig,
    pub quad: QuadratureSpec,
    pub fid: FidOptions,
}

pub fn load(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    toml::from_str(&text).map_err(|e| CliError::Config(path.display().to_string(), e.to_string()))
}

pub fn resolve(tuning: &Tuning, kind: Option<DistributionKind>) -> Result<Settings, CliError> {
    let file = match &tuning.config {
        Some(p) => load(p)?,
        None => FileConfig::default(),
    };
    let mut fit = file.fit;
    if let Some(k) = kind {
        fit.kind = k;
    }
    if let Some(v) = tuning.max_iters {
        fit.max_iters = v;
    }
    if let Some(v) = tuning.conv_tol {
        fit.conv_tol = v;
    }
    if let Some(v) = tuning.grad_step {
        fit.grad_step = v;
    }
    if let Some(v) = tuning.min_samples {
        fit.min_samples = v;
    }
    if let Some(v) = tuning.sigma_floor {
        fit.sigma_floor = v;
    }
    if let Some(v) = tuning.beta_min {
        fit.beta_bounds.0 = v;
    }
    if let Some(v) = tuning.beta_max {
        fit.beta_bounds.1 = v;
    }
    fit.validate()?;

    let q = file.quadrature;
    let quad = QuadratureSpec::default()
        .with_tolerances(tuning.abs_tol.unwrap_or(q.abs_tol), tuning.rel_tol.unwrap_or(q.rel_tol));
    let quad = QuadratureSpec {
        max_intervals: tuning.max_intervals.unwrap_or(q.max_intervals),
        ..quad
    };
    quad.validate()?;

    let mut fid = file.fid;
    if let Some(r) = tuning.ridge {
        fid.ridge = r;
    }
    Ok(Settings {
        seed: tuning.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        fit,
        quad,
        fid,
    })
}
