use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trend_core::DistributionKind;

#[derive(Debug, Parser)]
#[command(name = "trend", version, about = "Score generated feature sets against a reference with TREND and FID")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit per-dimension densities to a feature file.
    Fit(FitArgs),
    /// Score a test set against a reference set.
    Score(ScoreArgs),
    /// Run a toy scenario contrasting TREND with FID.
    Toy(ToyArgs),
    /// Rescore a subsampled test set at several fractions.
    Robustness(RobustnessArgs),
    /// Per-dimension statistics, correlations and histograms.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    /// JSON records.
    Records,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Tgn,
    Gn,
    Normal,
}

impl From<KindArg> for DistributionKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Tgn => DistributionKind::TruncatedGeneralizedNormal,
            KindArg::Gn => DistributionKind::GeneralizedNormal,
            KindArg::Normal => DistributionKind::Normal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Trend,
    Fid,
    Both,
}

/// Settings shared by every command. Flags override the config file.
#[derive(Clone, Debug, Default, Args)]
pub struct Tuning {
    /// TOML file with `seed`, `[fit]`, `[quadrature]` and `[fid]` sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t, global = true)]
    pub format: Format,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    #[arg(long, global = true)]
    pub conv_tol: Option<f64>,
    #[arg(long, global = true)]
    pub grad_step: Option<f64>,
    #[arg(long, global = true)]
    pub min_samples: Option<usize>,
    #[arg(long, global = true)]
    pub sigma_floor: Option<f64>,
    #[arg(long, global = true)]
    pub beta_min: Option<f64>,
    #[arg(long, global = true)]
    pub beta_max: Option<f64>,
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_intervals: Option<usize>,
    /// Ridge added to both covariances before the FID square root.
    #[arg(long, global = true)]
    pub ridge: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// TFEA file, or csv/tsv/txt text matrix.
    pub features: PathBuf,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Write the fitted model here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Test model or feature file.
    pub test: PathBuf,
    /// Reference model or feature file.
    pub reference: PathBuf,
    #[arg(long, value_enum, default_value_t = Metric::Trend)]
    pub metric: Metric,
    /// Fit kind used when an input is a feature file.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Also write the output to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(Debug, Args)]
pub struct ToyArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub scenario: u8,
    /// Samples per distribution.
    #[arg(long, default_value_t = trend_core::experiments::DEFAULT_TOY_SAMPLES)]
    pub n: usize,
    /// Write the generated samples as TFEA files into this directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    pub test: PathBuf,
    pub reference: PathBuf,
    /// Comma-separated fractions; `1/5` style is accepted.
    #[arg(long, default_value = "1,1/5,1/10,1/50")]
    pub fractions: String,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub features: PathBuf,
    /// Comma-separated dimensions to histogram.
    #[arg(long, value_delimiter = ',')]
    pub histogram: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Number of randomly sampled dimension pairs for the correlation summary.
    #[arg(long, default_value_t = trend_core::analysis::DEFAULT_PCC_PAIRS)]
    pub pcc_pairs: usize,
    /// Use every dimension pair instead of a sample.
    #[arg(long)]
    pub all_pairs: bool,
    /// Write tab-separated tables (stats, pairs, histograms) here.
    #[arg(long)]
    pub export_dir: Option<PathBuf>,
    #[command(flatten)]
    pub tuning: Tuning,
}

pub fn parse_fractions(list: &str) -> Result<Vec<f64>, String> {
    list.split(',')
        .map(|item| {
            let item = item.trim();
            let value = match item.split_once('/') {
                Some((a, b)) => {
                    let a: f64 = a.trim().parse().map_err(|_| format!("bad fraction {item:?}"))?;
                    let b: f64 = b.trim().parse().map_err(|_| format!("bad fraction {item:?}"))?;
                    a / b
                }
                None => item.parse().map_err(|_| format!("bad fraction {item:?}"))?,
            };
            if value > 0.0 && value <= 1.0 {
                Ok(value)
            } else {
                Err(format!("fraction {item} must be in (0, 1]"))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_parse() {
        assert_eq!(parse_fractions("1, 1/5,0.1").unwrap(), vec![1.0, 0.2, 0.1]);
        assert!(parse_fractions("2").is_err());
        assert!(parse_fractions("1/x").is_err());
        assert!(parse_fractions("0").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
