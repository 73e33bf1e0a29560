use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use trend_core::analysis::{histogram_to_delimited, pcc_to_delimited, stats_to_delimited};
use trend_core::experiments::{robustness_to_text, toy_fixtures, ToyScenario};
use trend_core::fid::fid_with;
use trend_core::{
    dimension_stats, fit_model, gaussian_stats, histogram, load_features, log_likelihood, model_from_text,
    model_to_text, pairwise_pcc, robustness, run_toy, trend_score, write_feature_file, DimensionStats, FeatureMatrix,
    FitStatus, FittedModel, Histogram, PairSelection, ScoreReport,
};

use crate::args::{parse_fractions, AnalyzeArgs, FitArgs, Format, Metric, RobustnessArgs, ScoreArgs, ToyArgs};
use crate::config::{resolve, Settings};
use crate::error::CliError;

const MODEL_HEADER: &str = "# trend-model";

fn records<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("records serialize");
    s.push('\n');
    s
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(path.display().to_string(), e))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Io(path.display().to_string(), e))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Spread {
    pub mean: f64,
    pub std: f64,
}

fn spread(values: &[f64]) -> Spread {
    let n = values.len() as f64;
    if values.is_empty() {
        return Spread { mean: f64::NAN, std: f64::NAN };
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Spread { mean, std: var.sqrt() }
}

#[derive(Debug, Serialize)]
pub struct FitSummary {
    pub kind: String,
    pub source: String,
    pub n: usize,
    pub d: usize,
    pub mu: Spread,
    pub sigma: Spread,
    pub beta: Spread,
    /// Average over dimensions of the per-sample log-likelihood.
    pub mean_log_likelihood: f64,
    pub n_ok: usize,
    pub n_degenerate: usize,
    pub n_max_iters: usize,
    pub model: FittedModel,
}

impl FitSummary {
    fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "kind {}", self.kind).unwrap();
        writeln!(out, "source {}", self.source).unwrap();
        writeln!(out, "samples {} dimensions {}", self.n, self.d).unwrap();
        writeln!(out, "parameter\tmean\tstd").unwrap();
        for (name, s) in [("mu", self.mu), ("sigma", self.sigma), ("beta", self.beta)] {
            writeln!(out, "{name}\t{:e}\t{:e}", s.mean, s.std).unwrap();
        }
        writeln!(out, "mean_log_likelihood {:e}", self.mean_log_likelihood).unwrap();
        writeln!(
            out,
            "status ok {} degenerate {} max-iters {}",
            self.n_ok, self.n_degenerate, self.n_max_iters
        )
        .unwrap();
        out
    }
}

pub fn fit(args: &FitArgs) -> Result<String, CliError> {
    let settings = resolve(&args.tuning, args.kind.map(Into::into))?;
    let features = load_features(&args.features)?;
    let model = fit_model(&features, &settings.fit)?;
    let ll = log_likelihood(&model, &features)?;
    if let Some(out) = &args.out {
        write_text(out, &model_to_text(&model))?;
    }

    let fitted: Vec<_> = model.dims.iter().filter(|d| !d.is_degenerate()).collect();
    let column = |f: fn(&trend_core::TgnParams) -> f64| spread(&fitted.iter().map(|d| f(&d.params)).collect::<Vec<_>>());
    let count = |s: FitStatus| model.dims.iter().filter(|d| d.status == s).count();
    let summary = FitSummary {
        kind: model.kind.to_string(),
        source: model.source_tag.clone(),
        n: features.n(),
        d: features.d(),
        mu: column(|p| p.mu),
        sigma: column(|p| p.sigma),
        beta: column(|p| p.beta),
        mean_log_likelihood: ll.average(),
        n_ok: count(FitStatus::Ok),
        n_degenerate: count(FitStatus::FallbackDegenerate),
        n_max_iters: count(FitStatus::MaxItersReached),
        model,
    };
    Ok(match args.tuning.format {
        Format::Text => summary.to_text(),
        Format::Records => records(&summary),
    })
}

enum Input {
    Model(FittedModel),
    Features(FeatureMatrix),
}

fn read_input(path: &Path) -> Result<Input, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    if bytes.starts_with(MODEL_HEADER.as_bytes()) {
        let text = String::from_utf8(bytes)
            .map_err(|e| CliError::Core(trend_core::Error::Parse { line: 0, detail: e.to_string() }))?;
        Ok(Input::Model(model_from_text(&text)?))
    } else {
        Ok(Input::Features(load_features(path)?))
    }
}

fn as_model(input: &Input, settings: &Settings) -> Result<FittedModel, CliError> {
    match input {
        Input::Model(m) => Ok(m.clone()),
        Input::Features(f) => Ok(fit_model(f, &settings.fit)?),
    }
}

#[derive(Debug, Serialize)]
pub struct ScoreOutput {
    pub trend: Option<ScoreReport>,
    pub fid: Option<f64>,
}

impl ScoreOutput {
    fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(r) = &self.trend {
            out.push_str(&r.to_text());
        }
        if let Some(f) = self.fid {
            writeln!(out, "fid {f:e}").unwrap();
        }
        out
    }
}

pub fn score(args: &ScoreArgs) -> Result<String, CliError> {
    let settings = resolve(&args.tuning, args.kind.map(Into::into))?;
    let test = read_input(&args.test)?;
    let reference = read_input(&args.reference)?;

    let trend = match args.metric {
        Metric::Trend | Metric::Both => {
            let t = as_model(&test, &settings)?;
            let r = as_model(&reference, &settings)?;
            Some(trend_score(&t, &r, &settings.quad)?)
        }
        Metric::Fid => None,
    };
    let fid = match args.metric {
        Metric::Fid | Metric::Both => match (&test, &reference) {
            (Input::Features(t), Input::Features(r)) => {
                Some(fid_with(&gaussian_stats(t)?, &gaussian_stats(r)?, &settings.fid)?)
            }
            _ => return Err(CliError::Usage("fid needs feature files for both inputs, not fitted models".into())),
        },
        Metric::Trend => None,
    };

    let output = ScoreOutput { trend, fid };
    let text = match args.tuning.format {
        Format::Text => output.to_text(),
        Format::Records => records(&output),
    };
    if let Some(path) = &args.report {
        write_text(path, &text)?;
    }
    Ok(text)
}

pub fn toy(args: &ToyArgs) -> Result<String, CliError> {
    let settings = resolve(&args.tuning, None)?;
    let scenario = ToyScenario::from_number(args.scenario)?;
    if let Some(dir) = &args.out_dir {
        create_dir(dir)?;
        let fixtures = toy_fixtures(scenario, args.n, settings.seed)?;
        let names = std::iter::once("ground-truth".to_string()).chain(scenario.models().into_iter().map(|m| m.name));
        for (matrix, name) in fixtures.iter().zip(names) {
            write_feature_file(matrix, dir.join(format!("{name}.tfea")))?;
        }
    }
    let report = run_toy(scenario, args.n, settings.seed, &settings.fit, &settings.quad)?;
    Ok(match args.tuning.format {
        Format::Text => report.to_text(),
        Format::Records => records(&report),
    })
}

pub fn robustness_cmd(args: &RobustnessArgs) -> Result<String, CliError> {
    let settings = resolve(&args.tuning, args.kind.map(Into::into))?;
    let fractions = parse_fractions(&args.fractions).map_err(CliError::Usage)?;
    let test = load_features(&args.test)?;
    let reference = load_features(&args.reference)?;
    let rows = robustness(
        &test,
        &reference,
        &fractions,
        settings.seed,
        &settings.fit,
        &settings.quad,
        &settings.fid,
    )?;
    Ok(match args.tuning.format {
        Format::Text => robustness_to_text(&rows),
        Format::Records => records(&rows),
    })
}

#[derive(Debug, Serialize)]
pub struct PccSummary {
    pub pairs: usize,
    pub n_undefined: usize,
    pub mean_abs_pcc: f64,
    pub std_abs_pcc: f64,
    pub mean_pcc: f64,
    pub std_pcc: f64,
}

#[derive(Debug, Serialize)]
pub struct AnalysisOutput {
    pub source: String,
    pub n: usize,
    pub d: usize,
    pub dimensions: Vec<DimensionStats>,
    pub pcc: Option<PccSummary>,
    pub histograms: Vec<Histogram>,
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    spread(&v).mean
}

pub fn analyze(args: &AnalyzeArgs) -> Result<String, CliError> {
    let settings = resolve(&args.tuning, None)?;
    let features = load_features(&args.features)?;
    let stats = dimension_stats(&features)?;

    let report = if features.d() >= 2 {
        let selection = if args.all_pairs {
            PairSelection::All
        } else {
            PairSelection::Sampled {
                pairs: args.pcc_pairs,
                seed: settings.seed,
            }
        };
        Some(pairwise_pcc(&features, selection)?)
    } else {
        None
    };
    let histograms = args
        .histogram
        .iter()
        .map(|&dim| histogram(&features, dim, args.bins))
        .collect::<Result<Vec<_>, _>>()?;

    if let Some(dir) = &args.export_dir {
        create_dir(dir)?;
        write_text(&dir.join("dimensions.tsv"), &stats_to_delimited(&stats, '\t'))?;
        if let Some(r) = &report {
            write_text(&dir.join("pcc.tsv"), &pcc_to_delimited(r, '\t'))?;
        }
        for h in &histograms {
            write_text(&dir.join(format!("histogram-{}.tsv", h.dim)), &histogram_to_delimited(h, '\t'))?;
        }
    }

    let output = AnalysisOutput {
        source: features.tag().to_string(),
        n: features.n(),
        d: features.d(),
        pcc: report.map(|r| PccSummary {
            pairs: r.pairs.len(),
            n_undefined: r.n_undefined,
            mean_abs_pcc: r.mean_abs_pcc,
            std_abs_pcc: r.std_abs_pcc,
            mean_pcc: r.mean_pcc,
            std_pcc: r.std_pcc,
        }),
        dimensions: stats,
        histograms,
    };
    Ok(match args.tuning.format {
        Format::Records => records(&output),
        Format::Text => {
            let mut out = String::new();
            writeln!(out, "source {}", output.source).unwrap();
            writeln!(out, "samples {} dimensions {}", output.n, output.d).unwrap();
            writeln!(
                out,
                "mean zero_fraction {:e}",
                mean_of(output.dimensions.iter().map(|s| s.zero_fraction))
            )
            .unwrap();
            writeln!(
                out,
                "mean kurtosis {:e}",
                mean_of(output.dimensions.iter().filter_map(|s| s.kurtosis))
            )
            .unwrap();
            if let Some(p) = &output.pcc {
                writeln!(
                    out,
                    "pcc pairs {} mean_abs {:e} std_abs {:e} mean {:e} std {:e}",
                    p.pairs, p.mean_abs_pcc, p.std_abs_pcc, p.mean_pcc, p.std_pcc
                )
                .unwrap();
            }
            out.push_str(&stats_to_delimited(&output.dimensions, '\t'));
            for h in &output.histograms {
                out.push_str(&histogram_to_delimited(h, '\t'));
            }
            out
        }
    })
}
