//! Command-line front end. `main` only parses arguments and maps errors to
//! exit codes; everything here is callable from tests.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::baselines::{hard_threshold, soft_threshold};
use crate::bench::{run_study, StudyConfig, PRESETS};
use crate::dwt::{DaubechiesFilter, WaveletPyramid};
use crate::elicitation::{ElicitationConfig, SigmaEstimator};
use crate::error::{Error, Result};
use crate::io::{self, columns_csv, fmt_f64, PadPolicy};
use crate::pipeline::{denoise_with_filter, DenoiseDiagnostics, Denoised, RuleSpec};
use crate::prior::{grid, rule_statistics, EsrRule, MixturePriorParams, NoiseModel};
use crate::signals::{add_noise, generate_test_function, TestFunctionKind, DEFAULT_TARGET_SD};

#[derive(Debug, Parser)]
#[command(
    name = "esrshrink",
    version,
    about = "Wavelet denoising with Epanechnikov spike-and-slab shrinkage"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Denoise a signal (one value per line, first CSV column).
    Denoise(DenoiseArgs),
    /// Write empirical and shrunk wavelet coefficients as CSV.
    Coeffs(CoeffsArgs),
    /// Tabulate the shrinkage rule against d.
    RuleCurve(RuleCurveArgs),
    /// Tabulate squared bias, variance and risk against theta.
    RuleStats(RuleStatsArgs),
    /// Sample a benchmark signal, optionally with Gaussian noise.
    Generate(GenerateArgs),
    /// Run a Monte Carlo comparison of rules.
    Study(StudyArgs),
}

#[derive(Debug, Args)]
pub struct ShrinkArgs {
    /// Shrinkage rule.
    #[arg(long, default_value = "esr", value_parser = ["esr", "hard", "soft"])]
    pub rule: String,
    /// Threshold for hard/soft: `universal` or a number.
    #[arg(long, default_value = "universal")]
    pub threshold: String,
    #[arg(long, default_value_t = 2.4)]
    pub gamma: f64,
    #[arg(long, default_value_t = 2.0)]
    pub l: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 2.0)]
    pub tau: f64,
    /// Coarsest detail level that is shrunk.
    #[arg(long, default_value_t = 0)]
    pub j0: usize,
    /// Noise-scale estimator on the finest level: `sd` or `mad`.
    #[arg(long, default_value = "mad")]
    pub sigma: SigmaEstimator,
    /// Daubechies vanishing moments, 1 to 10.
    #[arg(long, default_value_t = 10)]
    pub wavelet_order: usize,
    /// How to handle a length that is not a power of two.
    #[arg(long)]
    pub pad: Option<PadArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PadArg {
    Reflect,
    Truncate,
}

impl From<PadArg> for PadPolicy {
    fn from(p: PadArg) -> Self {
        match p {
            PadArg::Reflect => PadPolicy::Reflect,
            PadArg::Truncate => PadPolicy::Truncate,
        }
    }
}

impl ShrinkArgs {
    pub fn rule(&self) -> Result<RuleSpec> {
        RuleSpec::from_parts(&self.rule, &self.threshold)
    }

    pub fn elicitation(&self) -> ElicitationConfig {
        ElicitationConfig {
            gamma: self.gamma,
            l: self.l,
            c: self.c,
            tau: self.tau,
            sigma_estimator: self.sigma,
            coarse_level: self.j0,
        }
    }
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Input file, or `-` for stdin.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Output file; stdout when absent. A `<out>.report.json` sidecar is
    /// written next to it.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub shrink: ShrinkArgs,
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Directory receiving `empirical.csv` and `shrunk.csv`.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub shrink: ShrinkArgs,
}

#[derive(Debug, Args)]
pub struct RuleCurveArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub lambda: f64,
    /// Left end of the d grid (default `-2 beta`).
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<f64>,
    /// Right end of the d grid (default `2 beta`).
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<f64>,
    #[arg(long, default_value_t = 401)]
    pub points: usize,
    /// Add hard and soft threshold columns at this threshold.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NoiseArg {
    Laplace,
    Gaussian,
}

#[derive(Debug, Args)]
pub struct RuleStatsArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub lambda: f64,
    /// Sampling model for d given theta.
    #[arg(long, value_enum, default_value_t = NoiseArg::Laplace)]
    pub noise: NoiseArg,
    /// Gaussian noise SD (default `1 / sqrt(lambda)`).
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta_min: f64,
    /// Right end of the theta grid (default `beta`).
    #[arg(long)]
    pub theta_max: Option<f64>,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub function: TestFunctionKind,
    #[arg(long, short)]
    pub n: usize,
    /// Signal-to-noise ratio SD(f) / sigma; noiseless when absent.
    #[arg(long)]
    pub snr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TARGET_SD)]
    pub target_sd: f64,
    /// Also write the noiseless truth as a second column `f`.
    #[arg(long)]
    pub with_truth: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// `key = value` study description.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// One of paper-heavisine-desk, paper-desk, paper-full, smoke.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Override the number of replications.
    #[arg(long)]
    pub replications: Option<usize>,
    /// Override the seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Denoise(a) => cmd_denoise(&a),
        Command::Coeffs(a) => cmd_coeffs(&a),
        Command::RuleCurve(a) => cmd_rule_curve(&a),
        Command::RuleStats(a) => cmd_rule_stats(&a),
        Command::Generate(a) => cmd_generate(&a),
        Command::Study(a) => cmd_study(&a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => io::write_text(p, text),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map_err(|e| Error::Numeric(format!("cannot encode report: {e}")))
}

#[derive(Debug, Serialize)]
pub struct DenoiseReport {
    pub input_length: usize,
    pub padded_length: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pad: Option<&'static str>,
    #[serde(flatten)]
    pub diagnostics: DenoiseDiagnostics,
}

/// Read, pad, and denoise. Returns the result on the padded grid plus the
/// original length.
fn load_and_denoise(input: &Path, shrink: &ShrinkArgs) -> Result<(Denoised, DenoiseReport)> {
    let y = io::read_signal(input)?;
    let rule = shrink.rule()?;
    let elicitation = shrink.elicitation();
    elicitation.validate()?;
    let filter = DaubechiesFilter::new(shrink.wavelet_order)?;
    let padded = match shrink.pad {
        Some(p) => io::pad(&y, p.into())?,
        None => y.clone(),
    };
    let out = denoise_with_filter(&padded, rule, &elicitation, &filter)?;
    let report = DenoiseReport {
        input_length: y.len(),
        padded_length: padded.len(),
        pad: shrink
            .pad
            .filter(|_| padded.len() != y.len())
            .map(|p| match p {
                PadArg::Reflect => "reflect",
                PadArg::Truncate => "truncate",
            }),
        diagnostics: out.diagnostics.clone(),
    };
    Ok((out, report))
}

fn summarise(d: &DenoiseDiagnostics) -> String {
    let mut s = format!(
        "rule = {}, n = {}, sigma_hat = {:.6}",
        d.rule, d.n, d.sigma_hat
    );
    if let Some(l) = d.lambda {
        s.push_str(&format!(", lambda = {l:.6}"));
    }
    for lv in &d.levels {
        match (lv.alpha, lv.beta, lv.eta) {
            (Some(a), Some(b), _) => s.push_str(&format!(
                "\n  level {}: alpha = {a:.4}, beta({}) = {b:.6}",
                lv.level, lv.level
            )),
            (_, _, Some(e)) => s.push_str(&format!("\n  level {}: eta = {e:.6}", lv.level)),
            _ => {}
        }
    }
    s
}

pub fn cmd_denoise(a: &DenoiseArgs) -> Result<()> {
    let (out, report) = load_and_denoise(&a.input, &a.shrink)?;
    let keep = report.input_length.min(out.estimate.len());
    let text: String = out.estimate[..keep]
        .iter()
        .map(|v| fmt_f64(*v) + "\n")
        .collect();
    emit(a.out.as_deref(), &text)?;
    if let Some(path) = &a.out {
        io::write_text(&io::sidecar_path(path), &to_json(&report)?)?;
    }
    eprintln!("{}", summarise(&report.diagnostics));
    Ok(())
}

fn pyramid_csv(p: &WaveletPyramid) -> String {
    let mut out = String::from("level,position,magnitude,block\n");
    for (k, v) in p.scaling().iter().enumerate() {
        out.push_str(&format!(
            "{},{k},{},scaling\n",
            p.coarse_level(),
            fmt_f64(*v)
        ));
    }
    for (j, block) in p.levels() {
        for (k, v) in block.iter().enumerate() {
            out.push_str(&format!("{j},{k},{},detail\n", fmt_f64(*v)));
        }
    }
    out
}

pub fn cmd_coeffs(a: &CoeffsArgs) -> Result<()> {
    let (out, report) = load_and_denoise(&a.input, &a.shrink)?;
    io::create_dir(&a.out_dir)?;
    io::write_text(
        &a.out_dir.join("empirical.csv"),
        &pyramid_csv(&out.empirical),
    )?;
    io::write_text(&a.out_dir.join("shrunk.csv"), &pyramid_csv(&out.shrunk))?;
    io::write_text(&a.out_dir.join("report.json"), &to_json(&report)?)?;
    eprintln!("{}", summarise(&report.diagnostics));
    Ok(())
}

fn check_grid(lo: f64, hi: f64, points: usize) -> Result<()> {
    if points == 0 {
        return Err(Error::config("points must be at least 1"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::config(format!(
            "grid [{lo}, {hi}] is not a finite interval"
        )));
    }
    Ok(())
}

pub fn cmd_rule_curve(a: &RuleCurveArgs) -> Result<()> {
    let params = MixturePriorParams::new(a.alpha, a.beta, a.lambda)?;
    let (lo, hi) = (
        a.from.unwrap_or(-2.0 * a.beta),
        a.to.unwrap_or(2.0 * a.beta),
    );
    check_grid(lo, hi, a.points)?;
    if let Some(eta) = a.eta {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::Domain(format!(
                "threshold {eta} must be non-negative"
            )));
        }
    }
    let rule = EsrRule::new(params);
    let d: Vec<f64> = grid(lo, hi, a.points).collect();
    let esr: Vec<f64> = d.iter().map(|x| rule.shrink(*x)).collect();
    let text = match a.eta {
        Some(eta) => {
            let hard: Vec<f64> = d.iter().map(|x| hard_threshold(*x, eta)).collect();
            let soft: Vec<f64> = d.iter().map(|x| soft_threshold(*x, eta)).collect();
            columns_csv(&["d", "esr", "hard", "soft"], &[&d, &esr, &hard, &soft])
        }
        None => columns_csv(&["d", "esr"], &[&d, &esr]),
    };
    emit(a.out.as_deref(), &text)
}

pub fn cmd_rule_stats(a: &RuleStatsArgs) -> Result<()> {
    let params = MixturePriorParams::new(a.alpha, a.beta, a.lambda)?;
    let hi = a.theta_max.unwrap_or(a.beta);
    check_grid(a.theta_min, hi, a.points)?;
    let noise = match a.noise {
        NoiseArg::Laplace => NoiseModel::marginalised(&params),
        NoiseArg::Gaussian => NoiseModel::Gaussian {
            sigma: a.noise_sd.unwrap_or(1.0 / a.lambda.sqrt()),
        },
    };
    let stats = grid(a.theta_min, hi, a.points)
        .map(|t| rule_statistics(t, &params, noise))
        .collect::<Result<Vec<_>>>()?;
    let col =
        |f: fn(&crate::prior::RuleStatistics) -> f64| stats.iter().map(f).collect::<Vec<f64>>();
    let (theta, bias_sq, variance, risk) = (
        col(|s| s.theta),
        col(|s| s.bias_sq),
        col(|s| s.variance),
        col(|s| s.risk),
    );
    let text = columns_csv(
        &["theta", "bias_sq", "variance", "risk"],
        &[&theta, &bias_sq, &variance, &risk],
    );
    emit(a.out.as_deref(), &text)
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let truth = generate_test_function(a.function, a.n, a.target_sd)?;
    let y = match a.snr {
        Some(snr) => add_noise(&truth, snr, a.seed)?,
        None => truth.clone(),
    };
    let text = if a.with_truth {
        columns_csv(&["y", "f"], &[y.samples(), truth.samples()])
    } else {
        columns_csv(&["y"], &[y.samples()])
    };
    emit(a.out.as_deref(), &text)
}

pub fn cmd_study(a: &StudyArgs) -> Result<()> {
    let mut cfg = match (&a.config, &a.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            StudyConfig::parse(&text)?
        }
        (None, Some(name)) => StudyConfig::preset(name)?,
        (None, None) => {
            return Err(Error::config(format!(
                "give --config or --preset ({})",
                PRESETS.join(", ")
            )))
        }
    };
    if let Some(r) = a.replications {
        cfg.replications = r;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let report = run_study(&cfg)?;
    io::create_dir(&a.out_dir)?;
    io::write_text(&a.out_dir.join("study.csv"), &report.to_csv())?;
    io::write_text(&a.out_dir.join("study.json"), &report.to_json()?)?;
    io::write_text(&a.out_dir.join("config.txt"), &cfg.to_config_text())?;
    let mut table = String::from("function   n     snr   rule              amse        sd\n");
    for c in &report.cells {
        table.push_str(&format!(
            "{:<10} {:<5} {:<5} {:<17} {:<11.4} {:.4}\n",
            c.function.name(),
            c.n,
            c.snr,
            c.rule.name(),
            c.amse,
            c.mse_sd
        ));
    }
    emit(None, &table)
}
