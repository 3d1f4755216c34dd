//! Monte Carlo comparison of shrinkage rules on the benchmark signals.
//!
//! Every replication of a cell draws its noise from its own ChaCha20 stream,
//! derived from `(function, n, snr, replication)`, so all rules in a cell see
//! identical noisy data and results do not depend on thread scheduling.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::dwt::{dyadic_depth, DaubechiesFilter, MAX_ORDER};
use crate::elicitation::ElicitationConfig;
use crate::error::{Error, Result};
use crate::pipeline::{denoise_with_filter, mse, RuleSpec};
use crate::signals::{
    add_noise_with, generate_test_function, noise_rng, TestFunctionKind, DEFAULT_TARGET_SD,
};

pub const PRESETS: [&str; 4] = ["paper-heavisine-desk", "paper-desk", "paper-full", "smoke"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyConfig {
    pub functions: Vec<TestFunctionKind>,
    pub sizes: Vec<usize>,
    pub snrs: Vec<f64>,
    pub replications: usize,
    pub rules: Vec<RuleSpec>,
    pub elicitation: ElicitationConfig,
    pub wavelet_order: usize,
    pub seed: u64,
    pub target_sd: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            functions: TestFunctionKind::ALL.to_vec(),
            sizes: vec![512, 1024, 2048],
            snrs: vec![0.2, 1.0, 3.0],
            replications: 100,
            rules: vec![RuleSpec::Esr, RuleSpec::soft_universal()],
            elicitation: ElicitationConfig::simulation_preset(),
            wavelet_order: MAX_ORDER,
            seed: 20_240_101,
            target_sd: DEFAULT_TARGET_SD,
        }
    }
}

impl StudyConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let base = StudyConfig::default();
        match name {
            "paper-desk" => Ok(base),
            "paper-full" => Ok(StudyConfig {
                replications: 300,
                ..base
            }),
            "paper-heavisine-desk" => Ok(StudyConfig {
                functions: vec![TestFunctionKind::Heavisine],
                snrs: vec![1.0, 3.0],
                ..base
            }),
            "smoke" => Ok(StudyConfig {
                functions: vec![TestFunctionKind::Heavisine],
                sizes: vec![512],
                snrs: vec![1.0],
                replications: 1,
                ..base
            }),
            other => Err(Error::config(format!(
                "unknown preset `{other}` (one of {})",
                PRESETS.join(", ")
            ))),
        }
    }

    /// Parse `key = value` lines on top of the default study. Lists are
    /// comma-separated; `#` starts a comment. Unknown or repeated keys are
    /// errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = StudyConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |key: Option<&str>, message: String| Error::Config {
                line: Some(line_no),
                key: key.map(str::to_string),
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(None, format!("expected `key = value`, found `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(at(Some(key), "key given twice".into()));
            }
            seen.push(key.to_string());
            cfg.set(key, value).map_err(|e| match e {
                Error::Config { message, .. } => at(Some(key), message),
                other => at(Some(key), other.to_string()),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let e = &mut self.elicitation;
        match key {
            "functions" => self.functions = parse_list(value)?,
            "sizes" => self.sizes = parse_list(value)?,
            "snrs" => self.snrs = parse_list(value)?,
            "rules" => self.rules = parse_list(value)?,
            "replications" => self.replications = parse_one(value)?,
            "gamma" => e.gamma = parse_one(value)?,
            "l" => e.l = parse_one(value)?,
            "c" => e.c = parse_one(value)?,
            "tau" => e.tau = parse_one(value)?,
            "j0" => e.coarse_level = parse_one(value)?,
            "sigma" => e.sigma_estimator = value.parse()?,
            "wavelet_order" => self.wavelet_order = parse_one(value)?,
            "seed" => self.seed = parse_one(value)?,
            "target_sd" => self.target_sd = parse_one(value)?,
            _ => return Err(Error::config("unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.functions.is_empty()
            || self.sizes.is_empty()
            || self.snrs.is_empty()
            || self.rules.is_empty()
        {
            return Err(Error::config(
                "functions, sizes, snrs and rules must all be non-empty",
            ));
        }
        if self.replications == 0 {
            return Err(Error::config("replications must be at least 1"));
        }
        for &n in &self.sizes {
            let depth = dyadic_depth(n).map_err(|e| Error::config(e.to_string()))?;
            if depth <= self.elicitation.coarse_level {
                return Err(Error::config(format!(
                    "n = {n} has no detail levels above j0 = {}",
                    self.elicitation.coarse_level
                )));
            }
            if n < 4 {
                return Err(Error::config(format!(
                    "n = {n} is too short to estimate sigma"
                )));
            }
        }
        if let Some(s) = self.snrs.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::config(format!("SNR {s} must be positive")));
        }
        if !(self.target_sd.is_finite() && self.target_sd > 0.0) {
            return Err(Error::config(format!(
                "target_sd {} must be positive",
                self.target_sd
            )));
        }
        DaubechiesFilter::new(self.wavelet_order)?;
        self.elicitation.validate()
    }

    /// The configuration in the same `key = value` form [`StudyConfig::parse`] reads.
    pub fn to_config_text(&self) -> String {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
        }
        let e = &self.elicitation;
        format!(
            "functions = {}\nsizes = {}\nsnrs = {}\nreplications = {}\nrules = {}\n\
             gamma = {}\nl = {}\nc = {}\ntau = {}\nj0 = {}\nsigma = {}\n\
             wavelet_order = {}\nseed = {}\ntarget_sd = {}\n",
            join(&self.functions),
            join(&self.sizes),
            join(&self.snrs),
            self.replications,
            join(&self.rules),
            e.gamma,
            e.l,
            e.c,
            e.tau,
            e.coarse_level,
            e.sigma_estimator,
            self.wavelet_order,
            self.seed,
            self.target_sd
        )
    }
}

fn parse_one<T: std::str::FromStr>(value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(format!("cannot parse `{}`", value.trim())))
}

fn parse_list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>> {
    let items: Vec<&str> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(Error::config("empty list"));
    }
    items.into_iter().map(parse_one).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    pub function: TestFunctionKind,
    pub n: usize,
    pub snr: f64,
    pub rule: RuleSpec,
    pub replications: usize,
    pub amse: f64,
    /// Sample SD of the per-replication MSEs; 0 when there is one replication.
    pub mse_sd: f64,
    pub sd_degenerate: bool,
    pub mse_samples: Vec<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub cells: Vec<CellRecord>,
}

impl StudyReport {
    pub fn cell(
        &self,
        function: TestFunctionKind,
        n: usize,
        snr: f64,
        rule: RuleSpec,
    ) -> Option<&CellRecord> {
        self.cells
            .iter()
            .find(|c| c.function == function && c.n == n && c.snr == snr && c.rule == rule)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "function,n,snr,rule,replications,amse,mse_sd,sd_degenerate,wall_time_s\n",
        );
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.10e},{:.10e},{},{:.6}",
                c.function,
                c.n,
                c.snr,
                c.rule,
                c.replications,
                c.amse,
                c.mse_sd,
                c.sd_degenerate,
                c.wall_time_s
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Numeric(format!("cannot encode report: {e}")))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Keystream id for one replication of one data cell.
pub fn stream_id(function: TestFunctionKind, n: usize, snr: f64, replication: usize) -> u64 {
    let tag = TestFunctionKind::ALL
        .iter()
        .position(|k| *k == function)
        .unwrap_or(0) as u64;
    [tag, n as u64, snr.to_bits(), replication as u64]
        .into_iter()
        .fold(0u64, |h, v| splitmix64(h ^ v))
}

/// Run every `(function, n, snr, rule)` cell of the study.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let filter = DaubechiesFilter::new(config.wavelet_order)?;
    let mut cells = Vec::new();
    for &function in &config.functions {
        for &n in &config.sizes {
            let truth = generate_test_function(function, n, config.target_sd)?;
            let f = truth.samples();
            for &snr in &config.snrs {
                let sigma = config.target_sd / snr;
                log::info!(
                    "cell {function} n={n} snr={snr}: {} replications",
                    config.replications
                );
                let coords = |rule: Option<RuleSpec>, rep: usize| {
                    let rule = rule.map(|r| format!(" rule={r}")).unwrap_or_default();
                    format!("cell function={function} n={n} snr={snr}{rule} replication={rep}")
                };
                // per replication: (mse, seconds) for each rule
                let runs: Vec<Vec<(f64, f64)>> = (0..config.replications)
                    .into_par_iter()
                    .map(|rep| {
                        let mut rng = noise_rng(config.seed, stream_id(function, n, snr, rep));
                        let y = add_noise_with(f, sigma, &mut rng).map_err(|e| Error::Cell {
                            cell: coords(None, rep),
                            source: Box::new(e),
                        })?;
                        config
                            .rules
                            .iter()
                            .map(|&rule| {
                                let start = Instant::now();
                                let out = denoise_with_filter(
                                    y.samples(),
                                    rule,
                                    &config.elicitation,
                                    &filter,
                                )
                                .and_then(|d| mse(&d.estimate, f))
                                .map_err(|e| Error::Cell {
                                    cell: coords(Some(rule), rep),
                                    source: Box::new(e),
                                })?;
                                Ok((out, start.elapsed().as_secs_f64()))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                for (r, &rule) in config.rules.iter().enumerate() {
                    let samples: Vec<f64> = runs.iter().map(|run| run[r].0).collect();
                    let wall: f64 = runs.iter().map(|run| run[r].1).sum();
                    let reps = samples.len();
                    let amse = samples.iter().sum::<f64>() / reps as f64;
                    let mse_sd = if reps > 1 {
                        (samples.iter().map(|m| (m - amse).powi(2)).sum::<f64>()
                            / (reps - 1) as f64)
                            .sqrt()
                    } else {
                        0.0
                    };
                    cells.push(CellRecord {
                        function,
                        n,
                        snr,
                        rule,
                        replications: reps,
                        amse,
                        mse_sd,
                        sd_degenerate: reps < 2,
                        mse_samples: samples,
                        wall_time_s: wall,
                    });
                }
            }
        }
    }
    Ok(StudyReport {
        config: config.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> StudyConfig {
        StudyConfig {
            functions: vec![TestFunctionKind::Doppler],
            sizes: vec![128],
            snrs: vec![3.0],
            replications: 4,
            ..Default::default()
        }
    }

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            StudyConfig::preset(name).unwrap().validate().unwrap();
        }
        assert_eq!(StudyConfig::preset("paper-full").unwrap().replications, 300);
        assert!(StudyConfig::preset("nope").is_err());
    }

    #[test]
    fn config_text_round_trips() {
        let cfg = StudyConfig::preset("paper-heavisine-desk").unwrap();
        assert_eq!(StudyConfig::parse(&cfg.to_config_text()).unwrap(), cfg);
    }

    #[test]
    fn config_errors_carry_location() {
        let err = StudyConfig::parse("sizes = 512\n# note\nsnr = 1\n").unwrap_err();
        match err {
            Error::Config { line, key, .. } => {
                assert_eq!(line, Some(3));
                assert_eq!(key.as_deref(), Some("snr"));
            }
            other => panic!("{other}"),
        }
        assert!(StudyConfig::parse("sizes = 500").is_err());
        assert!(StudyConfig::parse("rules = esr\nrules = esr").is_err());
        assert!(StudyConfig::parse("rules =").is_err());
        assert!(StudyConfig::parse("replications = 0").is_err());
        assert!(StudyConfig::parse("just words").is_err());
    }

    #[test]
    fn study_is_deterministic_and_paired() {
        let cfg = tiny();
        let a = run_study(&cfg).unwrap();
        let b = run_study(&cfg).unwrap();
        assert_eq!(a.cells.len(), 2);
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert_eq!(x.mse_samples, y.mse_samples);
        }
        let other = run_study(&StudyConfig {
            seed: cfg.seed + 1,
            ..cfg
        })
        .unwrap();
        assert_ne!(a.cells[0].mse_samples, other.cells[0].mse_samples);
    }

    #[test]
    fn single_replication_flags_sd() {
        let report = run_study(&StudyConfig {
            replications: 1,
            ..tiny()
        })
        .unwrap();
        assert!(report
            .cells
            .iter()
            .all(|c| c.sd_degenerate && c.mse_sd == 0.0));
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(report.to_json().unwrap().contains("\"rule\": \"esr\""));
    }

    #[test]
    fn stream_ids_distinct() {
        let a = stream_id(TestFunctionKind::Bumps, 512, 1.0, 0);
        assert_ne!(a, stream_id(TestFunctionKind::Bumps, 512, 1.0, 1));
        assert_ne!(a, stream_id(TestFunctionKind::Blocks, 512, 1.0, 0));
        assert_ne!(a, stream_id(TestFunctionKind::Bumps, 1024, 1.0, 0));
        assert_ne!(a, stream_id(TestFunctionKind::Bumps, 512, 3.0, 0));
    }
}
