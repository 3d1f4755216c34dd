//! Transform, shrink, reconstruct.

use serde::Serialize;

use crate::baselines::{ThresholdKind, ThresholdPolicy, ThresholdSpec};
use crate::dwt::{dwt_forward, dwt_inverse, DaubechiesFilter, WaveletPyramid};
use crate::elicitation::{
    alpha_level, beta_level, estimate_sigma, lambda_from_s, sample_sd, ElicitationConfig,
};
use crate::error::{Error, Result};
use crate::prior::{EsrRule, MixturePriorParams};

/// Which shrinkage rule the pipeline applies to the detail coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleSpec {
    Esr,
    Threshold(ThresholdSpec),
}

impl RuleSpec {
    pub fn soft_universal() -> Self {
        RuleSpec::Threshold(ThresholdSpec {
            kind: ThresholdKind::Soft,
            policy: ThresholdPolicy::Universal,
        })
    }

    pub fn hard_universal() -> Self {
        RuleSpec::Threshold(ThresholdSpec {
            kind: ThresholdKind::Hard,
            policy: ThresholdPolicy::Universal,
        })
    }

    /// Short name: `esr`, `soft-universal`, `hard-2.5`, ...
    pub fn name(&self) -> String {
        match self {
            RuleSpec::Esr => "esr".to_string(),
            RuleSpec::Threshold(t) => {
                let kind = match t.kind {
                    ThresholdKind::Hard => "hard",
                    ThresholdKind::Soft => "soft",
                };
                match t.policy {
                    ThresholdPolicy::Universal => format!("{kind}-universal"),
                    ThresholdPolicy::Fixed(eta) => format!("{kind}-{eta}"),
                }
            }
        }
    }

    /// Build from a rule name and a threshold policy string
    /// (`universal` or a non-negative number); the threshold is ignored for
    /// `esr`.
    pub fn from_parts(rule: &str, threshold: &str) -> Result<Self> {
        match rule.trim().to_ascii_lowercase().as_str() {
            "esr" => Ok(RuleSpec::Esr),
            kind @ ("hard" | "soft") => {
                let kind = if kind == "hard" {
                    ThresholdKind::Hard
                } else {
                    ThresholdKind::Soft
                };
                let policy = match threshold.trim() {
                    "universal" => ThresholdPolicy::Universal,
                    v => ThresholdPolicy::Fixed(v.parse().map_err(|_| {
                        Error::config(format!(
                            "threshold `{v}` is neither `universal` nor a number"
                        ))
                    })?),
                };
                Ok(RuleSpec::Threshold(ThresholdSpec::new(kind, policy)?))
            }
            other => Err(Error::config(format!(
                "unknown rule `{other}` (esr|hard|soft)"
            ))),
        }
    }
}

impl std::str::FromStr for RuleSpec {
    type Err = Error;

    /// Parses the forms produced by [`RuleSpec::name`].
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once('-') {
            Some((rule, threshold)) => RuleSpec::from_parts(rule, threshold),
            None if s.eq_ignore_ascii_case("esr") => Ok(RuleSpec::Esr),
            None => RuleSpec::from_parts(s, "universal"),
        }
    }
}

impl std::fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

impl Serialize for RuleSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

/// Hyperparameters actually used on one detail level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub beta_floored: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenoiseDiagnostics {
    pub rule: RuleSpec,
    pub n: usize,
    pub wavelet_order: usize,
    pub coarse_level: usize,
    pub sigma_hat: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// `sqrt(max(var(y) - sigma_hat^2, 0)) / sigma_hat`.
    pub snr_estimate: f64,
    pub levels: Vec<LevelReport>,
}

#[derive(Debug, Clone)]
pub struct Denoised {
    pub estimate: Vec<f64>,
    pub empirical: WaveletPyramid,
    pub shrunk: WaveletPyramid,
    pub diagnostics: DenoiseDiagnostics,
}

/// Denoise a dyadic-length signal: forward DWT, per-level elicitation, rule
/// applied to every detail level `j >= J0`, inverse DWT. The scaling block is
/// never modified.
pub fn denoise(
    y: &[f64],
    rule: RuleSpec,
    elicitation: &ElicitationConfig,
    wavelet_order: usize,
) -> Result<Denoised> {
    elicitation.validate()?;
    let filter = DaubechiesFilter::new(wavelet_order)?;
    denoise_with_filter(y, rule, elicitation, &filter)
}

pub fn denoise_with_filter(
    y: &[f64],
    rule: RuleSpec,
    elicitation: &ElicitationConfig,
    filter: &DaubechiesFilter,
) -> Result<Denoised> {
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::Input(format!(
            "signal contains a non-finite sample ({bad})"
        )));
    }
    let empirical = dwt_forward(y, filter, elicitation.coarse_level)?;
    let sigma_hat = estimate_sigma(empirical.finest(), elicitation.sigma_estimator)?;
    let noiseless = sigma_hat.is_nan() || sigma_hat <= 0.0;
    if noiseless {
        log::warn!("estimated noise scale is zero; detail coefficients pass through unchanged");
    }

    let mut shrunk = empirical.clone();
    let mut levels = Vec::with_capacity(empirical.depth() - empirical.coarse_level());
    let mut lambda = None;

    match rule {
        RuleSpec::Esr => {
            let lam = if noiseless {
                None
            } else {
                Some(lambda_from_s(sigma_hat, elicitation.c, elicitation.tau)?)
            };
            lambda = lam;
            for (j, block) in shrunk.levels_mut() {
                let alpha = alpha_level(
                    j,
                    elicitation.coarse_level,
                    elicitation.gamma,
                    elicitation.l,
                )?;
                let beta = beta_level(block)?;
                if let Some(lam) = lam {
                    let esr = EsrRule::new(MixturePriorParams::new(alpha, beta.value, lam)?);
                    block.iter_mut().for_each(|d| *d = esr.shrink(*d));
                }
                levels.push(LevelReport {
                    level: j,
                    size: block.len(),
                    alpha: Some(alpha),
                    beta: Some(beta.value),
                    beta_floored: beta.floored,
                    eta: None,
                });
            }
        }
        RuleSpec::Threshold(spec) => {
            let eta = if noiseless && spec.policy == ThresholdPolicy::Universal {
                0.0
            } else {
                spec.eta(sigma_hat, y.len())?
            };
            for (j, block) in shrunk.levels_mut() {
                block.iter_mut().for_each(|d| *d = spec.apply(*d, eta));
                levels.push(LevelReport {
                    level: j,
                    size: block.len(),
                    alpha: None,
                    beta: None,
                    beta_floored: false,
                    eta: Some(eta),
                });
            }
        }
    }

    let estimate = dwt_inverse(&shrunk, filter)?;
    let var_y = sample_sd(y).powi(2);
    let snr_estimate = if noiseless {
        f64::INFINITY
    } else {
        (var_y - sigma_hat * sigma_hat).max(0.0).sqrt() / sigma_hat
    };
    Ok(Denoised {
        estimate,
        diagnostics: DenoiseDiagnostics {
            rule,
            n: y.len(),
            wavelet_order: filter.vanishing_moments(),
            coarse_level: elicitation.coarse_level,
            sigma_hat,
            lambda,
            snr_estimate,
            levels,
        },
        empirical,
        shrunk,
    })
}

/// Mean squared error between an estimate and the truth.
pub fn mse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::Input(format!(
            "estimate has {} samples but truth has {}",
            estimate.len(),
            truth.len()
        )));
    }
    if estimate.is_empty() {
        return Err(Error::Input("cannot score an empty signal".into()));
    }
    Ok(estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / estimate.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{add_noise, generate_test_function, TestFunctionKind};

    #[test]
    fn rule_names_round_trip() {
        for name in [
            "esr",
            "soft-universal",
            "hard-universal",
            "hard-3.5",
            "soft-0",
        ] {
            let r: RuleSpec = name.parse().unwrap();
            assert_eq!(r.name(), name);
        }
        assert_eq!(
            "soft".parse::<RuleSpec>().unwrap(),
            RuleSpec::soft_universal()
        );
        assert!("median".parse::<RuleSpec>().is_err());
        assert!(RuleSpec::from_parts("soft", "-2").is_err());
        assert!(RuleSpec::from_parts("soft", "abc").is_err());
    }

    #[test]
    fn mse_examples() {
        let truth = generate_test_function(TestFunctionKind::Heavisine, 1024, 7.0).unwrap();
        let t = truth.samples();
        assert_eq!(mse(t, t).unwrap(), 0.0);
        let shifted: Vec<f64> = t.iter().map(|v| v + 1.0).collect();
        assert!((mse(&shifted, t).unwrap() - 1.0).abs() < 1e-12);
        let zero = vec![0.0; t.len()];
        let m = mse(&zero, t).unwrap();
        let mean = t.iter().sum::<f64>() / t.len() as f64;
        // mean(f^2) = SD_pop^2 + mean^2
        let expected = 49.0 * 1023.0 / 1024.0 + mean * mean;
        assert!((m - expected).abs() < 1e-9);
        assert!(mse(&zero[..10], t).is_err());
    }

    #[test]
    fn constant_signal_is_identity() {
        let y = vec![2.5; 1024];
        for rule in [RuleSpec::Esr, RuleSpec::soft_universal()] {
            let out = denoise(&y, rule, &ElicitationConfig::default(), 10).unwrap();
            let err = out
                .estimate
                .iter()
                .map(|v| (v - 2.5).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "{rule}: {err}");
        }
    }

    #[test]
    fn zero_signal_is_zero() {
        let out = denoise(&[0.0; 64], RuleSpec::Esr, &ElicitationConfig::default(), 4).unwrap();
        assert!(out.estimate.iter().all(|v| *v == 0.0));
        assert!(out.diagnostics.levels.iter().all(|l| l.beta_floored));
    }

    #[test]
    fn scaling_block_untouched() {
        let f = generate_test_function(TestFunctionKind::Bumps, 256, 7.0).unwrap();
        let y = add_noise(&f, 1.0, 9).unwrap();
        let cfg = ElicitationConfig {
            coarse_level: 3,
            ..Default::default()
        };
        let out = denoise(y.samples(), RuleSpec::Esr, &cfg, 6).unwrap();
        assert_eq!(out.empirical.scaling(), out.shrunk.scaling());
        assert_eq!(out.diagnostics.levels.len(), 5);
        assert!(out.diagnostics.lambda.unwrap() > 0.0);
    }

    #[test]
    fn non_finite_input_rejected() {
        let mut y = vec![0.0; 16];
        y[3] = f64::NAN;
        assert!(matches!(
            denoise(&y, RuleSpec::Esr, &ElicitationConfig::default(), 2),
            Err(Error::Input(_))
        ));
    }
}
