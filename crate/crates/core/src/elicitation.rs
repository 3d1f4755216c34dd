//! Level-dependent hyperparameters: `alpha(j)`, `beta(j)`, the global
//! `lambda(s)`, and the two noise-scale estimators.

use serde::Serialize;

use crate::error::{Error, Result};

/// Floor used for `beta` when a whole level is zero.
pub const BETA_FLOOR: f64 = 1e-8;

/// Scale factor of the median-absolute-deviation noise estimator.
pub const MAD_SCALE: f64 = 0.6745;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaEstimator {
    /// Sample standard deviation of the finest level (n - 1 denominator).
    SampleSd,
    /// `median(|d|) / 0.6745` over the finest level.
    Mad,
}

impl std::str::FromStr for SigmaEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sd" | "samplesd" | "sample-sd" => Ok(SigmaEstimator::SampleSd),
            "mad" => Ok(SigmaEstimator::Mad),
            other => Err(Error::config(format!(
                "unknown sigma estimator `{other}` (sd|mad)"
            ))),
        }
    }
}

impl std::fmt::Display for SigmaEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SigmaEstimator::SampleSd => "sd",
            SigmaEstimator::Mad => "mad",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElicitationConfig {
    pub gamma: f64,
    pub l: f64,
    pub c: f64,
    pub tau: f64,
    pub sigma_estimator: SigmaEstimator,
    pub coarse_level: usize,
}

impl Default for ElicitationConfig {
    fn default() -> Self {
        ElicitationConfig {
            gamma: 2.4,
            l: 2.0,
            c: 1.0,
            tau: 2.0,
            sigma_estimator: SigmaEstimator::Mad,
            coarse_level: 0,
        }
    }
}

impl ElicitationConfig {
    /// Settings of the published simulation study: `gamma = 2`, `l = 1`,
    /// `J0 = 0`, sample-SD noise scale.
    pub fn simulation_preset() -> Self {
        ElicitationConfig {
            gamma: 2.0,
            l: 1.0,
            sigma_estimator: SigmaEstimator::SampleSd,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma", self.gamma),
            ("l", self.l),
            ("c", self.c),
            ("tau", self.tau),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// Spike weight `alpha(j) = 1 - (j - J0 + l)^(-gamma)`, increasing in `j`.
///
/// Requires `j >= J0` and `j - J0 + l >= 1`. The boundary case `= 1` gives
/// `alpha = 0` (pure slab).
pub fn alpha_level(j: usize, coarse_level: usize, gamma: f64, l: f64) -> Result<f64> {
    if j < coarse_level {
        return Err(Error::Domain(format!(
            "level {j} lies below the coarse level {coarse_level}"
        )));
    }
    if !(gamma.is_finite() && gamma > 0.0 && l.is_finite() && l > 0.0) {
        return Err(Error::Domain(format!(
            "gamma = {gamma} and l = {l} must be positive"
        )));
    }
    let base = (j - coarse_level) as f64 + l;
    if base < 1.0 {
        return Err(Error::Domain(format!(
            "j - J0 + l = {base} is below 1, which would make alpha negative"
        )));
    }
    Ok(1.0 - base.powf(-gamma))
}

/// Result of the per-level `beta` rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaEstimate {
    pub value: f64,
    /// The block was all zeros and `value` is [`BETA_FLOOR`].
    pub floored: bool,
}

/// `beta(j) = max_k |d_{j,k}|`.
pub fn beta_level(details: &[f64]) -> Result<BetaEstimate> {
    if details.is_empty() {
        return Err(Error::Input(
            "cannot elicit beta from an empty level".into(),
        ));
    }
    let max = details.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if !max.is_finite() {
        return Err(Error::Input(
            "level contains non-finite coefficients".into(),
        ));
    }
    if max > 0.0 {
        Ok(BetaEstimate {
            value: max,
            floored: false,
        })
    } else {
        log::warn!("all-zero detail level; beta floored at {BETA_FLOOR:e}");
        Ok(BetaEstimate {
            value: BETA_FLOOR,
            floored: true,
        })
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Noise scale from the finest detail level.
pub fn estimate_sigma(finest: &[f64], method: SigmaEstimator) -> Result<f64> {
    if finest.len() < 2 {
        return Err(Error::Input(format!(
            "need at least 2 finest-level coefficients to estimate sigma, got {}",
            finest.len()
        )));
    }
    Ok(match method {
        SigmaEstimator::SampleSd => sample_sd(finest),
        SigmaEstimator::Mad => {
            let mut abs: Vec<f64> = finest.iter().map(|d| d.abs()).collect();
            median(&mut abs) / MAD_SCALE
        }
    })
}

/// Standard deviation with the `n - 1` denominator.
pub fn sample_sd(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// `lambda(s) = 1/s^2 + (c/tau) exp(-s/tau)`.
pub fn lambda_from_s(s: f64, c: f64, tau: f64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::Domain(format!(
            "noise scale s = {s} must be positive"
        )));
    }
    if !(c > 0.0 && tau > 0.0) {
        return Err(Error::Domain(format!(
            "c = {c} and tau = {tau} must be positive"
        )));
    }
    Ok(1.0 / (s * s) + (c / tau) * (-s / tau).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_table() {
        // published to 4 decimals by truncation
        let expected = [0.8105, 0.9284, 0.9641, 0.9789, 0.9864];
        for (j, want) in (5..=9).zip(expected) {
            let a = alpha_level(j, 5, 2.4, 2.0).unwrap();
            assert_eq!((a * 1e4).floor() / 1e4, want, "j = {j}: {a}");
        }
        assert_eq!(alpha_level(6, 5, 2.0, 1.0).unwrap(), 0.75);
        assert_eq!(alpha_level(0, 0, 2.0, 1.0).unwrap(), 0.0);
        assert!(alpha_level(4, 5, 2.4, 2.0).is_err());
        assert!(alpha_level(5, 5, 2.0, 0.5).is_err());
    }

    #[test]
    fn alpha_strictly_increasing() {
        let values: Vec<f64> = (0..15)
            .map(|j| alpha_level(j, 0, 2.4, 2.0).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]));
        assert!(values.iter().all(|a| *a > 0.0 && *a < 1.0));
    }

    #[test]
    fn beta_examples() {
        let b = beta_level(&[-3.0, 1.0, 2.0]).unwrap();
        assert_eq!(
            b,
            BetaEstimate {
                value: 3.0,
                floored: false
            }
        );
        let z = beta_level(&[0.0, 0.0]).unwrap();
        assert!(z.floored);
        assert_eq!(z.value, BETA_FLOOR);
        assert!(beta_level(&[]).is_err());
    }

    #[test]
    fn sigma_examples() {
        let m = estimate_sigma(&[0.6745, -0.6745, 0.6745, -0.6745], SigmaEstimator::Mad).unwrap();
        assert!((m - 1.0).abs() < 1e-15);
        let s = estimate_sigma(&[1.0, -1.0], SigmaEstimator::SampleSd).unwrap();
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
        assert!(estimate_sigma(&[1.0], SigmaEstimator::Mad).is_err());
    }

    #[test]
    fn lambda_examples() {
        let l = lambda_from_s(1.0, 1.0, 2.0).unwrap();
        assert!((l - (1.0 + 0.5 * (-0.5f64).exp())).abs() < 1e-15);
        assert!((l - 1.303265).abs() < 1e-6);
        assert!(lambda_from_s(100.0, 1.0, 2.0).unwrap() < 1e-3);
        assert!(lambda_from_s(0.0, 1.0, 2.0).is_err());
        assert!(lambda_from_s(-1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn lambda_strictly_decreasing() {
        let values: Vec<f64> = (1..2000)
            .map(|i| lambda_from_s(i as f64 * 0.01, 1.0, 2.0).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn estimator_parse() {
        assert_eq!(
            "sd".parse::<SigmaEstimator>().unwrap(),
            SigmaEstimator::SampleSd
        );
        assert_eq!(
            "MAD".parse::<SigmaEstimator>().unwrap(),
            SigmaEstimator::Mad
        );
        assert!("iqr".parse::<SigmaEstimator>().is_err());
    }
}
