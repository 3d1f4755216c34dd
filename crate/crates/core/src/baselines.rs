//! Hard and soft thresholding with a fixed or universal threshold.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdKind {
    Hard,
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdPolicy {
    Fixed(f64),
    /// `sigma_hat * sqrt(2 ln n)`, with `sigma_hat` from the finest level.
    Universal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSpec {
    pub kind: ThresholdKind,
    pub policy: ThresholdPolicy,
}

impl ThresholdSpec {
    pub fn new(kind: ThresholdKind, policy: ThresholdPolicy) -> Result<Self> {
        if let ThresholdPolicy::Fixed(eta) = policy {
            if !(eta.is_finite() && eta >= 0.0) {
                return Err(Error::Domain(format!(
                    "threshold {eta} must be non-negative"
                )));
            }
        }
        Ok(ThresholdSpec { kind, policy })
    }

    /// The threshold for a signal of length `n` with noise estimate `sigma_hat`.
    pub fn eta(&self, sigma_hat: f64, n: usize) -> Result<f64> {
        match self.policy {
            ThresholdPolicy::Fixed(eta) => Ok(eta),
            ThresholdPolicy::Universal => universal_threshold(sigma_hat, n as f64),
        }
    }

    pub fn apply(&self, d: f64, eta: f64) -> f64 {
        match self.kind {
            ThresholdKind::Hard => hard_threshold(d, eta),
            ThresholdKind::Soft => soft_threshold(d, eta),
        }
    }
}

/// Keep-or-kill: `0` for `|d| <= eta`, otherwise `d`.
pub fn hard_threshold(d: f64, eta: f64) -> f64 {
    if d.abs() <= eta {
        0.0
    } else {
        d
    }
}

/// Shrink toward zero by `eta`: `sgn(d) (|d| - eta)_+`.
pub fn soft_threshold(d: f64, eta: f64) -> f64 {
    if d.abs() <= eta {
        0.0
    } else {
        d.signum() * (d.abs() - eta)
    }
}

pub fn universal_threshold(sigma_hat: f64, n: f64) -> Result<f64> {
    if n.is_nan() || n < 2.0 {
        return Err(Error::Domain(format!(
            "universal threshold needs n >= 2, got {n}"
        )));
    }
    if !(sigma_hat.is_finite() && sigma_hat > 0.0) {
        return Err(Error::Domain(format!(
            "sigma_hat = {sigma_hat} must be positive"
        )));
    }
    Ok(sigma_hat * (2.0 * n.ln()).sqrt())
}
