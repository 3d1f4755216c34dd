//! Benchmark signals (Bumps, Blocks, Doppler, Heavisine) and seeded
//! Gaussian noise injection.
//!
//! Noise comes from ChaCha20 (`rand_chacha` 0.9). A signal seed selects the
//! key and a 64-bit stream id selects an independent keystream, so
//! replications can be generated in any order or in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::dwt::dyadic_depth;
use crate::elicitation::sample_sd;
use crate::error::{Error, Result};

pub const DEFAULT_TARGET_SD: f64 = 7.0;

/// Samples on the grid `x_i = i / n`, optionally paired with the noiseless
/// truth they were generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    truth: Option<Vec<f64>>,
}

impl Signal {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        dyadic_depth(samples.len())?;
        Ok(Signal {
            samples,
            truth: None,
        })
    }

    pub fn with_truth(samples: Vec<f64>, truth: Vec<f64>) -> Result<Self> {
        dyadic_depth(samples.len())?;
        if truth.len() != samples.len() {
            return Err(Error::Input(format!(
                "truth has {} samples but the signal has {}",
                truth.len(),
                samples.len()
            )));
        }
        Ok(Signal {
            samples,
            truth: Some(truth),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn truth(&self) -> Option<&[f64]> {
        self.truth.as_deref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunctionKind {
    Bumps,
    Blocks,
    Doppler,
    Heavisine,
}

impl TestFunctionKind {
    pub const ALL: [TestFunctionKind; 4] = [
        TestFunctionKind::Bumps,
        TestFunctionKind::Blocks,
        TestFunctionKind::Doppler,
        TestFunctionKind::Heavisine,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TestFunctionKind::Bumps => "bumps",
            TestFunctionKind::Blocks => "blocks",
            TestFunctionKind::Doppler => "doppler",
            TestFunctionKind::Heavisine => "heavisine",
        }
    }

    /// Unscaled function value at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunctionKind::Bumps => BUMP_POS
                .iter()
                .zip(BUMP_HEIGHT.iter().zip(BUMP_WIDTH))
                .map(|(t, (h, w))| h / (1.0 + ((x - t) / w).abs()).powi(4))
                .sum(),
            TestFunctionKind::Blocks => BUMP_POS
                .iter()
                .zip(BLOCK_HEIGHT)
                .map(|(t, h)| h * 0.5 * (1.0 + sgn(x - t)))
                .sum(),
            TestFunctionKind::Doppler => {
                (x * (1.0 - x)).sqrt() * (2.1 * std::f64::consts::PI / (x + 0.05)).sin()
            }
            TestFunctionKind::Heavisine => {
                4.0 * (4.0 * std::f64::consts::PI * x).sin() - sgn(x - 0.3) - sgn(0.72 - x)
            }
        }
    }
}

impl std::str::FromStr for TestFunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestFunctionKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown test function `{s}` (bumps|blocks|doppler|heavisine)"
                ))
            })
    }
}

impl std::fmt::Display for TestFunctionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

const BUMP_POS: [f64; 11] = [
    0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81,
];
const BUMP_HEIGHT: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMP_WIDTH: [f64; 11] = [
    0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005,
];
const BLOCK_HEIGHT: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];

// sign with sgn(0) = 0 (f64::signum maps 0 to 1)
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunction {
    pub kind: TestFunctionKind,
    pub target_sd: f64,
}

impl TestFunction {
    pub fn new(kind: TestFunctionKind) -> Self {
        TestFunction {
            kind,
            target_sd: DEFAULT_TARGET_SD,
        }
    }

    pub fn generate(&self, n: usize) -> Result<Signal> {
        generate_test_function(self.kind, n, self.target_sd)
    }
}

/// Evaluate the test function at `x_i = i / n` and rescale multiplicatively
/// (no recentring) so the sample SD equals `target_sd`. The returned signal
/// carries itself as truth.
pub fn generate_test_function(kind: TestFunctionKind, n: usize, target_sd: f64) -> Result<Signal> {
    dyadic_depth(n)?;
    if !(target_sd.is_finite() && target_sd > 0.0) {
        return Err(Error::Domain(format!(
            "target SD {target_sd} must be positive"
        )));
    }
    let raw: Vec<f64> = (1..=n).map(|i| kind.eval(i as f64 / n as f64)).collect();
    let scale = target_sd / sample_sd(&raw);
    let f: Vec<f64> = raw.into_iter().map(|v| v * scale).collect();
    Signal::with_truth(f.clone(), f)
}

/// ChaCha20 keyed by `seed`, positioned on keystream `stream`.
pub fn noise_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `truth + sigma * z` with `z` IID standard normal drawn from `rng`.
pub fn add_noise_with(truth: &[f64], sigma: f64, rng: &mut ChaCha20Rng) -> Result<Signal> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::Domain(format!(
            "noise sigma {sigma} must be non-negative"
        )));
    }
    let y = truth
        .iter()
        .map(|f| {
            let z: f64 = StandardNormal.sample(rng);
            f + sigma * z
        })
        .collect();
    Signal::with_truth(y, truth.to_vec())
}

/// Add Gaussian noise with `sigma = SD(f) / snr`, where `f` is the truth
/// (or the samples, when no truth is attached). Deterministic in `seed`.
pub fn add_noise(truth: &Signal, snr: f64, seed: u64) -> Result<Signal> {
    if !(snr.is_finite() && snr > 0.0) {
        return Err(Error::Domain(format!("SNR {snr} must be positive")));
    }
    let f = truth.truth().unwrap_or(truth.samples());
    let sigma = sample_sd(f) / snr;
    add_noise_with(f, sigma, &mut noise_rng(seed, 0))
}
