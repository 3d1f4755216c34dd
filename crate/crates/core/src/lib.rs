//! Wavelet denoising with a spike-and-slab prior whose slab is the
//! Epanechnikov kernel, plus the thresholding baselines, benchmark signals
//! and Monte Carlo harness used to compare them.
//!
//! ```
//! use esrshrink::{denoise, ElicitationConfig, RuleSpec};
//! use esrshrink::signals::{add_noise, generate_test_function, TestFunctionKind};
//!
//! let f = generate_test_function(TestFunctionKind::Heavisine, 512, 7.0).unwrap();
//! let y = add_noise(&f, 3.0, 1).unwrap();
//! let out = denoise(y.samples(), RuleSpec::Esr, &ElicitationConfig::simulation_preset(), 10).unwrap();
//! assert_eq!(out.estimate.len(), 512);
//! ```

pub mod baselines;
pub mod bench;
#[cfg(feature = "cli")]
pub mod cli;
pub mod dwt;
pub mod elicitation;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod prior;
pub mod quad;
pub mod signals;

pub use dwt::{dwt_forward, dwt_inverse, DaubechiesFilter, WaveletPyramid};
pub use elicitation::{ElicitationConfig, SigmaEstimator};
pub use error::{Error, Result};
pub use pipeline::{denoise, mse, Denoised, RuleSpec};
pub use prior::{esr, EsrRule, MixturePriorParams};
