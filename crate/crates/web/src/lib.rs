//! Browser bindings for the interactive demo in `www/`.
//!
//! Every export returns a flat `Float64Array`; the layout is given on each
//! function.

use wasm_bindgen::prelude::*;

use esrshrink::baselines::{hard_threshold, soft_threshold};
use esrshrink::prior::{grid, rule_statistics, EsrRule, MixturePriorParams, NoiseModel};
use esrshrink::signals::{add_noise, generate_test_function, TestFunctionKind};
use esrshrink::{denoise, mse, ElicitationConfig, RuleSpec};

fn js(e: esrshrink::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `points` rows of `[d, esr, hard, soft]` on `[-span, span]`.
#[wasm_bindgen]
pub fn rule_curves(
    alpha: f64,
    beta: f64,
    lambda: f64,
    eta: f64,
    span: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    let rule = EsrRule::new(MixturePriorParams::new(alpha, beta, lambda).map_err(js)?);
    Ok(grid(-span, span, points)
        .flat_map(|d| {
            [
                d,
                rule.shrink(d),
                hard_threshold(d, eta),
                soft_threshold(d, eta),
            ]
        })
        .collect())
}

/// `points` rows of `[theta, bias^2, variance, risk]` on `[0, beta]`, with
/// Laplace sampling noise at the prior's own `lambda`.
#[wasm_bindgen]
pub fn risk_curves(alpha: f64, beta: f64, lambda: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let params = MixturePriorParams::new(alpha, beta, lambda).map_err(js)?;
    let noise = NoiseModel::marginalised(&params);
    let mut out = Vec::with_capacity(4 * points);
    for theta in grid(0.0, beta, points) {
        let s = rule_statistics(theta, &params, noise).map_err(js)?;
        out.extend([theta, s.bias_sq, s.variance, s.risk]);
    }
    Ok(out)
}

/// Noisy samples, truth and ESR estimate, each of length `n`, followed by
/// the estimate's MSE and the MSE of the noisy data.
#[wasm_bindgen]
pub fn denoise_demo(
    function: &str,
    n: usize,
    snr: f64,
    seed: u32,
    gamma: f64,
    l: f64,
) -> Result<Vec<f64>, JsError> {
    let kind: TestFunctionKind = function.parse().map_err(js)?;
    let truth = generate_test_function(kind, n, 7.0).map_err(js)?;
    let y = add_noise(&truth, snr, u64::from(seed)).map_err(js)?;
    let cfg = ElicitationConfig {
        gamma,
        l,
        ..ElicitationConfig::simulation_preset()
    };
    let out = denoise(y.samples(), RuleSpec::Esr, &cfg, 10).map_err(js)?;
    let err = mse(&out.estimate, truth.samples()).map_err(js)?;
    let raw = mse(y.samples(), truth.samples()).map_err(js)?;
    let mut flat = Vec::with_capacity(3 * n + 2);
    flat.extend_from_slice(y.samples());
    flat.extend_from_slice(truth.samples());
    flat.extend_from_slice(&out.estimate);
    flat.extend([err, raw]);
    Ok(flat)
}
