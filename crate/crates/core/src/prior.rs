//! Spike-and-slab prior with an Epanechnikov slab, and the closed-form
//! posterior-mean shrinkage rule it induces.
//!
//! With `d | theta, sigma^2 ~ N(theta, sigma^2)` and `sigma^2 ~ Exp(lambda)`,
//! integrating out the variance leaves a Laplace likelihood
//! `d | theta ~ ED(theta, 1/a)` with `a = sqrt(2 lambda)`. The slab
//! `g(theta) = 3/(4 beta^3) (beta^2 - theta^2)` on `(-beta, beta)` then gives
//! two integrals with closed forms,
//!
//! ```text
//! I1(d) = int (beta^2 - t^2) exp(-a|d - t|) dt
//! I2(d) = int t (beta^2 - t^2) exp(-a|d - t|) dt
//! ```
//!
//! from which the marginal `m(d) = (3a / 8 beta^3) I1`, the slab posterior
//! mean `I2 / I1`, and the mixture rule follow. Both integrals have
//! different expressions for `|d| <= beta` and `|d| > beta`; in the outer
//! region every term carries `exp(-a(|d| - beta))`, which is factored out so
//! no exponential with a positive argument is ever formed.

use crate::error::{Error, Result};
use crate::quad::{self, gauss_legendre, Tolerance};

/// Hyperparameters of the mixture prior `alpha * delta_0 + (1 - alpha) * g`
/// and the exponential prior on the noise variance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MixturePriorParams {
    alpha: f64,
    beta: f64,
    lambda: f64,
}

impl MixturePriorParams {
    /// `alpha` must lie in `[0, 1)`; `alpha = 0` is the pure-slab prior that
    /// the level-dependent elicitation produces at the coarse level when
    /// `l = 1`.
    pub fn new(alpha: f64, beta: f64, lambda: f64) -> Result<Self> {
        if !(alpha.is_finite() && (0.0..1.0).contains(&alpha)) {
            return Err(Error::Domain(format!("alpha = {alpha} must lie in [0, 1)")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Domain(format!("beta = {beta} must be positive")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
        }
        Ok(MixturePriorParams {
            alpha,
            beta,
            lambda,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Laplace rate `a = sqrt(2 lambda)` of the marginalised likelihood.
    pub fn laplace_rate(&self) -> f64 {
        (2.0 * self.lambda).sqrt()
    }
}

/// A point on a plotted rule curve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RuleCurvePoint {
    pub d: f64,
    pub value: f64,
}

pub fn epanechnikov_pdf(theta: f64, beta: f64) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Domain(format!("beta = {beta} must be positive")));
    }
    Ok(if theta.abs() < beta {
        0.75 * (beta * beta - theta * theta) / (beta * beta * beta)
    } else {
        0.0
    })
}

/// Laplace density of `d` centred at `theta` with scale `1 / sqrt(2 lambda)`.
pub fn double_exp_pdf(d: f64, theta: f64, lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
    }
    let a = (2.0 * lambda).sqrt();
    Ok(0.5 * a * (-a * (d - theta).abs()).exp())
}

/// `I1`, `I2` and the spike likelihood kernel `exp(-a|d|)`, all multiplied
/// by the common factor `exp(a * max(|d| - beta, 0))`. `abs_d >= 0`.
#[derive(Debug, Clone, Copy)]
struct SlabIntegrals {
    i1: f64,
    i2: f64,
    spike: f64,
    // log of the factor that was divided out
    log_scale: f64,
}

// Below this value of a*beta the closed forms lose digits to cancellation
// between O(1/a^3) terms, and the integrals are evaluated by Gauss-Legendre
// instead (the integrand varies by at most two e-folds per piece there).
const SMALL_SPREAD: f64 = 1.0;

fn slab_integrals(abs_d: f64, beta: f64, a: f64) -> SlabIntegrals {
    let t = a * beta;
    if abs_d <= beta {
        let spike = (-a * abs_d).exp();
        if t < SMALL_SPREAD {
            let below = |f: &dyn Fn(f64) -> f64| {
                gauss_legendre(|th| f(th) * (-a * (abs_d - th)).exp(), -beta, abs_d)
                    + gauss_legendre(|th| f(th) * (-a * (th - abs_d)).exp(), abs_d, beta)
            };
            let i1 = below(&|th| beta * beta - th * th);
            let i2 = below(&|th| th * (beta * beta - th * th));
            return SlabIntegrals {
                i1,
                i2,
                spike,
                log_scale: 0.0,
            };
        }
        let e_minus = (-a * (beta - abs_d)).exp(); // exp(-a(beta - |d|))
        let e_plus = (-a * (beta + abs_d)).exp(); // exp(-a(beta + |d|))
        let a2 = a * a;
        let a3 = a2 * a;
        let a4 = a2 * a2;
        let inner = beta * beta - abs_d * abs_d;
        let i1 = (2.0 * beta / a2 + 2.0 / a3) * (e_plus + e_minus) + (2.0 / a) * (inner - 2.0 / a2);
        let i2 = 2.0 * (a2 * beta * beta + 3.0 * t + 3.0) / a4 * (e_minus - e_plus)
            + (2.0 / a) * inner * abs_d
            - 12.0 * abs_d / a3;
        SlabIntegrals {
            i1,
            i2,
            spike,
            log_scale: 0.0,
        }
    } else {
        let log_scale = -a * (abs_d - beta);
        let spike = (-t).exp();
        if t < SMALL_SPREAD {
            let kernel = |th: f64| (-a * (beta - th)).exp();
            let i1 = gauss_legendre(|th| (beta * beta - th * th) * kernel(th), -beta, beta);
            let i2 = gauss_legendre(|th| th * (beta * beta - th * th) * kernel(th), -beta, beta);
            return SlabIntegrals {
                i1,
                i2,
                spike,
                log_scale,
            };
        }
        let v = (-2.0 * t).exp();
        let a3 = a * a * a;
        let t2 = t * t;
        let i1 = 2.0 / a3 * ((t - 1.0) + (t + 1.0) * v);
        let i2 = 2.0 / (a3 * a) * ((t2 - 3.0 * t + 3.0) - (t2 + 3.0 * t + 3.0) * v);
        SlabIntegrals {
            i1,
            i2,
            spike,
            log_scale,
        }
    }
}

fn positive_i1(i1: f64, d: f64) -> f64 {
    if i1 > 0.0 {
        i1
    } else {
        log::warn!("marginal density at d = {d} rounded to {i1:e}; clamped to the smallest positive normal");
        f64::MIN_POSITIVE
    }
}

fn finite(d: f64) -> Result<f64> {
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::Input(format!(
            "empirical coefficient {d} is not finite"
        )))
    }
}

/// Closed-form evaluator of the Epanechnikov shrinkage rule for fixed
/// hyperparameters. Infallible per coefficient; construct once per level.
#[derive(Debug, Clone, Copy)]
pub struct EsrRule {
    params: MixturePriorParams,
    rate: f64,
    slab_norm: f64,
}

impl EsrRule {
    pub fn new(params: MixturePriorParams) -> Self {
        EsrRule {
            params,
            rate: params.laplace_rate(),
            slab_norm: 0.75 / params.beta.powi(3),
        }
    }

    pub fn params(&self) -> &MixturePriorParams {
        &self.params
    }

    /// Posterior mean of `theta` under the full spike-and-slab prior.
    /// Antisymmetric by construction.
    pub fn shrink(&self, d: f64) -> f64 {
        let s = slab_integrals(d.abs(), self.params.beta, self.rate);
        let w = 1.0 - self.params.alpha;
        let i1 = positive_i1(s.i1, d);
        let value =
            w * self.slab_norm * s.i2 / (self.params.alpha * s.spike + w * self.slab_norm * i1);
        if d == 0.0 {
            0.0
        } else {
            value.copysign(d)
        }
    }

    /// Posterior mean under the slab alone (`alpha` ignored).
    pub fn slab_mean(&self, d: f64) -> f64 {
        let s = slab_integrals(d.abs(), self.params.beta, self.rate);
        let value = s.i2 / positive_i1(s.i1, d);
        if d == 0.0 {
            0.0
        } else {
            value.copysign(d)
        }
    }

    /// Natural log of the slab marginal density `m(d)`.
    pub fn log_marginal(&self, d: f64) -> f64 {
        let s = slab_integrals(d.abs(), self.params.beta, self.rate);
        (0.5 * self.rate * self.slab_norm * positive_i1(s.i1, d)).ln() + s.log_scale
    }

    pub fn marginal(&self, d: f64) -> f64 {
        self.log_marginal(d).exp().max(f64::MIN_POSITIVE)
    }

    /// Sample the rule on `points` equispaced values of `d` in `[lo, hi]`.
    pub fn curve(&self, lo: f64, hi: f64, points: usize) -> Vec<RuleCurvePoint> {
        grid(lo, hi, points)
            .map(|d| RuleCurvePoint {
                d,
                value: self.shrink(d),
            })
            .collect()
    }
}

/// `points` equispaced values on `[lo, hi]`; a single point sits at `lo`.
pub fn grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let step = if points > 1 {
        (hi - lo) / (points - 1) as f64
    } else {
        0.0
    };
    (0..points).map(move |i| {
        if i + 1 == points && points > 1 {
            hi
        } else {
            lo + step * i as f64
        }
    })
}

/// Slab-only marginal density of `d` (the spike weight is not applied).
pub fn marginal_m(d: f64, params: &MixturePriorParams) -> Result<f64> {
    Ok(EsrRule::new(*params).marginal(finite(d)?))
}

/// Slab-only posterior mean `E(theta | d)` under `g` alone.
pub fn delta_slab(d: f64, params: &MixturePriorParams) -> Result<f64> {
    Ok(EsrRule::new(*params).slab_mean(finite(d)?))
}

/// The Epanechnikov shrinkage rule: posterior mean under the mixture prior.
pub fn esr(d: f64, params: &MixturePriorParams) -> Result<f64> {
    Ok(EsrRule::new(*params).shrink(finite(d)?))
}

/// Posterior mean by direct adaptive quadrature of
/// `(1-alpha) int theta g L / (alpha L(d|0) + (1-alpha) int g L)`, split at
/// the likelihood kink and the slab support. Independent of the closed form;
/// used as its oracle.
pub fn posterior_mean_oracle(d: f64, params: &MixturePriorParams) -> Result<f64> {
    let d = finite(d)?;
    let beta = params.beta;
    let a = params.laplace_rate();
    // Rescale the likelihood so it is O(1) even for |d| far beyond beta.
    let shift = a * (d.abs() - beta).max(0.0);
    let like = |theta: f64| 0.5 * a * (shift - a * (d - theta).abs()).exp();
    let slab = |theta: f64| 0.75 * (beta * beta - theta * theta) / (beta * beta * beta);

    let breaks: Vec<f64> = if d.abs() < beta {
        vec![-beta, d, beta]
    } else {
        vec![-beta, beta]
    };
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-13,
        max_intervals: 4000,
    };
    let den_slab = quad::integrate(|t| slab(t) * like(t), &breaks, tol)
        .map_err(|e| Error::Numeric(format!("oracle denominator at d = {d}: {e}")))?;
    let num_tol = Tolerance {
        abs: 1e-14 * den_slab.value.abs(),
        ..tol
    };
    let num = quad::integrate(|t| t * slab(t) * like(t), &breaks, num_tol)
        .map_err(|e| Error::Numeric(format!("oracle numerator at d = {d}: {e}")))?;
    let w = 1.0 - params.alpha;
    Ok(w * num.value / (params.alpha * like(0.0) + w * den_slab.value))
}

/// Sampling distribution of `d` given `theta` used for bias/variance/risk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// Laplace likelihood with the marginalised rate `sqrt(2 lambda)`.
    DoubleExponential { lambda: f64 },
    /// `N(theta, sigma^2)`.
    Gaussian { sigma: f64 },
}

impl NoiseModel {
    /// The Laplace model implied by the prior's own `lambda`.
    pub fn marginalised(params: &MixturePriorParams) -> Self {
        NoiseModel::DoubleExponential {
            lambda: params.lambda,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::DoubleExponential { lambda } if !(lambda.is_finite() && lambda > 0.0) => {
                Err(Error::Domain(format!(
                    "noise lambda = {lambda} must be positive"
                )))
            }
            NoiseModel::Gaussian { sigma } if !(sigma.is_finite() && sigma > 0.0) => Err(
                Error::Domain(format!("noise sigma = {sigma} must be positive")),
            ),
            _ => Ok(()),
        }
    }

    fn density(&self, d: f64, theta: f64) -> f64 {
        match *self {
            NoiseModel::DoubleExponential { lambda } => {
                let a = (2.0 * lambda).sqrt();
                0.5 * a * (-a * (d - theta).abs()).exp()
            }
            NoiseModel::Gaussian { sigma } => {
                let z = (d - theta) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RuleStatistics {
    pub theta: f64,
    pub mean: f64,
    pub bias_sq: f64,
    pub variance: f64,
    pub risk: f64,
}

/// Squared bias, variance and quadratic risk of the rule at `theta`, each an
/// expectation over `d | theta` computed by adaptive quadrature. The risk is
/// integrated directly, not assembled from the other two.
pub fn rule_statistics(
    theta: f64,
    params: &MixturePriorParams,
    noise: NoiseModel,
) -> Result<RuleStatistics> {
    let theta = finite(theta)?;
    noise.validate()?;
    let rule = EsrRule::new(*params);
    let beta = params.beta;

    let mut breaks = vec![f64::NEG_INFINITY, -beta, beta, theta, f64::INFINITY];
    if let NoiseModel::Gaussian { sigma } = noise {
        breaks.extend([theta - 8.0 * sigma, theta + 8.0 * sigma]);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let tol = Tolerance {
        abs: 1e-13,
        rel: 1e-13,
        max_intervals: 4000,
    };
    let wrap = |what: &str, e: Error| Error::Numeric(format!("{what} at theta = {theta}: {e}"));
    let mean = quad::integrate(|d| rule.shrink(d) * noise.density(d, theta), &breaks, tol)
        .map_err(|e| wrap("mean", e))?
        .value;
    let variance = quad::integrate(
        |d| {
            let r = rule.shrink(d) - mean;
            r * r * noise.density(d, theta)
        },
        &breaks,
        tol,
    )
    .map_err(|e| wrap("variance", e))?
    .value;
    let risk = quad::integrate(
        |d| {
            let r = rule.shrink(d) - theta;
            r * r * noise.density(d, theta)
        },
        &breaks,
        tol,
    )
    .map_err(|e| wrap("risk", e))?
    .value;
    Ok(RuleStatistics {
        theta,
        mean,
        bias_sq: (mean - theta).powi(2),
        variance,
        risk,
    })
}
