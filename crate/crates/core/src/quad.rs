//! Adaptive Gauss-Kronrod quadrature over piecewise intervals, with
//! half-infinite segments mapped onto the unit interval.
//!
//! The integrands in this crate are smooth except at a few known points
//! (likelihood kinks and prior support endpoints), so callers pass those
//! points as breakpoints and the adaptive refinement never has to chase a
//! derivative jump.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

// 15-point Kronrod abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Requested accuracy: the refinement stops once the summed error estimate
/// is below `max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-10,
            rel: 1e-12,
            max_intervals: 4000,
        }
    }
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Tolerance {
            abs,
            rel: 0.0,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    /// x = origin + t / (1 - t), t in [0, 1)
    Upper(f64),
    /// x = origin - t / (1 - t), t in [0, 1)
    Lower(f64),
}

impl Map {
    #[inline]
    fn apply(self, t: f64) -> (f64, f64) {
        match self {
            Map::Identity => (t, 1.0),
            Map::Upper(o) => {
                let s = 1.0 - t;
                (o + t / s, 1.0 / (s * s))
            }
            Map::Lower(o) => {
                let s = 1.0 - t;
                (o - t / s, 1.0 / (s * s))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    map: Map,
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, map: Map, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |t: f64| -> Result<f64> {
        let (x, jac) = map.apply(t);
        let v = f(x) * jac;
        if v.is_finite() {
            Ok(v)
        } else if jac.is_infinite() || x.is_infinite() {
            Ok(0.0)
        } else {
            Err(Error::Numeric(format!(
                "integrand is not finite at x = {x}"
            )))
        }
    };
    let fc = eval(center)?;
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    for (i, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let s = eval(center - dx)? + eval(center + dx)?;
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    Ok((kron * half, ((kron - gauss) * half).abs()))
}

/// Integrate `f` across the consecutive segments defined by `points`.
///
/// `points` must be non-decreasing; the first entry may be
/// `f64::NEG_INFINITY` and the last `f64::INFINITY`. Zero-width segments are
/// skipped.
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tolerance) -> Result<Quadrature> {
    if points.len() < 2 {
        return Err(Error::Numeric(
            "at least two breakpoints are required".into(),
        ));
    }
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.is_nan() || b.is_nan() || b < a {
            return Err(Error::Numeric(format!(
                "bad integration segment [{a}, {b}]"
            )));
        }
        if a == b {
            continue;
        }
        let (map, lo, hi) = match (a.is_finite(), b.is_finite()) {
            (true, true) => (Map::Identity, a, b),
            (true, false) => (Map::Upper(a), 0.0, 1.0),
            (false, true) => (Map::Lower(b), 0.0, 1.0),
            (false, false) => {
                return Err(Error::Numeric(
                    "split the real line at a finite breakpoint".into(),
                ))
            }
        };
        let (value, error) = kronrod(&f, map, lo, hi)?;
        heap.push(Piece {
            map,
            lo,
            hi,
            value,
            error,
        });
    }

    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(Quadrature {
                value,
                error,
                intervals: heap.len(),
            });
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Numeric(format!(
                "quadrature did not converge: {} intervals, value {value:e}, error estimate {error:e}",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            return Err(Error::Numeric(format!(
                "quadrature interval [{}, {}] cannot be subdivided further; error estimate {error:e}",
                worst.lo, worst.hi
            )));
        }
        for (lo, hi) in [(worst.lo, mid), (mid, worst.hi)] {
            let (value, error) = kronrod(&f, worst.map, lo, hi)?;
            heap.push(Piece {
                map: worst.map,
                lo,
                hi,
                value,
                error,
            });
        }
    }
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

static LEGENDRE_24: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();

/// Fixed 24-point Gauss-Legendre rule on [a, b]; exact for polynomials of
/// degree 47 and accurate to rounding for entire integrands that vary by a
/// few e-folds across the interval.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = LEGENDRE_24.get_or_init(|| legendre_rule(24));
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    nodes
        .iter()
        .zip(weights)
        .map(|(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}
