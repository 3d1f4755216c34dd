//! Periodic orthogonal discrete wavelet transform (Mallat pyramid) with
//! extremal-phase Daubechies filters.
//!
//! Analysis correlates the periodised signal with the filters and keeps even
//! shifts:
//!
//! ```text
//! a[k] = sum_m h[m] x[(2k + m) mod n]
//! d[k] = sum_m g[m] x[(2k + m) mod n],   g[m] = (-1)^m h[L - 1 - m]
//! ```
//!
//! so every level is an orthogonal map and the full pyramid satisfies
//! Parseval exactly (up to rounding), at every depth including blocks shorter
//! than the filter.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct DaubechiesFilter {
    vanishing_moments: usize,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl DaubechiesFilter {
    /// Extremal-phase Daubechies filter with `vanishing_moments` vanishing
    /// moments (2N taps). Orders 1 through 10 are supported.
    pub fn new(vanishing_moments: usize) -> Result<Self> {
        static CACHE: OnceLock<Vec<DaubechiesFilter>> = OnceLock::new();
        if !(1..=MAX_ORDER).contains(&vanishing_moments) {
            return Err(Error::config(format!(
                "unsupported Daubechies order {vanishing_moments}; expected 1..={MAX_ORDER}"
            )));
        }
        let cache = CACHE.get_or_init(|| (1..=MAX_ORDER).map(build_filter).collect());
        Ok(cache[vanishing_moments - 1].clone())
    }

    pub fn vanishing_moments(&self) -> usize {
        self.vanishing_moments
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }
}

/// Same as [`DaubechiesFilter::new`].
pub fn make_daubechies_filter(vanishing_moments: usize) -> Result<DaubechiesFilter> {
    DaubechiesFilter::new(vanishing_moments)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

// Spectral factorisation: |H(w)|^2 = cos^{2N}(w/2) P(sin^2(w/2)) with
// P(y) = sum_{k<N} C(N-1+k, k) y^k. Each root y of P yields a reciprocal pair
// of z-roots from y = (2 - z - 1/z)/4; keeping the one inside the unit
// circle gives the minimum-phase (extremal-phase) factor.
fn build_filter(order: usize) -> DaubechiesFilter {
    let p: Vec<f64> = (0..order).map(|k| binomial(order - 1 + k, k)).collect();
    let y_roots = poly_roots(&p);

    // Q(z) = (z + 1)^N * prod (z - z_k), coefficients lowest power first.
    let mut q = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..order {
        q = poly_mul_linear(&q, Complex64::new(-1.0, 0.0));
    }
    for y in y_roots {
        let b = Complex64::new(1.0, 0.0) - 2.0 * y;
        let disc = (b * b - 1.0).sqrt();
        let (z1, z2) = (b + disc, b - disc);
        let inner = if z1.norm() < z2.norm() { z1 } else { z2 };
        q = poly_mul_linear(&q, inner);
    }
    // Descending powers of z are the taps h[0..L).
    let mut lowpass: Vec<f64> = q.iter().rev().map(|c| c.re).collect();
    let scale = std::f64::consts::SQRT_2 / lowpass.iter().sum::<f64>();
    lowpass.iter_mut().for_each(|h| *h *= scale);
    refine_taps(&mut lowpass, order);

    let len = lowpass.len();
    let highpass = (0..len)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * lowpass[len - 1 - k]
        })
        .collect();
    DaubechiesFilter {
        vanishing_moments: order,
        lowpass,
        highpass,
    }
}

// Expanding the root product loses a digit or two for long filters. A few
// Newton steps on the defining equations (orthonormality of even shifts and
// vanishing moments about the filter centre), with residuals evaluated in
// compensated arithmetic, bring the taps to within rounding of the exact ones.
fn refine_taps(h: &mut [f64], order: usize) {
    let len = h.len();
    let centre = (len as f64 - 1.0) / 2.0;
    let moment_row = |p: usize| -> Vec<f64> {
        (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * (k as f64 - centre).powi(p as i32)
            })
            .collect()
    };
    let moment_rows: Vec<Vec<f64>> = (0..order).map(moment_row).collect();
    for _ in 0..4 {
        let mut jac = vec![vec![0.0; len]; len];
        let mut rhs = vec![0.0; len];
        for m in 0..order {
            let shifted: Vec<f64> = (0..len)
                .map(|k| if k + 2 * m < len { h[k + 2 * m] } else { 0.0 })
                .collect();
            rhs[m] = -(dot2(h, &shifted) - if m == 0 { 1.0 } else { 0.0 });
            for i in 0..len {
                let up = if i + 2 * m < len { h[i + 2 * m] } else { 0.0 };
                let down = if i >= 2 * m { h[i - 2 * m] } else { 0.0 };
                jac[m][i] = up + down;
            }
        }
        for (p, row) in moment_rows.iter().enumerate() {
            let norm = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            rhs[order + p] = -dot2(row, h) / norm;
            jac[order + p] = row.iter().map(|v| v / norm).collect();
        }
        let Some(step) = solve_dense(jac, rhs) else {
            return;
        };
        h.iter_mut().zip(&step).for_each(|(x, d)| *x += d);
        if step.iter().all(|d| d.abs() <= 1e-17) {
            break;
        }
    }
}

// Dot product with error-free transformations (twice the working precision).
fn dot2(a: &[f64], b: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let p = x * y;
        let pe = x.mul_add(*y, -p);
        let t = s + p;
        let z = t - s;
        c += (s - (t - z)) + (p - z) + pe;
        s = t;
    }
    s + c
}

// Gaussian elimination with partial pivoting; None if singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (done, rest) = a.split_at_mut(col + 1);
        let pivot_row = &done[col];
        for (offset, row) in rest.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[col + 1 + offset] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

// Multiply a polynomial (lowest power first) by (z - root).
fn poly_mul_linear(p: &[Complex64], root: Complex64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); p.len() + 1];
    for (i, &c) in p.iter().enumerate() {
        out[i + 1] += c;
        out[i] -= c * root;
    }
    out
}

fn horner(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Complex roots of a real polynomial given lowest power first, by the
/// Aberth-Ehrlich simultaneous iteration followed by Newton polishing.
fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let degree = coeffs.len().saturating_sub(1);
    if degree == 0 {
        return Vec::new();
    }
    let lead = coeffs[degree];
    // Cauchy bound on root magnitudes.
    let radius = 1.0
        + coeffs[..degree]
            .iter()
            .map(|c| (c / lead).abs())
            .fold(0.0, f64::max);
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / degree as f64 + 0.4;
            Complex64::from_polar(0.5 * radius, angle)
        })
        .collect();

    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for i in 0..degree {
            let (p, dp) = horner(coeffs, roots[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..degree)
                .filter(|&j| j != i)
                .map(|j| (roots[i] - roots[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            roots[i] -= step;
            max_step = max_step.max(step.norm() / roots[i].norm().max(1.0));
        }
        if max_step < 1e-16 {
            break;
        }
    }
    for root in roots.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(coeffs, *root);
            if dp.norm() > 0.0 {
                *root -= p / dp;
            }
        }
    }
    roots
}

/// Multiresolution coefficient container: the scaling block at the coarse
/// level plus one detail block per level `coarse_level..depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    depth: usize,
    coarse_level: usize,
    scaling: Vec<f64>,
    details: Vec<Vec<f64>>,
}

impl WaveletPyramid {
    /// An all-zero pyramid for a signal of length `2^depth`.
    pub fn zeros(depth: usize, coarse_level: usize) -> Result<Self> {
        if coarse_level >= depth {
            return Err(Error::Input(format!(
                "coarse level {coarse_level} must be below the depth {depth}"
            )));
        }
        Ok(WaveletPyramid {
            depth,
            coarse_level,
            scaling: vec![0.0; 1 << coarse_level],
            details: (coarse_level..depth).map(|j| vec![0.0; 1 << j]).collect(),
        })
    }

    /// Assemble a pyramid from raw blocks; `details[i]` is level
    /// `coarse_level + i`.
    pub fn from_parts(
        depth: usize,
        coarse_level: usize,
        scaling: Vec<f64>,
        details: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let p = WaveletPyramid {
            depth,
            coarse_level,
            scaling,
            details,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.coarse_level >= self.depth {
            return Err(Error::Input(format!(
                "coarse level {} must be below the depth {}",
                self.coarse_level, self.depth
            )));
        }
        if self.scaling.len() != 1 << self.coarse_level {
            return Err(Error::Input(format!(
                "scaling block has {} entries, expected {}",
                self.scaling.len(),
                1usize << self.coarse_level
            )));
        }
        if self.details.len() != self.depth - self.coarse_level {
            return Err(Error::Input(format!(
                "expected {} detail levels, found {}",
                self.depth - self.coarse_level,
                self.details.len()
            )));
        }
        for (j, block) in self.levels() {
            if block.len() != 1 << j {
                return Err(Error::Input(format!(
                    "detail level {j} has {} entries, expected {}",
                    block.len(),
                    1usize << j
                )));
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn coarse_level(&self) -> usize {
        self.coarse_level
    }

    pub fn len(&self) -> usize {
        1 << self.depth
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    pub fn scaling_mut(&mut self) -> &mut [f64] {
        &mut self.scaling
    }

    /// Detail block at level `j`, if `coarse_level <= j < depth`.
    pub fn level(&self, j: usize) -> Option<&[f64]> {
        j.checked_sub(self.coarse_level)
            .and_then(|i| self.details.get(i))
            .map(Vec::as_slice)
    }

    pub fn level_mut(&mut self, j: usize) -> Option<&mut [f64]> {
        j.checked_sub(self.coarse_level)
            .and_then(|i| self.details.get_mut(i))
            .map(Vec::as_mut_slice)
    }

    /// Detail blocks from coarsest to finest, paired with their level.
    pub fn levels(&self) -> impl Iterator<Item = (usize, &[f64])> {
        let j0 = self.coarse_level;
        self.details
            .iter()
            .enumerate()
            .map(move |(i, b)| (j0 + i, b.as_slice()))
    }

    pub fn levels_mut(&mut self) -> impl Iterator<Item = (usize, &mut [f64])> {
        let j0 = self.coarse_level;
        self.details
            .iter_mut()
            .enumerate()
            .map(move |(i, b)| (j0 + i, b.as_mut_slice()))
    }

    /// The finest detail block (level `depth - 1`).
    pub fn finest(&self) -> &[f64] {
        self.details.last().expect("at least one detail level")
    }

    /// Sum of squares over every block.
    pub fn energy(&self) -> f64 {
        self.scaling.iter().map(|v| v * v).sum::<f64>()
            + self
                .details
                .iter()
                .flat_map(|b| b.iter())
                .map(|v| v * v)
                .sum::<f64>()
    }
}

/// `log2(n)` when `n` is a power of two (and at least 2).
pub fn dyadic_depth(n: usize) -> Result<usize> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::NonDyadic { len: n });
    }
    Ok(n.trailing_zeros() as usize)
}

fn analysis_step(x: &[f64], filter: &DaubechiesFilter) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for (m, (h, g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            let v = x[(2 * k + m) % n];
            a += h * v;
            d += g * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

fn synthesis_step(approx: &[f64], detail: &[f64], filter: &DaubechiesFilter) -> Vec<f64> {
    let n = 2 * approx.len();
    let mut out = vec![0.0; n];
    for (k, (a, d)) in approx.iter().zip(detail).enumerate() {
        for (m, (h, g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            out[(2 * k + m) % n] += h * a + g * d;
        }
    }
    out
}

/// Forward transform `d = W y` down to `coarse_level`.
pub fn dwt_forward(
    y: &[f64],
    filter: &DaubechiesFilter,
    coarse_level: usize,
) -> Result<WaveletPyramid> {
    let depth = dyadic_depth(y.len())?;
    if coarse_level >= depth {
        return Err(Error::Input(format!(
            "coarse level {coarse_level} must be below log2(n) = {depth}"
        )));
    }
    let mut details = vec![Vec::new(); depth - coarse_level];
    let mut approx = y.to_vec();
    for j in (coarse_level..depth).rev() {
        let (a, d) = analysis_step(&approx, filter);
        details[j - coarse_level] = d;
        approx = a;
    }
    Ok(WaveletPyramid {
        depth,
        coarse_level,
        scaling: approx,
        details,
    })
}

/// Inverse transform; exact inverse of [`dwt_forward`].
pub fn dwt_inverse(pyramid: &WaveletPyramid, filter: &DaubechiesFilter) -> Result<Vec<f64>> {
    pyramid.validate()?;
    let mut approx = pyramid.scaling.clone();
    for detail in &pyramid.details {
        approx = synthesis_step(&approx, detail, filter);
    }
    Ok(approx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lcg_signal(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    #[test]
    fn haar_taps() {
        let f = DaubechiesFilter::new(1).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f.lowpass()[0] - r).abs() < 1e-15);
        assert!((f.lowpass()[1] - r).abs() < 1e-15);
        assert_eq!(f.highpass(), &[f.lowpass()[1], -f.lowpass()[0]]);
    }

    #[test]
    fn d4_taps_match_published_values() {
        let f = DaubechiesFilter::new(2).unwrap();
        let published = [
            0.4829629131445341,
            0.8365163037378079,
            0.2241438680420134,
            -0.1294095225512604,
        ];
        for (a, b) in f.lowpass().iter().zip(published) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn d20_taps_match_published_table() {
        // Extremal-phase 10-vanishing-moment filter, as tabulated in the
        // standard Daubechies tables.
        let published = [
            0.026670057900555554,
            0.1881768000776915,
            0.5272011889317256,
            0.6884590394536035,
            0.2811723436605775,
            -0.24984642432731538,
            -0.19594627437737705,
            0.12736934033579325,
            0.09305736460357235,
            -0.07139414716639708,
            -0.029457536821875813,
            0.033212674059341,
            0.0036065535669561697,
            -0.010733175483330575,
            0.001395351747052901,
            0.001992405295185056,
            -0.0006858566949597116,
            -0.00011646685512928545,
            9.358867032006959e-05,
            -1.3264202894521244e-05,
        ];
        let f = DaubechiesFilter::new(10).unwrap();
        for (a, b) in f.lowpass().iter().zip(published) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn filter_invariants_all_orders() {
        for order in 1..=MAX_ORDER {
            let f = DaubechiesFilter::new(order).unwrap();
            let h = f.lowpass();
            let g = f.highpass();
            assert_eq!(h.len(), 2 * order);
            assert!((h.iter().sum::<f64>() - std::f64::consts::SQRT_2).abs() < 1e-12);
            for shift in 0..order {
                let dot: f64 = (0..h.len() - 2 * shift)
                    .map(|k| h[k] * h[k + 2 * shift])
                    .sum();
                let expected = if shift == 0 { 1.0 } else { 0.0 };
                assert!(
                    (dot - expected).abs() < 1e-12,
                    "order {order} shift {shift}: {dot}"
                );
            }
            // about the filter centre: raw powers of k reach 19^9 and swamp f64
            let c = (g.len() as f64 - 1.0) / 2.0;
            for p in 0..order {
                let moment: f64 = g
                    .iter()
                    .enumerate()
                    .map(|(k, v)| (k as f64 - c).powi(p as i32) * v)
                    .sum();
                assert!(moment.abs() < 1e-8, "order {order} moment {p}: {moment}");
            }
        }
    }

    #[test]
    fn unsupported_order_is_config_error() {
        assert!(matches!(
            DaubechiesFilter::new(0),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            DaubechiesFilter::new(11),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn constant_signal_has_zero_details() {
        for order in 1..=MAX_ORDER {
            let f = DaubechiesFilter::new(order).unwrap();
            let p = dwt_forward(&[3.5; 16], &f, 0).unwrap();
            for (_, block) in p.levels() {
                assert!(
                    block.iter().all(|d| d.abs() < 1e-12),
                    "order {order}: {block:?}"
                );
            }
            assert!((p.scaling()[0] - 3.5 * 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_signal_round_trip() {
        let f = DaubechiesFilter::new(4).unwrap();
        let p = dwt_forward(&[0.0; 32], &f, 2).unwrap();
        assert_eq!(p, WaveletPyramid::zeros(5, 2).unwrap());
        assert!(dwt_inverse(&p, &f).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unit_detail_gives_unit_norm() {
        let f = DaubechiesFilter::new(10).unwrap();
        let mut p = WaveletPyramid::zeros(8, 0).unwrap();
        p.level_mut(5).unwrap()[7] = 1.0;
        let y = dwt_inverse(&p, &f).unwrap();
        let norm: f64 = y.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_dyadic_rejected() {
        let f = DaubechiesFilter::new(2).unwrap();
        assert!(matches!(
            dwt_forward(&[1.0; 12], &f, 0),
            Err(Error::NonDyadic { len: 12 })
        ));
        assert!(dwt_forward(&[1.0; 8], &f, 3).is_err());
    }

    #[test]
    fn mismatched_blocks_rejected() {
        let err = WaveletPyramid::from_parts(3, 1, vec![0.0; 2], vec![vec![0.0; 2], vec![0.0; 3]]);
        assert!(matches!(err, Err(Error::Input(_))));
    }

    #[test]
    fn round_trip_random_512_order_10() {
        let f = DaubechiesFilter::new(10).unwrap();
        let y = lcg_signal(512, 7);
        let p = dwt_forward(&y, &f, 0).unwrap();
        let back = dwt_inverse(&p, &f).unwrap();
        let err = y
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10);
        let e_in: f64 = y.iter().map(|v| v * v).sum();
        assert!(((p.energy() - e_in) / e_in).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn linearity(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000, order in 1usize..=10) {
            let f = DaubechiesFilter::new(order).unwrap();
            let y1 = lcg_signal(64, seed);
            let y2 = lcg_signal(64, seed + 1);
            let mix: Vec<f64> = y1.iter().zip(&y2).map(|(u, v)| a * u + b * v).collect();
            let p1 = dwt_forward(&y1, &f, 1).unwrap();
            let p2 = dwt_forward(&y2, &f, 1).unwrap();
            let pm = dwt_forward(&mix, &f, 1).unwrap();
            for ((_, m), ((_, u), (_, v))) in pm.levels().zip(p1.levels().zip(p2.levels())) {
                for i in 0..m.len() {
                    prop_assert!((m[i] - (a * u[i] + b * v[i])).abs() < 1e-10);
                }
            }
        }
    }
}
