//! Least-squares polynomial fitting on abscissae rescaled to [-1, 1] for
//! conditioning, with coefficients mapped back to the original frame.

use crate::solver::least_squares_columns;

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let mut out = 1.0;
    for i in 0..k {
        out = out * (n - i) as f64 / (i + 1) as f64;
    }
    out
}

/// A fitted polynomial kept in both the scaled frame (for stable evaluation)
/// and the original frame (for reporting).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PolyFit {
    scaled: Vec<f64>,
    lo: f64,
    hi: f64,
    /// Ascending coefficients in the original coordinate frame.
    pub(crate) original: Vec<f64>,
    /// Root-sum-square residual over the fitted points.
    pub(crate) rss: f64,
}

impl PolyFit {
    /// Fits a polynomial of the given degree; rank-deficient systems (degree
    /// at or above the number of distinct abscissae) yield the minimum-norm
    /// coefficient vector.
    pub(crate) fn fit(xs: &[f64], ys: &[f64], degree: usize) -> Self {
        debug_assert_eq!(xs.len(), ys.len());
        debug_assert!(!xs.is_empty());
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ts: Vec<f64> = xs.iter().map(|&x| scale(x, lo, hi)).collect();
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(degree + 1);
        let mut basis = vec![1.0; xs.len()];
        cols.push(basis.clone());
        for _ in 0..degree {
            for (b, t) in basis.iter_mut().zip(&ts) {
                *b *= t;
            }
            cols.push(basis.clone());
        }
        let views: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        let scaled = least_squares_columns(&views, ys);
        let mut ss = 0.0;
        for (t, y) in ts.iter().zip(ys) {
            let mut acc = 0.0;
            for &c in scaled.iter().rev() {
                acc = acc * t + c;
            }
            let e = y - acc;
            ss += e * e;
        }
        let original = unscale_coefficients(&scaled, lo, hi);
        Self {
            scaled,
            lo,
            hi,
            original,
            rss: ss.sqrt(),
        }
    }

    /// Evaluates in the scaled frame, which stays conditioned even for
    /// abscissae far from the origin.
    pub(crate) fn eval(&self, x: f64) -> f64 {
        let t = scale(x, self.lo, self.hi);
        let mut acc = 0.0;
        for &c in self.scaled.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }
}

fn scale(x: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (2.0 * x - (lo + hi)) / (hi - lo)
    } else {
        0.0
    }
}

/// Expands p(alpha x + beta) into ascending powers of x.
fn unscale_coefficients(scaled: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    if hi <= lo {
        // Single abscissa: the fit is the constant term.
        let mut out = vec![0.0; scaled.len()];
        if let Some(c0) = scaled.first() {
            out[0] = *c0;
        }
        return out;
    }
    let alpha = 2.0 / (hi - lo);
    let beta = -(lo + hi) / (hi - lo);
    let mut out = vec![0.0; scaled.len()];
    for (n, slot) in out.iter_mut().enumerate() {
        let mut sum = 0.0;
        for (i, &c) in scaled.iter().enumerate().skip(n) {
            sum += c * binomial(i, n) * beta.powi((i - n) as i32);
        }
        *slot = sum * alpha.powi(n as i32);
    }
    out
}
