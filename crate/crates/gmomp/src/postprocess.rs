//! Structural post-processing of recovered patterns: polynomial fits of a
//! pattern viewed as samples of a measurement-to-parameter function,
//! re-rounding onto the dictionary grid (which also inpaints gaps), and
//! amplitude smoothing.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyfit::PolyFit;
use crate::solver::Solution;
use crate::spaces::{Pattern, PointSpace};

/// A fitted measurement-to-parameter polynomial with its support interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedStructure {
    /// Polynomial coefficients in ascending powers of the measurement
    /// coordinate.
    pub coefficients: Vec<f64>,
    /// Closed interval of measurement coordinates the structure covers.
    pub support_interval: (f64, f64),
    /// Root-sum-square fit error over the covered pattern points.
    pub residual: f64,
}

impl FittedStructure {
    pub fn evaluate(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coefficients.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }
}

fn require_1d(space: &PointSpace, what: &str) -> Result<()> {
    if space.dim() != 1 {
        return Err(Error::InvalidParameter(format!(
            "{what} must be 1-dimensional for pattern denoising, got dimension {}",
            space.dim()
        )));
    }
    Ok(())
}

fn pattern_samples(
    pattern: &Pattern,
    mspace: &PointSpace,
    pspace: &PointSpace,
) -> Result<Vec<(f64, f64)>> {
    if pattern.is_empty() {
        return Err(Error::Empty("pattern"));
    }
    let mut samples = Vec::with_capacity(pattern.len());
    for (atom, measurement) in pattern.pairs() {
        if measurement >= mspace.len() {
            return Err(Error::IndexOutOfRange {
                what: "measurement",
                index: measurement,
                len: mspace.len(),
            });
        }
        if atom >= pspace.len() {
            return Err(Error::IndexOutOfRange {
                what: "atom",
                index: atom,
                len: pspace.len(),
            });
        }
        samples.push((mspace.point(measurement)[0], pspace.point(atom)[0]));
    }
    Ok(samples)
}

struct IntervalFit {
    fit: PolyFit,
    interval: (f64, f64),
}

fn fit_interval(samples: &[(f64, f64)], degree: usize) -> PolyFit {
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    PolyFit::fit(&xs, &ys, degree)
}

fn best_fit(
    samples: &[(f64, f64)],
    mspace: &PointSpace,
    degree: usize,
    delta: f64,
) -> IntervalFit {
    let hull = {
        let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let hi = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    if delta == 0.0 {
        return IntervalFit {
            fit: fit_interval(samples, degree),
            interval: hull,
        };
    }
    // Candidate supports are convex intervals with endpoints on pattern
    // measurement coordinates. Dropping a pattern point costs its full
    // parameter range, covering a measurement point costs delta.
    let mut xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    let p_range = {
        let lo = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let hi = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let mut best: Option<(f64, IntervalFit)> = None;
    for a in 0..xs.len() {
        for b in a..xs.len() {
            let interval = (xs[a], xs[b]);
            let covered: Vec<(f64, f64)> = samples
                .iter()
                .copied()
                .filter(|s| s.0 >= interval.0 && s.0 <= interval.1)
                .collect();
            let dropped = samples.len() - covered.len();
            let fit = fit_interval(&covered, degree);
            let span = (0..mspace.len())
                .filter(|&k| {
                    let x = mspace.point(k)[0];
                    x >= interval.0 && x <= interval.1
                })
                .count();
            let cost = fit.rss + delta * span as f64 + p_range * dropped as f64;
            if best.as_ref().map_or(true, |(bc, _)| cost < *bc) {
                best = Some((cost, IntervalFit { fit, interval }));
            }
        }
    }
    best.unwrap().1
}

/// Least-squares polynomial fit of the pattern's parameter coordinates
/// against its measurement coordinates, both spaces 1-dimensional. For
/// `delta > 0` the support interval is optimized over pattern-endpoint
/// intervals; for `delta = 0` it is the convex hull of the pattern's
/// measurement coordinates. Degenerate fits (degree >= distinct points)
/// return the minimum-norm polynomial.
pub fn fit_pattern_polynomial(
    pattern: &Pattern,
    mspace: &PointSpace,
    pspace: &PointSpace,
    degree: usize,
    delta: f64,
) -> Result<FittedStructure> {
    require_1d(mspace, "measurement space")?;
    require_1d(pspace, "parameter space")?;
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "delta must be non-negative, got {delta}"
        )));
    }
    let samples = pattern_samples(pattern, mspace, pspace)?;
    let picked = best_fit(&samples, mspace, degree, delta);
    Ok(FittedStructure {
        coefficients: picked.fit.original.clone(),
        support_interval: picked.interval,
        residual: picked.fit.rss,
    })
}

/// Index of the parameter point closest to `value`; ties break to the lower
/// index.
pub fn round_to_parameter(value: f64, pspace: &PointSpace) -> Result<usize> {
    require_1d(pspace, "parameter space")?;
    if pspace.is_empty() {
        return Err(Error::Empty("parameter space"));
    }
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for j in 0..pspace.len() {
        let d = pspace.metric().eval(&[value], pspace.point(j));
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    Ok(best)
}

/// Replaces a pattern by the rounded evaluations of its fitted polynomial at
/// every measurement point inside the support interval: one atom per covered
/// measurement, gaps inside the interval filled in.
pub fn denoise_pattern(
    pattern: &Pattern,
    mspace: &PointSpace,
    pspace: &PointSpace,
    degree: usize,
    delta: f64,
) -> Result<Pattern> {
    require_1d(mspace, "measurement space")?;
    require_1d(pspace, "parameter space")?;
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "delta must be non-negative, got {delta}"
        )));
    }
    let samples = pattern_samples(pattern, mspace, pspace)?;
    let picked = best_fit(&samples, mspace, degree, delta);
    let mut out = Pattern::new();
    for k in 0..mspace.len() {
        let x = mspace.point(k)[0];
        if x < picked.interval.0 || x > picked.interval.1 {
            continue;
        }
        let atom = round_to_parameter(picked.fit.eval(x), pspace)?;
        out.insert(atom, k)
            .expect("one evaluation per measurement point");
    }
    Ok(out)
}

/// Replaces the amplitudes on a pattern by a fitted polynomial of the
/// measurement coordinate. Degree 0 sets every entry to the mean and works
/// for any measurement space; higher degrees require a 1-dimensional one.
pub fn denoise_amplitudes(
    x: &Array2<f64>,
    pattern: &Pattern,
    mspace: &PointSpace,
    degree: usize,
) -> Result<Array2<f64>> {
    if pattern.is_empty() {
        return Err(Error::Empty("pattern"));
    }
    for (atom, measurement) in pattern.pairs() {
        if atom >= x.nrows() || measurement >= x.ncols() {
            return Err(Error::IndexOutOfRange {
                what: "pattern entry",
                index: atom.max(measurement),
                len: x.nrows().max(x.ncols()),
            });
        }
    }
    let mut out = x.clone();
    if degree == 0 {
        let mut sum = 0.0;
        for (atom, measurement) in pattern.pairs() {
            sum += x[[atom, measurement]];
        }
        let mean = sum / pattern.len() as f64;
        for (atom, measurement) in pattern.pairs() {
            out[[atom, measurement]] = mean;
        }
        return Ok(out);
    }
    require_1d(mspace, "measurement space")?;
    if pattern.measurements().any(|m| m >= mspace.len()) {
        return Err(Error::IndexOutOfRange {
            what: "measurement",
            index: pattern.measurements().max().unwrap(),
            len: mspace.len(),
        });
    }
    let xs: Vec<f64> = pattern
        .measurements()
        .map(|m| mspace.point(m)[0])
        .collect();
    let ys: Vec<f64> = pattern.pairs().map(|(a, m)| x[[a, m]]).collect();
    let fit = PolyFit::fit(&xs, &ys, degree);
    for ((atom, measurement), xv) in pattern.pairs().zip(&xs) {
        out[[atom, measurement]] = fit.eval(*xv);
    }
    Ok(out)
}

/// A solution after pattern denoising: the re-rounded patterns, the fitted
/// structures behind them, and the rebuilt coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoisedSolution {
    pub patterns: Vec<Pattern>,
    pub structures: Vec<FittedStructure>,
    pub x: Array2<f64>,
}

/// Denoises every iteration pattern of a solution and rebuilds the
/// coefficient matrix on the new supports.
///
/// Amplitudes follow their measurement column; entries inpainted at
/// measurements the solver never selected take either the evaluation of an
/// `amplitude_degree` polynomial fitted to the solved amplitudes, or the
/// pattern's mean amplitude when no degree is given. Patterns are processed
/// in iteration order, later ones overwriting overlaps.
pub fn denoise_solution(
    solution: &Solution,
    mspace: &PointSpace,
    pspace: &PointSpace,
    pattern_degree: usize,
    delta: f64,
    amplitude_degree: Option<usize>,
) -> Result<DenoisedSolution> {
    let mut patterns = Vec::with_capacity(solution.patterns.len());
    let mut structures = Vec::with_capacity(solution.patterns.len());
    let mut x = Array2::zeros(solution.x.raw_dim());
    for pattern in &solution.patterns {
        if pattern.is_empty() {
            continue;
        }
        let samples = pattern_samples(pattern, mspace, pspace)?;
        require_1d(mspace, "measurement space")?;
        let picked = best_fit(&samples, mspace, pattern_degree, delta);
        let mut denoised = Pattern::new();
        for k in 0..mspace.len() {
            let mx = mspace.point(k)[0];
            if mx < picked.interval.0 || mx > picked.interval.1 {
                continue;
            }
            let atom = round_to_parameter(picked.fit.eval(mx), pspace)?;
            denoised
                .insert(atom, k)
                .expect("one evaluation per measurement point");
        }

        let solved_x: Vec<f64> = pattern
            .measurements()
            .map(|m| mspace.point(m)[0])
            .collect();
        let solved_amp: Vec<f64> = pattern
            .pairs()
            .map(|(a, m)| solution.x[[a, m]])
            .collect();
        let amplitude_fit =
            amplitude_degree.map(|g| PolyFit::fit(&solved_x, &solved_amp, g));
        let mean = solved_amp.iter().sum::<f64>() / solved_amp.len() as f64;
        for (atom, k) in denoised.pairs() {
            let value = match (&amplitude_fit, pattern.atom_for(k)) {
                (Some(fit), _) => fit.eval(mspace.point(k)[0]),
                (None, Some(original_atom)) => solution.x[[original_atom, k]],
                (None, None) => mean,
            };
            x[[atom, k]] = value;
        }
        structures.push(FittedStructure {
            coefficients: picked.fit.original.clone(),
            support_interval: picked.interval,
            residual: picked.fit.rss,
        });
        patterns.push(denoised);
    }
    Ok(DenoisedSolution {
        patterns,
        structures,
        x,
    })
}
