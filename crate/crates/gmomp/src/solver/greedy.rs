//! Greedy structured selection: extracts one feasible pattern from a
//! non-negative correlation matrix, maximizing its largest entry and
//! extending it as far as the connectivity and Lipschitz constraints allow.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::spaces::{lipschitz_bound, FeasibleParams, Pattern, PointSpace};

/// Selects a feasible pattern from the correlation matrix `c` (atoms x
/// measurements, entries elementwise non-negative).
///
/// Entries at or below `floor` are never selected, so the returned support
/// is contained in the above-floor support of `c`. When `beta` is given,
/// selection is further restricted to entries whose ratio against their
/// column maximum (`col_max`, one value per measurement) exceeds `beta`.
/// Ties in the running maximum break toward the lexicographically lowest
/// (atom, measurement) pair.
pub fn greedy_choice(
    c: &Array2<f64>,
    mspace: &PointSpace,
    pspace: &PointSpace,
    params: &FeasibleParams,
    floor: f64,
    beta: Option<f64>,
    col_max: Option<&[f64]>,
) -> Result<Pattern> {
    let (p, m) = c.dim();
    if p != pspace.len() || m != mspace.len() {
        return Err(Error::DimensionMismatch(format!(
            "correlation matrix is {p}x{m} but spaces have {} atoms and {} measurements",
            pspace.len(),
            mspace.len()
        )));
    }
    if let Some(b) = beta {
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in [0, 1], got {b}"
            )));
        }
        match col_max {
            None => {
                return Err(Error::InvalidParameter(
                    "beta requires per-column maxima".into(),
                ))
            }
            Some(cm) if cm.len() != m => {
                return Err(Error::DimensionMismatch(format!(
                    "{} column maxima for {m} measurements",
                    cm.len()
                )))
            }
            _ => {}
        }
    }
    // Measurement-major working copy: row k holds the correlations of
    // measurement k, matching the scan order below.
    let mut cm = Array2::zeros((m, p));
    for j in 0..p {
        for k in 0..m {
            cm[[k, j]] = c[[j, k]];
        }
    }
    Ok(greedy_core(&mut cm, mspace, pspace, params, floor, beta, col_max))
}

/// Core loop over a measurement-major copy of the correlation matrix, which
/// it consumes by zeroing.
pub(crate) fn greedy_core(
    cm: &mut Array2<f64>,
    mspace: &PointSpace,
    pspace: &PointSpace,
    params: &FeasibleParams,
    floor: f64,
    beta: Option<f64>,
    col_max: Option<&[f64]>,
) -> Pattern {
    let (m, p) = cm.dim();
    let sigma_unbounded = params.sigma.is_infinite();
    let mut pattern = Pattern::new();
    // Candidate measurements: all of them until the first selection anchors
    // the connectivity region.
    let mut candidate = vec![true; m];

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for k in 0..m {
            if !candidate[k] {
                continue;
            }
            let row = cm.row(k);
            let threshold = match (beta, col_max) {
                (Some(b), Some(maxima)) => floor.max(b * maxima[k]),
                _ => floor,
            };
            for (j, &v) in row.iter().enumerate() {
                if v <= threshold {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bv, bj, bk)) => v > bv || (v == bv && (j, k) < (bj, bk)),
                };
                if better {
                    best = Some((v, j, k));
                }
            }
        }
        let Some((_, atom, meas)) = best else {
            break;
        };
        let first = pattern.is_empty();
        pattern
            .insert(atom, meas)
            .expect("selected measurement column was already cleared");

        // One atom per measurement: retire the whole column.
        cm.row_mut(meas).fill(0.0);

        // Zero every entry whose addition would break the Lipschitz bound
        // against the new pair; earlier pairs already screened their own.
        for k2 in 0..m {
            let bound = lipschitz_bound(params.tau, mspace.dist(k2, meas));
            if bound.is_infinite() {
                continue;
            }
            let mut row = cm.row_mut(k2);
            for j2 in 0..p {
                if row[j2] != 0.0 && pspace.dist(j2, atom) > bound {
                    row[j2] = 0.0;
                }
            }
        }

        if !sigma_unbounded {
            if first {
                for k2 in 0..m {
                    candidate[k2] = mspace.dist(k2, meas) <= params.sigma;
                }
            } else {
                for k2 in 0..m {
                    if !candidate[k2] && mspace.dist(k2, meas) <= params.sigma {
                        candidate[k2] = true;
                    }
                }
            }
        }
    }
    pattern
}
