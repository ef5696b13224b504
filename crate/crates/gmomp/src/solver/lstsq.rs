//! Dense least squares on small column subsets: Householder QR with a
//! minimum-norm fallback via a symmetric Jacobi eigendecomposition of the
//! Gram matrix.
//!
//! All arithmetic is written with a fixed operation order so repeated solves
//! over identical inputs are bit-identical, which the solver equivalence
//! guarantees rely on.

use ndarray::Array2;

/// Dot product with four independent accumulators. The fixed unroll keeps the
/// result deterministic while avoiding the latency chain of a naive sum.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / 4;
    let mut acc = [0.0f64; 4];
    for i in 0..chunks {
        let o = 4 * i;
        acc[0] += a[o] * b[o];
        acc[1] += a[o + 1] * b[o + 1];
        acc[2] += a[o + 2] * b[o + 2];
        acc[3] += a[o + 3] * b[o + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y -= alpha * x
pub(crate) fn axpy_sub(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi -= alpha * xi;
    }
}

/// Solves min ||b - A y||_2 for each right-hand side, where column `c` of A
/// is the slice `cols[c]` (all of equal length). Returns one coefficient
/// vector per right-hand side. Falls back to the minimum-norm solution when
/// A is rank-deficient.
pub(crate) fn least_squares_multi(cols: &[&[f64]], rhs: &[&[f64]]) -> Vec<Vec<f64>> {
    let k = cols.len();
    if k == 0 {
        return rhs.iter().map(|_| Vec::new()).collect();
    }
    let t = cols[0].len();

    // Factor A = QR in a k x t buffer holding A transposed, so each matrix
    // column is a contiguous row slice.
    let mut at: Vec<f64> = Vec::with_capacity(k * t);
    for c in cols {
        debug_assert_eq!(c.len(), t);
        at.extend_from_slice(c);
    }
    let steps = k.min(t);
    let mut beta = vec![0.0f64; steps];
    for c in 0..steps {
        let (head, tail) = at.split_at_mut((c + 1) * t);
        let col = &mut head[c * t + c..];
        let sigma = norm2(col);
        if sigma == 0.0 {
            beta[c] = 0.0;
            continue;
        }
        // Householder vector with v[0] = 1 stored implicitly; r_cc in place.
        let alpha = if col[0] >= 0.0 { -sigma } else { sigma };
        let v0 = col[0] - alpha;
        beta[c] = -v0 / alpha;
        for x in col[1..].iter_mut() {
            *x /= v0;
        }
        col[0] = alpha;
        let vlen = col.len() - 1;
        let v = &col[1..];
        for c2 in (c + 1)..k {
            let row = &mut tail[(c2 - c - 1) * t + c..];
            let w = beta[c] * (row[0] + dot(&row[1..1 + vlen], v));
            row[0] -= w;
            axpy_sub(&mut row[1..1 + vlen], w, v);
        }
    }

    // Rank check on the R diagonal.
    let mut dmax = 0.0f64;
    for c in 0..steps {
        dmax = dmax.max(at[c * t + c].abs());
    }
    let tol = dmax * (t.max(k) as f64) * f64::EPSILON;
    let full_rank = k <= t && dmax > 0.0 && (0..steps).all(|c| at[c * t + c].abs() > tol);

    if full_rank {
        let mut out = Vec::with_capacity(rhs.len());
        for b in rhs {
            debug_assert_eq!(b.len(), t);
            let mut qtb = b.to_vec();
            for c in 0..steps {
                if beta[c] == 0.0 {
                    continue;
                }
                let v = &at[c * t + c + 1..(c + 1) * t];
                let w = beta[c] * (qtb[c] + dot(&qtb[c + 1..], v));
                qtb[c] -= w;
                axpy_sub(&mut qtb[c + 1..], w, v);
            }
            let mut y = vec![0.0f64; k];
            for c in (0..k).rev() {
                let mut s = qtb[c];
                for c2 in (c + 1)..k {
                    s -= at[c2 * t + c] * y[c2];
                }
                y[c] = s / at[c * t + c];
            }
            out.push(y);
        }
        return out;
    }

    // Minimum-norm route: y = V pinv(L) V^T A^T b with A^T A = V L V^T.
    let mut gram = Array2::zeros((k, k));
    for i in 0..k {
        for j in i..k {
            let g = dot(cols[i], cols[j]);
            gram[[i, j]] = g;
            gram[[j, i]] = g;
        }
    }
    let (vals, vecs) = jacobi_eigh(gram);
    let vmax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // Eigenvalues of the Gram carry O(eps * vmax) noise, so a zero mode of a
    // singular system surfaces around 1e-16 * vmax; cut well above that.
    let cutoff = vmax * 1e-12;
    let mut out = Vec::with_capacity(rhs.len());
    for b in rhs {
        let atb: Vec<f64> = cols.iter().map(|c| dot(c, b)).collect();
        let mut z = vec![0.0f64; k];
        for i in 0..k {
            let vi = vals[i];
            if vi.abs() > cutoff {
                let mut s = 0.0;
                for j in 0..k {
                    s += vecs[[j, i]] * atb[j];
                }
                z[i] = s / vi;
            }
        }
        let mut y = vec![0.0f64; k];
        for j in 0..k {
            let mut s = 0.0;
            for i in 0..k {
                s += vecs[[j, i]] * z[i];
            }
            y[j] = s;
        }
        out.push(y);
    }
    out
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvalues and the matrix of eigenvectors (columns).
fn jacobi_eigh(mut a: Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut v = Array2::eye(n);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[[p, q]] * a[[p, q]];
            }
        }
        if off.sqrt() <= 1e-300 || off <= f64::EPSILON * f64::EPSILON {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let tt = {
                    let s = theta.signum();
                    s / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + tt * tt).sqrt();
                let s = tt * c;
                for i in 0..n {
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = c * aip - s * aiq;
                    a[[i, q]] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[[p, i]];
                    let aqi = a[[q, i]];
                    a[[p, i]] = c * api - s * aqi;
                    a[[q, i]] = s * api + c * aqi;
                }
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
    }
    let vals = (0..n).map(|i| a[[i, i]]).collect();
    (vals, v)
}
