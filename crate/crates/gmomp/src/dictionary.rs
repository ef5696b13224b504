//! Normalized dictionaries with attached parameter spaces: Gaussian and
//! Gabor convolution families plus cardinal B-spline families.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{MetricKind, PointSpace};

/// Entries this far below the Gaussian peak (in standard deviations) are
/// written as exact zeros.
const GAUSSIAN_TAIL_CUT: f64 = 8.0;

/// A real atom matrix with unit-norm columns and one parameter point per
/// column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: Array2<f64>,
    pspace: PointSpace,
}

impl Dictionary {
    /// Normalizes the columns of `atoms` and attaches the parameter space.
    /// Zero columns and point-count mismatches are rejected.
    pub fn new(atoms: Array2<f64>, pspace: PointSpace) -> Result<Self> {
        if atoms.nrows() == 0 || atoms.ncols() == 0 {
            return Err(Error::Empty("dictionary"));
        }
        if pspace.len() != atoms.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameter points for {} atoms",
                pspace.len(),
                atoms.ncols()
            )));
        }
        let atoms = normalize_columns(&atoms)?;
        Ok(Self { atoms, pspace })
    }

    pub fn atoms(&self) -> &Array2<f64> {
        &self.atoms
    }

    pub fn pspace(&self) -> &PointSpace {
        &self.pspace
    }

    /// Number of samples (rows) per atom.
    pub fn n_samples(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.ncols()
    }

    /// Gram matrix of the normalized atoms.
    pub fn gram(&self) -> Array2<f64> {
        self.atoms.t().dot(&self.atoms)
    }

    /// Atoms as rows (the transpose), the layout the solvers iterate over.
    pub(crate) fn atom_rows(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_atoms(), self.n_samples()));
        for (j, col) in self.atoms.columns().into_iter().enumerate() {
            for (t, v) in col.iter().enumerate() {
                out[[j, t]] = *v;
            }
        }
        out
    }
}

/// Serializable recipe for one of the built-in dictionary families, so runs
/// are reproducible from configuration alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DictionaryBuilder {
    Gaussian { t: usize, std_dev: f64 },
    Gabor { t: usize, theta: f64, phi: f64, psi: f64, dt: f64 },
    Bspline { t: usize, max_order: usize },
}

impl DictionaryBuilder {
    pub fn build(&self) -> Result<Dictionary> {
        match *self {
            DictionaryBuilder::Gaussian { t, std_dev } => gaussian_conv_dictionary(t, std_dev),
            DictionaryBuilder::Gabor {
                t,
                theta,
                phi,
                psi,
                dt,
            } => gabor_conv_dictionary(t, theta, phi, psi, dt),
            DictionaryBuilder::Bspline { t, max_order } => bspline_dictionary(t, max_order),
        }
    }
}

/// Divides every column by its Euclidean norm. Fails on an all-zero column,
/// naming its index.
pub fn normalize_columns(matrix: &Array2<f64>) -> Result<Array2<f64>> {
    let mut out = matrix.clone();
    for (index, mut col) in out.columns_mut().into_iter().enumerate() {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroColumn { index });
        }
        col.mapv_inplace(|v| v / norm);
    }
    Ok(out)
}

/// Convolution dictionary of a sampled Gaussian kernel: column `j` is
/// exp(-(t-j)^2 / (2 std_dev^2)) over the sample grid, truncated at the
/// boundaries and normalized. Parameter point of column `j` is `j`.
pub fn gaussian_conv_dictionary(t_len: usize, std_dev: f64) -> Result<Dictionary> {
    if t_len == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    if !(std_dev > 0.0) || !std_dev.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "std_dev must be positive, got {std_dev}"
        )));
    }
    let cut = GAUSSIAN_TAIL_CUT * std_dev;
    let denom = 2.0 * std_dev * std_dev;
    let mut atoms = Array2::zeros((t_len, t_len));
    for j in 0..t_len {
        for t in 0..t_len {
            let d = t as f64 - j as f64;
            if d.abs() <= cut {
                atoms[[t, j]] = (-d * d / denom).exp();
            }
        }
    }
    Dictionary::new(atoms, PointSpace::indexed(t_len))
}

/// The Gabor impulse exp(-theta t^2) cos(phi t + psi).
fn gabor_impulse(t: f64, theta: f64, phi: f64, psi: f64) -> f64 {
    (-theta * t * t).exp() * (phi * t + psi).cos()
}

/// Convolution dictionary of a Gabor impulse sampled with spacing `dt`:
/// column `j` is g(t - t_j) on the grid t_i = dt * i, normalized. Parameter
/// point of column `j` is dt * j.
pub fn gabor_conv_dictionary(
    t_len: usize,
    theta: f64,
    phi: f64,
    psi: f64,
    dt: f64,
) -> Result<Dictionary> {
    if t_len == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    for (name, v) in [("theta", theta), ("dt", dt)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    for (name, v) in [("phi", phi), ("psi", psi)] {
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be finite")));
        }
    }
    let mut atoms = Array2::zeros((t_len, t_len));
    for j in 0..t_len {
        for i in 0..t_len {
            atoms[[i, j]] = gabor_impulse(dt * (i as f64 - j as f64), theta, phi, psi);
        }
    }
    let pspace = PointSpace::line((0..t_len).map(|j| dt * j as f64).collect())?;
    Dictionary::new(atoms, pspace)
}

/// Centered cardinal B-spline of order `n` (degree n-1) at `t`, evaluated by
/// the Cox-de Boor recursion on the uniform knot grid k - n/2, k = 0..=n.
/// Order 1 is the indicator of [-0.5, 0.5); higher orders integrate the
/// previous one over a unit window, vanishing outside |t| < n/2.
pub fn bspline_eval(order: usize, t: f64) -> Result<f64> {
    if order < 1 {
        return Err(Error::InvalidParameter("order must be >= 1".into()));
    }
    let half = order as f64 / 2.0;
    if order == 1 {
        return Ok(if (-0.5..0.5).contains(&t) { 1.0 } else { 0.0 });
    }
    if t < -half || t >= half {
        return Ok(0.0);
    }
    let knot = |k: usize| k as f64 - half;
    let mut vals: Vec<f64> = (0..order)
        .map(|i| {
            if t >= knot(i) && t < knot(i + 1) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    for degree in 1..order {
        let w = degree as f64;
        for i in 0..(order - degree) {
            vals[i] = (t - knot(i)) / w * vals[i] + (knot(i + degree + 1) - t) / w * vals[i + 1];
        }
    }
    Ok(vals[0])
}

/// Dictionary of all integer shifts of the cardinal B-splines of orders
/// 1..=max_order on a length-`t_len` grid, truncated at the boundaries and
/// normalized. The parameter point of a column is (shift, order) under the
/// Chebyshev metric.
pub fn bspline_dictionary(t_len: usize, max_order: usize) -> Result<Dictionary> {
    if t_len == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    if max_order < 1 {
        return Err(Error::InvalidParameter("max_order must be >= 1".into()));
    }
    let mut atoms = Array2::zeros((t_len, t_len * max_order));
    let mut points = Vec::with_capacity(t_len * max_order);
    for order in 1..=max_order {
        let half = order as f64 / 2.0;
        for shift in 0..t_len {
            let col = (order - 1) * t_len + shift;
            points.push(vec![shift as f64, order as f64]);
            // Support is |t - shift| < order/2.
            let lo = (shift as f64 - half).ceil().max(0.0) as usize;
            let hi = ((shift as f64 + half).floor() as usize).min(t_len - 1);
            for t in lo..=hi {
                atoms[[t, col]] = bspline_eval(order, t as f64 - shift as f64)?;
            }
        }
    }
    let pspace = PointSpace::new(points, MetricKind::ChebyshevNd)?;
    Dictionary::new(atoms, pspace)
}
