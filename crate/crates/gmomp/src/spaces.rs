//! Metric parameter/measurement spaces and the geometric feasibility
//! predicates that define the structured selection sets.
//!
//! A sparsity pattern is a set of (atom, measurement) index pairs with at
//! most one atom per measurement. A pattern is feasible for parameters
//! (sigma, tau) when the chosen measurement points form a connected graph at
//! radius sigma and the atom parameters vary tau-Lipschitz with respect to
//! the measurement points.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in kilometres used by the geodetic metric.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Supported metrics for parameter and measurement spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricKind {
    /// |a - b| on scalar coordinates.
    #[serde(rename = "absolute-1d")]
    Absolute1d,
    /// Euclidean norm of the coordinate difference.
    #[serde(rename = "euclidean-nd")]
    EuclideanNd,
    /// Max-norm of the coordinate difference.
    #[serde(rename = "chebyshev-nd")]
    ChebyshevNd,
    /// Great-circle distance in km between (latitude, longitude) degrees.
    #[serde(rename = "haversine-geodetic-km")]
    HaversineGeodeticKm,
}

impl MetricKind {
    fn dimension_ok(self, dim: usize) -> bool {
        match self {
            MetricKind::Absolute1d => dim == 1,
            MetricKind::EuclideanNd | MetricKind::ChebyshevNd => dim >= 1,
            MetricKind::HaversineGeodeticKm => dim == 2,
        }
    }

    /// Distance between two coordinate vectors of the same dimension.
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            MetricKind::Absolute1d => (a[0] - b[0]).abs(),
            MetricKind::EuclideanNd => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            MetricKind::ChebyshevNd => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
            MetricKind::HaversineGeodeticKm => {
                if a == b {
                    return 0.0;
                }
                let lat1 = a[0].to_radians();
                let lat2 = b[0].to_radians();
                let dlat = lat2 - lat1;
                let dlon = (b[1] - a[1]).to_radians();
                let h = (dlat / 2.0).sin().powi(2)
                    + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
                2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
            }
        }
    }
}

/// An ordered list of points in a metric space.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSpace {
    coords: Vec<f64>,
    dim: usize,
    metric: MetricKind,
}

impl PointSpace {
    pub fn new(points: Vec<Vec<f64>>, metric: MetricKind) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(1);
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "point {i} has dimension {} but point 0 has {dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(coords, dim, metric)
    }

    /// Builds a space from row-major coordinates, `dim` values per point.
    pub fn from_flat(coords: Vec<f64>, dim: usize, metric: MetricKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "point dimension must be at least 1".into(),
            ));
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if !metric.dimension_ok(dim) {
            return Err(Error::InvalidParameter(format!(
                "metric {metric:?} does not support dimension {dim}"
            )));
        }
        if let Some(bad) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coordinate {bad} is not finite"
            )));
        }
        Ok(Self {
            coords,
            dim,
            metric,
        })
    }

    /// Points 0, 1, ..., n-1 on the line with the absolute metric.
    pub fn indexed(n: usize) -> Self {
        Self {
            coords: (0..n).map(|i| i as f64).collect(),
            dim: 1,
            metric: MetricKind::Absolute1d,
        }
    }

    /// One-dimensional space over explicit scalar coordinates.
    pub fn line(values: Vec<f64>) -> Result<Self> {
        Self::from_flat(values, 1, MetricKind::Absolute1d)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Metric distance between the `i`-th and `j`-th point.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        let len = self.len();
        for idx in [i, j] {
            if idx >= len {
                return Err(Error::IndexOutOfRange {
                    what: "point",
                    index: idx,
                    len,
                });
            }
        }
        Ok(self.dist(i, j))
    }

    pub(crate) fn dist(&self, i: usize, j: usize) -> f64 {
        self.metric.eval(self.point(i), self.point(j))
    }

    /// Smallest distance over all pairs of distinct points, None for fewer
    /// than two points.
    pub fn min_pairwise_distance(&self) -> Option<f64> {
        let n = self.len();
        if n < 2 {
            return None;
        }
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.min(self.dist(i, j));
            }
        }
        Some(best)
    }
}

/// Connectivity radius sigma and Lipschitz constant tau selecting the
/// feasible patterns F(sigma, tau). Both admit infinity; `tau * 0` is 0 even
/// for infinite tau.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleParams {
    #[serde(with = "crate::io::extended_real")]
    pub sigma: f64,
    #[serde(with = "crate::io::extended_real")]
    pub tau: f64,
}

impl FeasibleParams {
    pub fn new(sigma: f64, tau: f64) -> Result<Self> {
        for (name, v) in [("sigma", sigma), ("tau", tau)] {
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(Self { sigma, tau })
    }

    /// (inf, inf): one independent selection per measurement column.
    pub fn per_column() -> Self {
        Self {
            sigma: f64::INFINITY,
            tau: f64::INFINITY,
        }
    }

    /// (0, inf): a single entry per selection.
    pub fn single_entry() -> Self {
        Self {
            sigma: 0.0,
            tau: f64::INFINITY,
        }
    }

    /// (inf, 0): one shared atom across all measurements.
    pub fn row_sparse() -> Self {
        Self {
            sigma: f64::INFINITY,
            tau: 0.0,
        }
    }

    pub(crate) fn lipschitz_bound(&self, d_psi: f64) -> f64 {
        lipschitz_bound(self.tau, d_psi)
    }
}

/// tau * d with the convention inf * 0 = 0.
pub(crate) fn lipschitz_bound(tau: f64, d_psi: f64) -> f64 {
    if tau.is_infinite() {
        if d_psi == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        tau * d_psi
    }
}

/// A set of (atom, measurement) index pairs with at most one atom per
/// measurement.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Pattern {
    atom_by_measurement: BTreeMap<usize, usize>,
}

impl Pattern {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a pattern from (atom, measurement) pairs. Fails if two pairs
    /// assign different atoms to the same measurement.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut pattern = Self::new();
        for (atom, measurement) in pairs {
            pattern.insert(atom, measurement)?;
        }
        Ok(pattern)
    }

    pub fn insert(&mut self, atom: usize, measurement: usize) -> Result<()> {
        match self.atom_by_measurement.get(&measurement) {
            Some(&existing) if existing != atom => Err(Error::PatternConflict { measurement }),
            _ => {
                self.atom_by_measurement.insert(measurement, atom);
                Ok(())
            }
        }
    }

    pub fn len(&self) -> usize {
        self.atom_by_measurement.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atom_by_measurement.is_empty()
    }

    /// (atom, measurement) pairs ordered by measurement index.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.atom_by_measurement.iter().map(|(&m, &a)| (a, m))
    }

    pub fn measurements(&self) -> impl Iterator<Item = usize> + '_ {
        self.atom_by_measurement.keys().copied()
    }

    pub fn atom_for(&self, measurement: usize) -> Option<usize> {
        self.atom_by_measurement.get(&measurement).copied()
    }

    pub fn contains(&self, atom: usize, measurement: usize) -> bool {
        self.atom_for(measurement) == Some(atom)
    }

    fn check_measurements(&self, mspace: &PointSpace) -> Result<()> {
        let len = mspace.len();
        for (&m, _) in &self.atom_by_measurement {
            if m >= len {
                return Err(Error::IndexOutOfRange {
                    what: "measurement",
                    index: m,
                    len,
                });
            }
        }
        Ok(())
    }

    fn check_atoms(&self, pspace: &PointSpace) -> Result<()> {
        let len = pspace.len();
        for (_, &a) in &self.atom_by_measurement {
            if a >= len {
                return Err(Error::IndexOutOfRange {
                    what: "atom",
                    index: a,
                    len,
                });
            }
        }
        Ok(())
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, x: usize, y: usize) {
        let mut a = self.find(x);
        let mut b = self.find(y);
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

fn check_radius(name: &'static str, v: f64) -> Result<()> {
    if v.is_nan() || v < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "{name} must be non-negative, got {v}"
        )));
    }
    Ok(())
}

/// True when the graph on the pattern's measurement points, with edges
/// between points at distance <= sigma, is connected. Empty and singleton
/// patterns count as connected.
pub fn is_connected(pattern: &Pattern, mspace: &PointSpace, sigma: f64) -> Result<bool> {
    check_radius("sigma", sigma)?;
    pattern.check_measurements(mspace)?;
    let points: Vec<usize> = pattern.measurements().collect();
    if points.len() <= 1 || sigma.is_infinite() {
        return Ok(true);
    }
    let mut uf = UnionFind::new(points.len());
    for a in 0..points.len() {
        for b in (a + 1)..points.len() {
            if mspace.dist(points[a], points[b]) <= sigma {
                uf.union(a, b);
            }
        }
    }
    let root = uf.find(0);
    Ok((1..points.len()).all(|i| uf.find(i) == root))
}

/// True when every pair of pattern entries satisfies
/// d_param(p_j, p_j') <= tau * d_meas(m_k, m_k'), with inf * 0 = 0.
pub fn satisfies_lipschitz(
    pattern: &Pattern,
    mspace: &PointSpace,
    pspace: &PointSpace,
    tau: f64,
) -> Result<bool> {
    check_radius("tau", tau)?;
    pattern.check_measurements(mspace)?;
    pattern.check_atoms(pspace)?;
    let pairs: Vec<(usize, usize)> = pattern.pairs().collect();
    for a in 0..pairs.len() {
        for b in (a + 1)..pairs.len() {
            let (atom_a, meas_a) = pairs[a];
            let (atom_b, meas_b) = pairs[b];
            let bound = lipschitz_bound(tau, mspace.dist(meas_a, meas_b));
            if pspace.dist(atom_a, atom_b) > bound {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Conjunction of the connectivity and Lipschitz conditions.
pub fn is_feasible(
    pattern: &Pattern,
    mspace: &PointSpace,
    pspace: &PointSpace,
    params: &FeasibleParams,
) -> Result<bool> {
    Ok(is_connected(pattern, mspace, params.sigma)?
        && satisfies_lipschitz(pattern, mspace, pspace, params.tau)?)
}

/// True when some cross pair of the two patterns lies within sigma in the
/// measurement space and within the Lipschitz bound in the parameter space.
pub fn are_intersecting(
    a: &Pattern,
    b: &Pattern,
    mspace: &PointSpace,
    pspace: &PointSpace,
    params: &FeasibleParams,
) -> Result<bool> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("pattern"));
    }
    for pattern in [a, b] {
        pattern.check_measurements(mspace)?;
        pattern.check_atoms(pspace)?;
    }
    for (atom_a, meas_a) in a.pairs() {
        for (atom_b, meas_b) in b.pairs() {
            let d_psi = mspace.dist(meas_a, meas_b);
            if d_psi <= params.sigma
                && pspace.dist(atom_a, atom_b) <= params.lipschitz_bound(d_psi)
            {
                return Ok(true);
            }
        }
    }
    Ok(false)
}
