//! Recovery-condition machinery: the Babel function and the exact-recovery
//! and relative-threshold conditions built on it, parameter adaptations for
//! pattern noise, and the graph-coloring instance generator used to probe
//! the hardness of finite-norm pattern selection.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::spaces::{FeasibleParams, MetricKind, PointSpace};

/// Babel values mu_1(0..=l): mu_1(l) is the largest sum of the l biggest
/// absolute Gram entries any single atom accumulates against the others.
pub fn babel_profile(d: &Dictionary, l: usize) -> Result<Vec<f64>> {
    let p = d.n_atoms();
    if l >= p {
        return Err(Error::IndexOutOfRange {
            what: "babel order",
            index: l,
            len: p,
        });
    }
    let gram = d.gram();
    let mut profile = vec![0.0f64; l + 1];
    for omega in 0..p {
        let mut others: Vec<f64> = (0..p)
            .filter(|&j| j != omega)
            .map(|j| gram[[j, omega]].abs())
            .collect();
        others.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
        let mut running = 0.0;
        for (i, slot) in profile.iter_mut().enumerate().skip(1) {
            running += others[i - 1];
            if running > *slot {
                *slot = running;
            }
        }
    }
    Ok(profile)
}

/// mu_1(l) alone.
pub fn babel(d: &Dictionary, l: usize) -> Result<f64> {
    Ok(*babel_profile(d, l)?.last().unwrap())
}

/// The strict inequality mu_1(L) < lambda (1 - mu_1(L-1)) under which a
/// weakness-lambda pursuit recovers an L-sparse solution exactly.
pub fn exact_recovery_condition(d: &Dictionary, l: usize, lambda: f64) -> Result<bool> {
    check_support_size(d, l)?;
    check_lambda(lambda)?;
    let profile = babel_profile(d, l)?;
    Ok(profile[l] < lambda * (1.0 - profile[l - 1]))
}

/// beta = mu_1(L) / (1 - mu_1(L-1)); the relative-correlation threshold
/// above which selections stay inside the true support.
pub fn beta_threshold(d: &Dictionary, l: usize) -> Result<f64> {
    check_support_size(d, l)?;
    let profile = babel_profile(d, l)?;
    let denom = 1.0 - profile[l - 1];
    if denom <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "babel({}) = {} >= 1, threshold undefined",
            l - 1,
            profile[l - 1]
        )));
    }
    Ok(profile[l] / denom)
}

fn check_support_size(d: &Dictionary, l: usize) -> Result<()> {
    if l < 1 || l >= d.n_atoms() {
        return Err(Error::IndexOutOfRange {
            what: "support size",
            index: l,
            len: d.n_atoms(),
        });
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in (0, 1], got {lambda}"
        )));
    }
    Ok(())
}

/// Summary of the recovery conditions for a dictionary at support size L.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    /// mu_1(0..=L).
    pub babel_values: Vec<f64>,
    pub lambda: f64,
    pub beta: f64,
    /// mu_1(L) < lambda (1 - mu_1(L-1)).
    pub condition_exact: bool,
    /// beta <= 1.
    pub condition_beta: bool,
}

pub fn recovery_report(d: &Dictionary, l: usize, lambda: f64) -> Result<RecoveryReport> {
    check_support_size(d, l)?;
    check_lambda(lambda)?;
    let babel_values = babel_profile(d, l)?;
    let beta = beta_threshold(d, l)?;
    Ok(RecoveryReport {
        condition_exact: babel_values[l] < lambda * (1.0 - babel_values[l - 1]),
        condition_beta: beta <= 1.0,
        babel_values,
        lambda,
        beta,
    })
}

/// Lipschitz parameters adapted to uniform pattern noise of amplitude
/// `eps_u` over measurements at least `min_measurement_gap` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseAdaptedTau {
    /// Lipschitz constant the noised patterns satisfy: tau + 2 eps_u / m.
    pub tau_hat: f64,
    /// Separation the clean patterns must have for the noised ones to stay
    /// non-intersecting: tau + 4 eps_u / m.
    pub tau_separation: f64,
}

pub fn uniform_noise_tau(tau: f64, eps_u: f64, min_measurement_gap: f64) -> Result<NoiseAdaptedTau> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tau must be non-negative, got {tau}"
        )));
    }
    if eps_u.is_nan() || eps_u < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "eps_u must be non-negative, got {eps_u}"
        )));
    }
    if !(min_measurement_gap > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "minimum measurement distance must be positive, got {min_measurement_gap}"
        )));
    }
    Ok(NoiseAdaptedTau {
        tau_hat: tau + 2.0 * eps_u / min_measurement_gap,
        tau_separation: tau + 4.0 * eps_u / min_measurement_gap,
    })
}

/// Lower bound (1 - eps_b^k)^(M - k + 1) on the probability that a
/// length-`m` connected pattern stays connected at radius k*sigma after
/// independent deletions with probability `eps_b`.
pub fn bernoulli_connectivity_bound(eps_b: f64, k: usize, m: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps_b) {
        return Err(Error::InvalidParameter(format!(
            "eps_b must lie in [0, 1], got {eps_b}"
        )));
    }
    if k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if m < k {
        return Err(Error::InvalidParameter(format!(
            "pattern length {m} shorter than run length {k}"
        )));
    }
    Ok((1.0 - eps_b.powi(k as i32)).powi((m - k + 1) as i32))
}

/// Empirical counterpart of the bound: fraction of trials in which a
/// unit-spaced path of `m` points, thinned by independent deletions with
/// probability `eps_b`, stays connected at radius `k`. Trials draw from
/// per-trial generators seeded `base_seed + trial`, so the result does not
/// depend on scheduling.
pub fn simulate_path_connectivity(
    eps_b: f64,
    k: usize,
    m: usize,
    trials: usize,
    base_seed: u64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps_b) {
        return Err(Error::InvalidParameter(format!(
            "eps_b must lie in [0, 1], got {eps_b}"
        )));
    }
    if k < 1 || m < 1 || trials < 1 {
        return Err(Error::InvalidParameter(
            "k, m and trials must all be >= 1".into(),
        ));
    }
    let connected: u64 = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(trial));
            let mut last_kept: Option<usize> = None;
            let mut ok = true;
            for i in 0..m {
                let deleted = rng.random::<f64>() < eps_b;
                if !deleted {
                    if let Some(prev) = last_kept {
                        if i - prev > k {
                            ok = false;
                        }
                    }
                    last_kept = Some(i);
                }
            }
            ok as u64
        })
        .sum();
    Ok(connected as f64 / trials as f64)
}

/// A finite simple graph given by an edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut normalized: Vec<(usize, usize)> = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidParameter(format!("self loop at vertex {u}")));
            }
            for w in [u, v] {
                if w >= n_vertices {
                    return Err(Error::IndexOutOfRange {
                        what: "vertex",
                        index: w,
                        len: n_vertices,
                    });
                }
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        normalized.dedup();
        Ok(Self {
            n_vertices,
            edges: normalized,
        })
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        Self {
            n_vertices: n,
            edges,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.n_vertices];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    /// Checks a color assignment (one color per vertex) for properness.
    pub fn is_proper_coloring(&self, colors: &[usize]) -> bool {
        colors.len() == self.n_vertices
            && self.edges.iter().all(|&(u, v)| colors[u] != colors[v])
    }
}

/// The feasibility instance a coloring problem reduces to: measurement
/// points are vertex unit vectors, parameter points encode (color, vertex)
/// through signed incidence vectors, and the correlation matrix rewards
/// assigning any color to the right vertex.
#[derive(Debug, Clone)]
pub struct ColoringReduction {
    pub mspace: PointSpace,
    pub pspace: PointSpace,
    /// Identity dictionary over the (color, vertex) atoms.
    pub dictionary: Dictionary,
    /// Correlation target: entry ((j,k), i) is 1 exactly when k = i.
    pub correlation: Array2<f64>,
    /// sigma = inf, tau = sqrt(n) with n the padded vertex degree.
    pub params: FeasibleParams,
    /// (color, vertex) label of each atom, flat index color * M + vertex.
    pub atom_labels: Vec<(usize, usize)>,
    pub padded_degree: usize,
}

/// Builds the reduction instance for `colors` colors. Every vertex is padded
/// with dangling edges to the same degree (at least one, so parameter
/// vectors are nonempty).
pub fn coloring_reduction(graph: &Graph, colors: usize) -> Result<ColoringReduction> {
    if colors < 1 {
        return Err(Error::InvalidParameter("colors must be >= 1".into()));
    }
    let m = graph.n_vertices();
    if m == 0 {
        return Err(Error::Empty("graph"));
    }
    let n = graph.max_degree().max(1);

    // Edge list padded with dangling edges (one incident vertex only).
    let mut incidence: Vec<(usize, Option<usize>)> = graph
        .edges()
        .iter()
        .map(|&(u, v)| (u, Some(v)))
        .collect();
    let mut degree = vec![0usize; m];
    for &(u, v) in graph.edges() {
        degree[u] += 1;
        degree[v] += 1;
    }
    for (v, &d) in degree.iter().enumerate() {
        for _ in d..n {
            incidence.push((v, None));
        }
    }
    let n_edges = incidence.len();

    // Signed incidence vector of each vertex; exactly n-sparse after padding.
    let mut chi = Array2::zeros((m, n_edges));
    for (e, &(start, end)) in incidence.iter().enumerate() {
        chi[[start, e]] = 1.0;
        if let Some(end) = end {
            chi[[end, e]] = -1.0;
        }
    }

    let mspace = {
        let mut points = vec![vec![0.0; m]; m];
        for (i, point) in points.iter_mut().enumerate() {
            point[i] = 1.0;
        }
        PointSpace::new(points, MetricKind::EuclideanNd)?
    };

    let mut atom_labels = Vec::with_capacity(colors * m);
    let mut pcoords = Vec::with_capacity(colors * m * colors * n_edges);
    for color in 0..colors {
        for vertex in 0..m {
            atom_labels.push((color, vertex));
            for block in 0..colors {
                for e in 0..n_edges {
                    pcoords.push(if block == color { chi[[vertex, e]] } else { 0.0 });
                }
            }
        }
    }
    let pspace = PointSpace::from_flat(pcoords, colors * n_edges, MetricKind::EuclideanNd)?;

    let atoms = colors * m;
    let dictionary = Dictionary::new(Array2::eye(atoms), pspace.clone())?;
    let mut correlation = Array2::zeros((atoms, m));
    for (row, &(_, vertex)) in atom_labels.iter().enumerate() {
        correlation[[row, vertex]] = 1.0;
    }

    Ok(ColoringReduction {
        mspace,
        pspace,
        dictionary,
        correlation,
        params: FeasibleParams {
            sigma: f64::INFINITY,
            tau: (n as f64).sqrt(),
        },
        atom_labels,
        padded_degree: n,
    })
}
