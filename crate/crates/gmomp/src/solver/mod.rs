//! Greedy pursuit solvers: the structured multi-measurement solver, the
//! single-vector baseline, and the per-column / vectorized / simultaneous
//! special cases.
//!
//! All solvers share one correlation kernel and one least-squares routine
//! with a canonical (sorted) atom order, so the documented special-case
//! equivalences hold entrywise, not just up to rounding.

mod greedy;
mod lstsq;

pub use greedy::greedy_choice;

use std::collections::{BTreeMap, BTreeSet};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::spaces::{FeasibleParams, Pattern, PointSpace};

use greedy::greedy_core;
use lstsq::{axpy_sub, dot, least_squares_multi};

/// Crate-internal single right-hand-side least squares over explicit column
/// slices, minimum-norm on rank deficiency.
pub(crate) fn least_squares_columns(cols: &[&[f64]], rhs: &[f64]) -> Vec<f64> {
    least_squares_multi(cols, &[rhs]).pop().unwrap()
}

/// The correlation floor a run over these inputs uses: the configured
/// absolute floor, or the default ratio of the initial global maximum of
/// |D^T S|.
pub fn effective_floor(
    d: &Dictionary,
    s: &MeasurementMatrix,
    stop: &StopCriteria,
) -> Result<f64> {
    if let Some(f) = stop.correlation_floor {
        return Ok(f);
    }
    let ws = Workspace::new(d, s.data())?;
    Ok(stop.floor(ws.global_max()))
}

/// Entries of the correlation matrix at or below this fraction of the
/// initial global maximum are treated as zero when no explicit floor is
/// given.
const DEFAULT_FLOOR_RATIO: f64 = 1e-10;

/// When to stop iterating: after `max_iterations`, when the residual
/// Frobenius norm drops to `residual_tol`, or when no correlation above the
/// floor remains. At least one of the first two must be active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopCriteria {
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub residual_tol: f64,
    /// Absolute correlation floor; defaults to 1e-10 times the initial
    /// global maximum of |D^T S|.
    #[serde(default)]
    pub correlation_floor: Option<f64>,
    /// Relative-correlation threshold in [0, 1] restricting selections to
    /// entries above this fraction of their column maximum.
    #[serde(default)]
    pub adaptive_beta: Option<f64>,
}

impl StopCriteria {
    pub fn iterations(l: usize) -> Self {
        Self {
            max_iterations: Some(l),
            residual_tol: 0.0,
            correlation_floor: None,
            adaptive_beta: None,
        }
    }

    pub fn with_residual_tol(mut self, tol: f64) -> Self {
        self.residual_tol = tol;
        self
    }

    pub fn with_correlation_floor(mut self, floor: f64) -> Self {
        self.correlation_floor = Some(floor);
        self
    }

    pub fn with_adaptive_beta(mut self, beta: f64) -> Self {
        self.adaptive_beta = Some(beta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations.is_none() && !(self.residual_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "either max_iterations or a positive residual_tol must be set".into(),
            ));
        }
        if let Some(l) = self.max_iterations {
            if l == 0 {
                return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
            }
        }
        if self.residual_tol.is_nan() || self.residual_tol < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "residual_tol must be non-negative, got {}",
                self.residual_tol
            )));
        }
        if let Some(f) = self.correlation_floor {
            if f.is_nan() || f < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "correlation_floor must be non-negative, got {f}"
                )));
            }
        }
        if let Some(b) = self.adaptive_beta {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::InvalidParameter(format!(
                    "adaptive_beta must lie in [0, 1], got {b}"
                )));
            }
        }
        Ok(())
    }

    fn floor(&self, initial_max: f64) -> f64 {
        self.correlation_floor
            .unwrap_or(DEFAULT_FLOOR_RATIO * initial_max)
    }
}

/// A data matrix together with the metric points of its measurement columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    data: Array2<f64>,
    mspace: PointSpace,
}

impl MeasurementMatrix {
    pub fn new(data: Array2<f64>, mspace: PointSpace) -> Result<Self> {
        if mspace.len() != data.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} measurement points for {} data columns",
                mspace.len(),
                data.ncols()
            )));
        }
        Ok(Self { data, mspace })
    }

    /// Attaches the default measurement space m_k = k.
    pub fn indexed(data: Array2<f64>) -> Self {
        let mspace = PointSpace::indexed(data.ncols());
        Self { data, mspace }
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn mspace(&self) -> &PointSpace {
        &self.mspace
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_measurements(&self) -> usize {
        self.data.ncols()
    }
}

/// Solver output: coefficients, the per-iteration patterns, the residual
/// history, and the relative-correlation ratios of every selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Coefficient matrix, atoms x measurements.
    pub x: Array2<f64>,
    /// One selected pattern per iteration, in iteration order.
    pub patterns: Vec<Pattern>,
    /// Residual Frobenius norm after each iteration.
    pub residual_norms: Vec<f64>,
    /// |C[j,k]| / max_j |C[j,k]| for every selected pair, in selection order.
    pub weakness_trace: Vec<f64>,
    /// Set when the solver stopped because no admissible correlation
    /// remained while the residual was still above tolerance.
    pub stagnated: bool,
}

impl Solution {
    /// Minimum relative correlation over all selections.
    pub fn weakness(&self) -> Result<f64> {
        if self.weakness_trace.is_empty() {
            return Err(Error::Empty("weakness trace"));
        }
        Ok(self
            .weakness_trace
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min))
    }

    /// Union of all iteration patterns as sorted (atom, measurement) pairs.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let mut set = BTreeSet::new();
        for p in &self.patterns {
            set.extend(p.pairs());
        }
        set.into_iter().collect()
    }

    /// Number of structurally nonzero coefficients.
    pub fn nnz(&self) -> usize {
        self.x.iter().filter(|v| **v != 0.0).count()
    }
}

/// Shared solver state kept in measurement-major layout so the hot loops run
/// over contiguous rows.
struct Workspace {
    dt: Array2<f64>, // atoms x samples
    st: Array2<f64>, // measurements x samples
    rt: Array2<f64>, // measurements x samples
    xt: Array2<f64>, // measurements x atoms
    cm: Array2<f64>, // measurements x atoms, elementwise |.|
    support: Vec<BTreeSet<usize>>,
}

impl Workspace {
    fn new(d: &Dictionary, s: &Array2<f64>) -> Result<Self> {
        if s.nrows() != d.n_samples() {
            return Err(Error::DimensionMismatch(format!(
                "data has {} rows but dictionary atoms have {} samples",
                s.nrows(),
                d.n_samples()
            )));
        }
        let p = d.n_atoms();
        let m = s.ncols();
        let t = d.n_samples();
        let dt = d.atom_rows();
        let mut st = Array2::zeros((m, t));
        for k in 0..m {
            for i in 0..t {
                st[[k, i]] = s[[i, k]];
            }
        }
        let rt = st.clone();
        let mut ws = Self {
            dt,
            st,
            rt,
            xt: Array2::zeros((m, p)),
            cm: Array2::zeros((m, p)),
            support: vec![BTreeSet::new(); m],
        };
        for k in 0..m {
            ws.update_correlations(k);
        }
        Ok(ws)
    }

    fn n_atoms(&self) -> usize {
        self.dt.nrows()
    }

    fn n_measurements(&self) -> usize {
        self.st.nrows()
    }

    fn update_correlations(&mut self, k: usize) {
        let r = self.rt.row(k);
        let r = r.as_slice().unwrap();
        for j in 0..self.n_atoms() {
            let a = self.dt.row(j);
            self.cm[[k, j]] = dot(a.as_slice().unwrap(), r).abs();
        }
    }

    fn global_max(&self) -> f64 {
        self.cm.iter().copied().fold(0.0, f64::max)
    }

    fn column_maxima(&self) -> Vec<f64> {
        (0..self.n_measurements())
            .map(|k| self.cm.row(k).iter().copied().fold(0.0, f64::max))
            .collect()
    }

    fn residual_frob(&self) -> f64 {
        let mut sum = 0.0;
        for k in 0..self.n_measurements() {
            let r = self.rt.row(k);
            let r = r.as_slice().unwrap();
            sum += dot(r, r);
        }
        sum.sqrt()
    }

    /// Re-solves the least-squares subproblem of each listed measurement
    /// column against its current support and refreshes the residual and
    /// correlation rows. Columns with equal supports share one
    /// factorization.
    fn refresh(&mut self, columns: &[usize]) {
        let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for &k in columns {
            let atoms: Vec<usize> = self.support[k].iter().copied().collect();
            groups.entry(atoms).or_default().push(k);
        }
        for (atoms, cols) in groups {
            let col_views: Vec<&[f64]> = atoms
                .iter()
                .map(|&j| self.dt.row(j).to_slice().unwrap())
                .collect();
            let rhs_views: Vec<&[f64]> = cols
                .iter()
                .map(|&k| self.st.row(k).to_slice().unwrap())
                .collect();
            let solutions = least_squares_multi(&col_views, &rhs_views);
            for (&k, y) in cols.iter().zip(&solutions) {
                self.xt.row_mut(k).fill(0.0);
                {
                    let src = self.st.row(k);
                    let dst = self.rt.row_mut(k).into_slice().unwrap();
                    dst.copy_from_slice(src.to_slice().unwrap());
                    for (i, &j) in atoms.iter().enumerate() {
                        self.xt[[k, j]] = y[i];
                        axpy_sub(dst, y[i], self.dt.row(j).to_slice().unwrap());
                    }
                }
                self.update_correlations(k);
            }
        }
    }

    fn x_standard(&self) -> Array2<f64> {
        let m = self.n_measurements();
        let p = self.n_atoms();
        let mut x = Array2::zeros((p, m));
        for k in 0..m {
            for j in 0..p {
                x[[j, k]] = self.xt[[k, j]];
            }
        }
        x
    }
}

fn check_params(params: &FeasibleParams) -> Result<()> {
    // Reconstructs through the validating constructor so raw structs made by
    // literal syntax are still checked.
    FeasibleParams::new(params.sigma, params.tau).map(|_| ())
}

/// Structured greedy pursuit over multiple measurement columns. Each
/// iteration extracts one feasible pattern from the correlation matrix,
/// grows the support by it, and re-solves the restricted least squares.
pub fn gm_omp(
    d: &Dictionary,
    s: &MeasurementMatrix,
    params: &FeasibleParams,
    stop: &StopCriteria,
) -> Result<Solution> {
    stop.validate()?;
    check_params(params)?;
    let mut ws = Workspace::new(d, s.data())?;
    let floor = stop.floor(ws.global_max());
    let max_iterations = stop
        .max_iterations
        .unwrap_or(ws.n_atoms() * ws.n_measurements());

    let mut patterns = Vec::new();
    let mut residual_norms = Vec::new();
    let mut weakness_trace = Vec::new();
    let mut stagnated = false;

    for _ in 0..max_iterations {
        let col_max = ws.column_maxima();
        let pattern = greedy_core(
            &mut ws.cm.clone(),
            s.mspace(),
            d.pspace(),
            params,
            floor,
            stop.adaptive_beta,
            Some(&col_max),
        );
        if pattern.is_empty() {
            stagnated = ws.residual_frob() > stop.residual_tol;
            break;
        }
        let changed: Vec<usize> = pattern.measurements().collect();
        for (atom, k) in pattern.pairs() {
            weakness_trace.push(ws.cm[[k, atom]] / col_max[k]);
            ws.support[k].insert(atom);
        }
        patterns.push(pattern);
        ws.refresh(&changed);
        let norm = ws.residual_frob();
        residual_norms.push(norm);
        if norm <= stop.residual_tol {
            break;
        }
    }

    Ok(Solution {
        x: ws.x_standard(),
        patterns,
        residual_norms,
        weakness_trace,
        stagnated,
    })
}

/// Single-vector orthogonal matching pursuit output.
#[derive(Debug, Clone, PartialEq)]
pub struct OmpResult {
    pub x: Array1<f64>,
    pub support: BTreeSet<usize>,
    pub residual_norms: Vec<f64>,
}

struct OmpRun {
    picks: Vec<usize>,
    support: Vec<usize>,
    coeffs: Vec<f64>,
    residual_norms: Vec<f64>,
    residual_sq: Vec<f64>,
}

fn omp_core(dt: &Array2<f64>, signal: &[f64], stop: &StopCriteria, floor: f64) -> OmpRun {
    let p = dt.nrows();
    let max_iterations = stop.max_iterations.unwrap_or(p);
    let mut residual = signal.to_vec();
    let mut picks = Vec::new();
    let mut support: Vec<usize> = Vec::new();
    let mut coeffs: Vec<f64> = Vec::new();
    let mut residual_norms = Vec::new();
    let mut residual_sq = vec![dot(signal, signal)];

    for _ in 0..max_iterations {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..p {
            let v = dot(dt.row(j).to_slice().unwrap(), &residual).abs();
            if v <= floor {
                continue;
            }
            if best.map_or(true, |(bv, _)| v > bv) {
                best = Some((v, j));
            }
        }
        let Some((_, j)) = best else { break };
        picks.push(j);
        if let Err(pos) = support.binary_search(&j) {
            support.insert(pos, j);
        }
        let col_views: Vec<&[f64]> = support
            .iter()
            .map(|&a| dt.row(a).to_slice().unwrap())
            .collect();
        coeffs = least_squares_multi(&col_views, &[signal]).pop().unwrap();
        residual.copy_from_slice(signal);
        for (i, &a) in support.iter().enumerate() {
            axpy_sub(&mut residual, coeffs[i], dt.row(a).to_slice().unwrap());
        }
        let sq = dot(&residual, &residual);
        residual_sq.push(sq);
        let norm = sq.sqrt();
        residual_norms.push(norm);
        if norm <= stop.residual_tol {
            break;
        }
    }
    OmpRun {
        picks,
        support,
        coeffs,
        residual_norms,
        residual_sq,
    }
}

/// Orthogonal matching pursuit on a single measurement vector: repeated
/// argmax of |D^T r|, restricted least squares on the grown support,
/// residual update.
pub fn omp(d: &Dictionary, signal: &[f64], stop: &StopCriteria) -> Result<OmpResult> {
    stop.validate()?;
    if signal.len() != d.n_samples() {
        return Err(Error::DimensionMismatch(format!(
            "signal has {} samples but atoms have {}",
            signal.len(),
            d.n_samples()
        )));
    }
    let dt = d.atom_rows();
    let initial_max = (0..d.n_atoms())
        .map(|j| dot(dt.row(j).to_slice().unwrap(), signal).abs())
        .fold(0.0, f64::max);
    let run = omp_core(&dt, signal, stop, stop.floor(initial_max));
    let mut x = Array1::zeros(d.n_atoms());
    for (i, &j) in run.support.iter().enumerate() {
        x[j] = run.coeffs[i];
    }
    Ok(OmpResult {
        x,
        support: run.support.into_iter().collect(),
        residual_norms: run.residual_norms,
    })
}

/// OMP applied independently to every measurement column. Iteration `l` of
/// the returned solution collects the `l`-th pick of each column.
pub fn per_column_omp(
    d: &Dictionary,
    s: &MeasurementMatrix,
    stop: &StopCriteria,
) -> Result<Solution> {
    stop.validate()?;
    let ws = Workspace::new(d, s.data())?;
    let floor = stop.floor(ws.global_max());
    let m = ws.n_measurements();
    let p = ws.n_atoms();

    let runs: Vec<OmpRun> = (0..m)
        .map(|k| omp_core(&ws.dt, ws.st.row(k).to_slice().unwrap(), stop, floor))
        .collect();

    let mut x = Array2::zeros((p, m));
    for (k, run) in runs.iter().enumerate() {
        for (i, &j) in run.support.iter().enumerate() {
            x[[j, k]] = run.coeffs[i];
        }
    }
    let rounds = runs.iter().map(|r| r.picks.len()).max().unwrap_or(0);
    let mut patterns = Vec::with_capacity(rounds);
    let mut weakness_trace = Vec::new();
    let mut residual_norms = Vec::with_capacity(rounds);
    for l in 0..rounds {
        let mut pattern = Pattern::new();
        for (k, run) in runs.iter().enumerate() {
            if let Some(&j) = run.picks.get(l) {
                pattern.insert(j, k).expect("one pick per column per round");
                // Every pick is its own column's maximum.
                weakness_trace.push(1.0);
            }
        }
        patterns.push(pattern);
        let mut sq = 0.0;
        for run in &runs {
            sq += run.residual_sq[(l + 1).min(run.residual_sq.len() - 1)];
        }
        residual_norms.push(sq.sqrt());
    }
    let final_sq: f64 = runs
        .iter()
        .map(|r| *r.residual_sq.last().unwrap())
        .sum::<f64>();
    Ok(Solution {
        x,
        patterns,
        residual_norms,
        weakness_trace,
        stagnated: rounds == 0 && final_sq.sqrt() > stop.residual_tol,
    })
}

/// OMP on the vectorized problem: every iteration adds the single entry of
/// largest absolute correlation across the whole matrix.
pub fn vectorized_omp(
    d: &Dictionary,
    s: &MeasurementMatrix,
    stop: &StopCriteria,
) -> Result<Solution> {
    stop.validate()?;
    let mut ws = Workspace::new(d, s.data())?;
    let floor = stop.floor(ws.global_max());
    let max_iterations = stop
        .max_iterations
        .unwrap_or(ws.n_atoms() * ws.n_measurements());

    let mut patterns = Vec::new();
    let mut residual_norms = Vec::new();
    let mut weakness_trace = Vec::new();
    let mut stagnated = false;

    for _ in 0..max_iterations {
        let mut best: Option<(f64, usize, usize)> = None;
        for k in 0..ws.n_measurements() {
            let row = ws.cm.row(k);
            for (j, &v) in row.iter().enumerate() {
                if v <= floor {
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
        let Some((v, j, k)) = best else {
            stagnated = ws.residual_frob() > stop.residual_tol;
            break;
        };
        let col_max = ws.cm.row(k).iter().copied().fold(0.0, f64::max);
        weakness_trace.push(v / col_max);
        patterns.push(Pattern::from_pairs([(j, k)]).unwrap());
        ws.support[k].insert(j);
        ws.refresh(&[k]);
        let norm = ws.residual_frob();
        residual_norms.push(norm);
        if norm <= stop.residual_tol {
            break;
        }
    }
    Ok(Solution {
        x: ws.x_standard(),
        patterns,
        residual_norms,
        weakness_trace,
        stagnated,
    })
}

/// Simultaneous pursuit: each iteration selects the atom whose correlation
/// row has the largest lambda-norm and adds the whole row (that atom paired
/// with every measurement) to the support. `lambda_norm = 1` gives S-OMP;
/// infinity selects by the row maximum.
pub fn somp(
    d: &Dictionary,
    s: &MeasurementMatrix,
    lambda_norm: f64,
    stop: &StopCriteria,
) -> Result<Solution> {
    stop.validate()?;
    if lambda_norm.is_nan() || lambda_norm < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda_norm must be >= 1, got {lambda_norm}"
        )));
    }
    let mut ws = Workspace::new(d, s.data())?;
    let floor = stop.floor(ws.global_max());
    let max_iterations = stop.max_iterations.unwrap_or(ws.n_atoms());
    let m = ws.n_measurements();

    let mut patterns = Vec::new();
    let mut residual_norms = Vec::new();
    let mut weakness_trace = Vec::new();
    let mut stagnated = false;

    for _ in 0..max_iterations {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..ws.n_atoms() {
            let norm = if lambda_norm.is_infinite() {
                (0..m).map(|k| ws.cm[[k, j]]).fold(0.0, f64::max)
            } else {
                let mut sum = 0.0;
                for k in 0..m {
                    sum += ws.cm[[k, j]].powf(lambda_norm);
                }
                sum.powf(1.0 / lambda_norm)
            };
            if best.map_or(true, |(bv, _)| norm > bv) {
                best = Some((norm, j));
            }
        }
        let Some((norm, j)) = best else { break };
        if norm <= floor {
            stagnated = ws.residual_frob() > stop.residual_tol;
            break;
        }
        let col_max = ws.column_maxima();
        let pattern = Pattern::from_pairs((0..m).map(|k| (j, k))).unwrap();
        for (_, k) in pattern.pairs() {
            weakness_trace.push(ws.cm[[k, j]] / col_max[k]);
            ws.support[k].insert(j);
        }
        patterns.push(pattern);
        let all: Vec<usize> = (0..m).collect();
        ws.refresh(&all);
        let rnorm = ws.residual_frob();
        residual_norms.push(rnorm);
        if rnorm <= stop.residual_tol {
            break;
        }
    }
    Ok(Solution {
        x: ws.x_standard(),
        patterns,
        residual_norms,
        weakness_trace,
        stagnated,
    })
}

/// Least squares restricted to an explicit support: each measurement column
/// is fit over its active atoms (minimum-norm on rank deficiency), X is zero
/// off the support, and R = S - D X.
pub fn restricted_least_squares(
    d: &Dictionary,
    s: &Array2<f64>,
    support: &[(usize, usize)],
) -> Result<(Array2<f64>, Array2<f64>)> {
    let mut ws = Workspace::new(d, s)?;
    for &(atom, measurement) in support {
        if atom >= ws.n_atoms() {
            return Err(Error::IndexOutOfRange {
                what: "atom",
                index: atom,
                len: ws.n_atoms(),
            });
        }
        if measurement >= ws.n_measurements() {
            return Err(Error::IndexOutOfRange {
                what: "measurement",
                index: measurement,
                len: ws.n_measurements(),
            });
        }
        ws.support[measurement].insert(atom);
    }
    let changed: Vec<usize> = (0..ws.n_measurements())
        .filter(|&k| !ws.support[k].is_empty())
        .collect();
    ws.refresh(&changed);
    let x = ws.x_standard();
    let t = ws.dt.ncols();
    let m = ws.n_measurements();
    let mut r = Array2::zeros((t, m));
    for k in 0..m {
        for i in 0..t {
            r[[i, k]] = ws.rt[[k, i]];
        }
    }
    Ok((x, r))
}
