//! Synthetic benchmarks: the slope sweep and the uniform/Bernoulli
//! pattern-noise experiments, with seeded per-trial noise so results are
//! reproducible bit for bit regardless of thread count.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::uniform_noise_tau;
use crate::dictionary::{gaussian_conv_dictionary, Dictionary};
use crate::error::{Error, Result};
use crate::postprocess::denoise_solution;
use crate::solver::{
    gm_omp, per_column_omp, somp, vectorized_omp, MeasurementMatrix, Solution, StopCriteria,
};
use crate::spaces::{FeasibleParams, PointSpace};

/// Kernel width of the comparison dictionary.
const GAUSS_STD: f64 = 1.5811388300841898; // sqrt(2.5)

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "slope-sweep")]
    SlopeSweep,
    #[serde(rename = "uniform-noise")]
    UniformNoise,
    #[serde(rename = "bernoulli-noise")]
    BernoulliNoise,
}

/// Optional departures from the per-experiment solver defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    #[serde(with = "crate::io::extended_real_opt")]
    pub sigma: Option<f64>,
    #[serde(with = "crate::io::extended_real_opt")]
    pub tau: Option<f64>,
    pub max_iterations: Option<usize>,
    pub denoise_degree: Option<usize>,
    pub somp_lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Problem size N; dictionaries, data and solutions are all N x N.
    pub size: usize,
    #[serde(default)]
    pub angles_deg: Vec<f64>,
    #[serde(default)]
    pub noise_levels: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_trials() -> usize {
    1
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size < 2 {
            return Err(Error::InvalidParameter("size must be >= 2".into()));
        }
        if self.trials < 1 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        match self.experiment {
            ExperimentKind::SlopeSweep => {
                if self.angles_deg.is_empty() {
                    return Err(Error::InvalidParameter(
                        "slope sweep needs at least one angle".into(),
                    ));
                }
                if let Some(bad) = self
                    .angles_deg
                    .iter()
                    .find(|a| !(0.0..=45.0).contains(*a))
                {
                    return Err(Error::InvalidParameter(format!(
                        "angles must lie in [0, 45] degrees, got {bad}"
                    )));
                }
            }
            ExperimentKind::UniformNoise | ExperimentKind::BernoulliNoise => {
                if self.noise_levels.is_empty() {
                    return Err(Error::InvalidParameter(
                        "noise experiment needs at least one level".into(),
                    ));
                }
                for &level in &self.noise_levels {
                    let ok = match self.experiment {
                        ExperimentKind::BernoulliNoise => (0.0..=1.0).contains(&level),
                        _ => level >= 0.0 && level.is_finite(),
                    };
                    if !ok {
                        return Err(Error::InvalidParameter(format!(
                            "invalid noise level {level}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Long-format results: one row per (method, parameter, metric).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub parameter: f64,
    pub metric: String,
    pub value: f64,
}

impl ResultsTable {
    pub fn get(&self, method: &str, parameter: f64, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.parameter == parameter && r.metric == metric)
            .map(|r| r.value)
    }

    pub fn methods(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.method) {
                out.push(r.method.clone());
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["method", "parameter", "metric", "value"])?;
        for r in &self.rows {
            w.write_record([
                r.method.as_str(),
                &format!("{}", r.parameter),
                r.metric.as_str(),
                &format!("{}", r.value),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// The slope matrix: entry (i, j) is 1 exactly when the 1-based row index is
/// round(j tan(xi)) clamped to [1, N], one nonzero per column. 45 degrees
/// gives the identity, 0 degrees a single nonzero row.
pub fn make_slope_matrix(n: usize, xi_deg: f64) -> Result<Array2<f64>> {
    if n < 1 {
        return Err(Error::InvalidParameter("size must be >= 1".into()));
    }
    if !(0.0..=45.0).contains(&xi_deg) {
        return Err(Error::InvalidParameter(format!(
            "slope angle must lie in [0, 45] degrees, got {xi_deg}"
        )));
    }
    let slope = xi_deg.to_radians().tan();
    let mut x = Array2::zeros((n, n));
    for col in 0..n {
        let j = (col + 1) as f64;
        let i = round_half_up(j * slope).clamp(1.0, n as f64) as usize;
        x[[i - 1, col]] = 1.0;
    }
    Ok(x)
}

/// Matrix with a single constant row at the 1-based index ceil(N/2).
pub fn constant_row_matrix(n: usize) -> Array2<f64> {
    let mut x = Array2::zeros((n, n));
    let row = n.div_ceil(2) - 1;
    for col in 0..n {
        x[[row, col]] = 1.0;
    }
    x
}

fn check_one_sparse_columns(x: &Array2<f64>) -> Result<()> {
    for (col, column) in x.columns().into_iter().enumerate() {
        if column.iter().filter(|v| **v != 0.0).count() > 1 {
            return Err(Error::InvalidParameter(format!(
                "column {col} is not 1-sparse"
            )));
        }
    }
    Ok(())
}

/// Shifts each column's nonzero row by an independent rounded uniform draw
/// from [-eps_u, eps_u], clamped to the matrix. Amplitudes move with the
/// entry.
pub fn add_uniform_pattern_noise(x: &Array2<f64>, eps_u: f64, seed: u64) -> Result<Array2<f64>> {
    if eps_u.is_nan() || eps_u < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "eps_u must be non-negative, got {eps_u}"
        )));
    }
    check_one_sparse_columns(x)?;
    let n = x.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Array2::zeros(x.raw_dim());
    for col in 0..x.ncols() {
        let nonzero = x.column(col).iter().position(|v| *v != 0.0);
        if let Some(row) = nonzero {
            let draw = if eps_u == 0.0 {
                0.0
            } else {
                rng.random_range(-eps_u..=eps_u)
            };
            let shifted = (row as i64 + round_half_up(draw) as i64).clamp(0, n as i64 - 1);
            out[[shifted as usize, col]] = x[[row, col]];
        }
    }
    Ok(out)
}

/// Deletes each column's nonzero entry independently with probability eps_b.
pub fn add_bernoulli_pattern_noise(x: &Array2<f64>, eps_b: f64, seed: u64) -> Result<Array2<f64>> {
    if !(0.0..=1.0).contains(&eps_b) {
        return Err(Error::InvalidParameter(format!(
            "eps_b must lie in [0, 1], got {eps_b}"
        )));
    }
    check_one_sparse_columns(x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = x.clone();
    for col in 0..x.ncols() {
        let nonzero = x.column(col).iter().position(|v| *v != 0.0);
        if let Some(row) = nonzero {
            if rng.random::<f64>() < eps_b {
                out[[row, col]] = 0.0;
            }
        }
    }
    Ok(out)
}

/// Mean squared entrywise difference.
pub fn mse(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        sum += d * d;
    }
    Ok(sum / a.len() as f64)
}

fn frob(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn frob_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        sum += d * d;
    }
    sum.sqrt()
}

fn nnz(a: &Array2<f64>) -> usize {
    a.iter().filter(|v| **v != 0.0).count()
}

pub const METHOD_PER_COLUMN: &str = "per-column-omp";
pub const METHOD_VECTORIZED: &str = "vectorized-omp";
pub const METHOD_SOMP: &str = "s-omp";
pub const METHOD_GM: &str = "gm-omp";

const BASELINE_TOL_RATIO: f64 = 1e-10;

struct Baselines {
    per_column: Solution,
    vectorized: Solution,
    somp: Solution,
}

fn run_baselines(
    d: &Dictionary,
    data: &MeasurementMatrix,
    n: usize,
    somp_lambda: f64,
) -> Result<Baselines> {
    let tol = BASELINE_TOL_RATIO * frob(data.data());
    let per_column = per_column_omp(
        d,
        data,
        &StopCriteria::iterations(4).with_residual_tol(tol),
    )?;
    let vectorized = vectorized_omp(
        d,
        data,
        &StopCriteria::iterations(2 * n).with_residual_tol(tol),
    )?;
    let somp_sol = somp(
        d,
        data,
        somp_lambda,
        &StopCriteria::iterations(n).with_residual_tol(tol),
    )?;
    Ok(Baselines {
        per_column,
        vectorized,
        somp: somp_sol,
    })
}

/// Reconstruction error and support size of every method at every slope.
pub fn run_slope_sweep(config: &ExperimentConfig) -> Result<ResultsTable> {
    config.validate()?;
    let n = config.size;
    let d = gaussian_conv_dictionary(n, GAUSS_STD)?;
    let params = FeasibleParams::new(
        config.solver.sigma.unwrap_or(1.0),
        config.solver.tau.unwrap_or(1.0),
    )?;
    let gm_stop = StopCriteria::iterations(config.solver.max_iterations.unwrap_or(1));
    let somp_lambda = config.solver.somp_lambda.unwrap_or(1.0);

    let mut rows = Vec::new();
    for &angle in &config.angles_deg {
        let x_true = make_slope_matrix(n, angle)?;
        let s = d.atoms().dot(&x_true);
        let data = MeasurementMatrix::indexed(s);
        let base = run_baselines(&d, &data, n, somp_lambda)?;
        let gm = gm_omp(&d, &data, &params, &gm_stop)?;
        let x_norm = frob(&x_true);
        for (method, solution) in [
            (METHOD_PER_COLUMN, &base.per_column),
            (METHOD_VECTORIZED, &base.vectorized),
            (METHOD_SOMP, &base.somp),
            (METHOD_GM, &gm),
        ] {
            let err = frob_diff(&x_true, &solution.x);
            for (metric, value) in [
                ("frobenius_error", err),
                ("relative_frobenius_error", err / x_norm),
                ("nnz", nnz(&solution.x) as f64),
            ] {
                rows.push(ResultRow {
                    method: method.to_string(),
                    parameter: angle,
                    metric: metric.to_string(),
                    value,
                });
            }
        }
    }
    Ok(ResultsTable { rows })
}

/// Pattern-denoised reconstruction from a structured solve: each iteration
/// pattern is re-fit and re-rounded, amplitudes travel with their
/// measurement, and inpainted entries take the pattern's mean amplitude.
pub fn denoised_estimate(
    solution: &Solution,
    mspace: &PointSpace,
    pspace: &PointSpace,
    degree: usize,
) -> Result<Array2<f64>> {
    Ok(denoise_solution(solution, mspace, pspace, degree, 0.0, None)?.x)
}

#[derive(Clone, Copy)]
struct TrialMetrics {
    per_column: f64,
    vectorized: f64,
    somp: f64,
    gm: f64,
    success: bool,
}

fn supports_match(solution: &Solution, x: &Array2<f64>) -> bool {
    let mut expected: Vec<(usize, usize)> = Vec::new();
    for ((j, k), v) in x.indexed_iter() {
        if *v != 0.0 {
            expected.push((j, k));
        }
    }
    solution.support() == expected
}

/// Per-level mean reconstruction error of each method against the clean
/// pattern, plus (for Bernoulli noise) the fraction of trials whose noised
/// support was captured in a single structure.
pub fn run_noise_experiment(config: &ExperimentConfig) -> Result<ResultsTable> {
    config.validate()?;
    let kind = config.experiment;
    let n = config.size;
    let d = gaussian_conv_dictionary(n, GAUSS_STD)?;
    let clean = constant_row_matrix(n);
    let mspace = PointSpace::indexed(n);
    let min_gap = mspace.min_pairwise_distance().unwrap();
    let degree = config.solver.denoise_degree.unwrap_or(4);
    let somp_lambda = config.solver.somp_lambda.unwrap_or(1.0);

    let mut rows = Vec::new();
    for &level in &config.noise_levels {
        let gm_params = match kind {
            ExperimentKind::UniformNoise => FeasibleParams::new(
                config.solver.sigma.unwrap_or(1.0),
                config
                    .solver
                    .tau
                    .map(Ok)
                    .unwrap_or_else(|| uniform_noise_tau(1.0, level, min_gap).map(|t| t.tau_hat))?,
            )?,
            _ => FeasibleParams::new(
                config.solver.sigma.unwrap_or(6.0),
                config.solver.tau.unwrap_or(1.0),
            )?,
        };
        let gm_stop = StopCriteria::iterations(config.solver.max_iterations.unwrap_or(1));

        let trials: Vec<Result<TrialMetrics>> = (0..config.trials as u64)
            .into_par_iter()
            .map(|trial| {
                let seed = config.base_seed.wrapping_add(trial);
                let noised = match kind {
                    ExperimentKind::UniformNoise => {
                        add_uniform_pattern_noise(&clean, level, seed)?
                    }
                    _ => add_bernoulli_pattern_noise(&clean, level, seed)?,
                };
                let s = d.atoms().dot(&noised);
                let data = MeasurementMatrix::new(s, mspace.clone())?;
                let base = run_baselines(&d, &data, n, somp_lambda)?;
                let gm = gm_omp(&d, &data, &gm_params, &gm_stop)?;
                let success = supports_match(&gm, &noised);
                let estimate = denoised_estimate(&gm, &mspace, d.pspace(), degree)?;
                Ok(TrialMetrics {
                    per_column: mse(&clean, &base.per_column.x)?,
                    vectorized: mse(&clean, &base.vectorized.x)?,
                    somp: mse(&clean, &base.somp.x)?,
                    gm: mse(&clean, &estimate)?,
                    success,
                })
            })
            .collect();
        let trials: Vec<TrialMetrics> = trials.into_iter().collect::<Result<_>>()?;

        let count = trials.len() as f64;
        let extract: [(&str, fn(&TrialMetrics) -> f64); 4] = [
            (METHOD_PER_COLUMN, |t| t.per_column),
            (METHOD_VECTORIZED, |t| t.vectorized),
            (METHOD_SOMP, |t| t.somp),
            (METHOD_GM, |t| t.gm),
        ];
        for (method, get) in extract {
            let mean = trials.iter().map(|t| get(t)).sum::<f64>() / count;
            let sum_sq_dev: f64 = trials
                .iter()
                .map(|t| {
                    let d = get(t) - mean;
                    d * d
                })
                .sum();
            let var = if trials.len() > 1 {
                sum_sq_dev / (count - 1.0)
            } else {
                0.0
            };
            let stderr = (var / count).sqrt();
            rows.push(ResultRow {
                method: method.to_string(),
                parameter: level,
                metric: "mse_mean".to_string(),
                value: mean,
            });
            rows.push(ResultRow {
                method: method.to_string(),
                parameter: level,
                metric: "mse_stderr".to_string(),
                value: stderr,
            });
        }
        if kind == ExperimentKind::BernoulliNoise {
            let successes = trials.iter().filter(|t| t.success).count();
            rows.push(ResultRow {
                method: METHOD_GM.to_string(),
                parameter: level,
                metric: "success_fraction".to_string(),
                value: successes as f64 / count,
            });
        }
    }
    Ok(ResultsTable { rows })
}

/// Dispatches on the configured experiment kind.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultsTable> {
    match config.experiment {
        ExperimentKind::SlopeSweep => run_slope_sweep(config),
        ExperimentKind::UniformNoise | ExperimentKind::BernoulliNoise => {
            run_noise_experiment(config)
        }
    }
}
