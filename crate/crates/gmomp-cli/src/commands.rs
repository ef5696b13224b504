//! Subcommand implementations. Each returns the process exit code: 0 for
//! success, 3 when a solve stagnated (partial outputs are still written);
//! errors bubble up and are mapped to 1 (I/O or schema) or 2 (domain).

use std::path::{Path, PathBuf};

use gmomp::experiments::{run_experiment, ExperimentConfig};
use gmomp::io::{
    self, read_solution, write_dictionary, write_run_record, write_solution, RunRecord,
};
use gmomp::postprocess::denoise_solution;
use gmomp::solver::effective_floor;
use gmomp::{
    analysis, gm_omp, per_column_omp, somp, vectorized_omp, Error, FeasibleParams,
    MeasurementMatrix, Result, Solution,
};

use crate::config::{config_hash, Method, PostprocessConfig, RunConfig};

pub struct Context {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

impl Context {
    fn load_run_config(&self) -> Result<RunConfig> {
        let path = self.config.as_ref().ok_or_else(|| {
            Error::Format("--config <path> is required for this command".into())
        })?;
        let mut config = RunConfig::load(path)?;
        if let Some(seed) = self.seed {
            config.seed = Some(seed);
        }
        Ok(config)
    }

    fn output_dir(&self, configured: Option<&Path>) -> PathBuf {
        self.output
            .clone()
            .or_else(|| configured.map(Path::to_path_buf))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

fn run_method(
    config: &RunConfig,
    d: &gmomp::Dictionary,
    data: &MeasurementMatrix,
) -> Result<Solution> {
    match config.method {
        Method::GmOmp => {
            let params = FeasibleParams::new(config.sigma, config.tau)?;
            gm_omp(d, data, &params, &config.stop)
        }
        Method::PerColumnOmp => per_column_omp(d, data, &config.stop),
        Method::VectorizedOmp => vectorized_omp(d, data, &config.stop),
        Method::SOmp => somp(d, data, config.somp_lambda, &config.stop),
    }
}

pub fn solve(ctx: &Context) -> Result<i32> {
    let mut config = ctx.load_run_config()?;
    let out_dir = ctx.output_dir(config.output.as_deref());
    // The output location must not influence the recorded run.
    config.output = None;

    let d = config.dictionary()?;
    let raw = config.load_data()?;
    let mspace = config.measurement_space(raw.ncols())?;
    let data = MeasurementMatrix::new(raw, mspace)?;
    let floor_used = effective_floor(&d, &data, &config.stop)?;
    let solution = run_method(&config, &d, &data)?;

    let record = RunRecord {
        config_hash: config_hash(&config)?,
        method: config.method.name().to_string(),
        params: FeasibleParams::new(config.sigma, config.tau)?,
        stop: config.stop.clone(),
        floor_used,
        residual_norms: solution.residual_norms.clone(),
        weakness_trace: solution.weakness_trace.clone(),
        lambda: solution.weakness().ok(),
        stagnated: solution.stagnated,
        config: serde_json::to_value(&config)?,
    };
    write_solution(&out_dir, &solution, &record)?;
    println!(
        "wrote {} ({} iterations, {} nonzeros{})",
        out_dir.display(),
        solution.patterns.len(),
        solution.nnz(),
        if solution.stagnated { ", stagnated" } else { "" }
    );
    Ok(if solution.stagnated { 3 } else { 0 })
}

pub fn analyze(ctx: &Context, sparsity: usize, lambda: f64) -> Result<i32> {
    let config = ctx.load_run_config()?;
    let out_dir = ctx.output_dir(config.output.as_deref());
    let d = config.dictionary()?;
    let report = analysis::recovery_report(&d, sparsity, lambda)?;
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(out_dir.join("recovery.json"), format!("{json}\n"))?;
    Ok(0)
}

pub fn bench(ctx: &Context) -> Result<i32> {
    let path = ctx.config.as_ref().ok_or_else(|| {
        Error::Format("--config <path> is required for this command".into())
    })?;
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    let mut config: ExperimentConfig = serde_json::from_str(&text)?;
    if let Some(seed) = ctx.seed {
        config.base_seed = seed;
    }
    let out_dir = ctx.output_dir(config.output.as_deref());
    config.output = None;
    config.validate()?;

    let table = run_experiment(&config)?;
    std::fs::create_dir_all(&out_dir)?;
    table.write_csv(&out_dir.join("results.csv"))?;
    let summary = serde_json::json!({
        "config_hash": config_hash(&config)?,
        "config": config,
        "rows": table.rows,
    });
    std::fs::write(
        out_dir.join("summary.json"),
        format!("{}\n", serde_json::to_string_pretty(&summary)?),
    )?;
    println!("wrote {} ({} rows)", out_dir.display(), table.rows.len());
    Ok(0)
}

pub fn postprocess(
    ctx: &Context,
    solution_dir: &Path,
    pattern_degree: Option<usize>,
    delta: Option<f64>,
    amplitude_degree: Option<usize>,
) -> Result<i32> {
    let (solution, record) = read_solution(solution_dir)?;
    let config: RunConfig = serde_json::from_value(record.config.clone())?;
    let settings = config.postprocess.unwrap_or_default();
    let settings = PostprocessConfig {
        pattern_degree: pattern_degree.unwrap_or(settings.pattern_degree),
        delta: delta.unwrap_or(settings.delta),
        amplitude_degree: amplitude_degree.or(settings.amplitude_degree),
    };

    let d = config.dictionary()?;
    let mspace = config.measurement_space(solution.x.ncols())?;
    let denoised = denoise_solution(
        &solution,
        &mspace,
        d.pspace(),
        settings.pattern_degree,
        settings.delta,
        settings.amplitude_degree,
    )?;

    let out_dir = ctx
        .output
        .clone()
        .unwrap_or_else(|| solution_dir.join("denoised"));
    std::fs::create_dir_all(&out_dir)?;
    io::write_matrix_csv(&out_dir.join(io::X_CSV), &denoised.x)?;
    io::write_patterns(&out_dir.join(io::PATTERNS_TXT), &denoised.patterns, &denoised.x)?;
    std::fs::write(
        out_dir.join("structures.json"),
        format!(
            "{}\n",
            serde_json::to_string_pretty(&denoised.structures)?
        ),
    )?;
    let record_out = RunRecord {
        residual_norms: vec![],
        weakness_trace: vec![],
        lambda: record.lambda,
        stagnated: record.stagnated,
        ..record
    };
    write_run_record(&out_dir.join(io::RUN_JSON), &record_out)?;
    println!(
        "wrote {} ({} structures)",
        out_dir.display(),
        denoised.structures.len()
    );
    Ok(0)
}

pub fn dict(ctx: &Context) -> Result<i32> {
    let config = ctx.load_run_config()?;
    let out_dir = ctx.output_dir(config.output.as_deref());
    let d = config.dictionary()?;
    write_dictionary(&out_dir, &d, config.dictionary.builder())?;
    println!(
        "wrote {} ({} x {} atoms)",
        out_dir.display(),
        d.n_samples(),
        d.n_atoms()
    );
    Ok(0)
}
