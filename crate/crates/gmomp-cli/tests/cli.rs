//! Command-line contract tests: exit codes, file formats, special-case
//! modes, and the solve round trip.

use std::path::{Path, PathBuf};
use std::process::Output;

use gmomp::experiments::make_slope_matrix;
use gmomp::io::{self, read_matrix_csv, read_solution};
use gmomp::{gm_omp, FeasibleParams, MeasurementMatrix, StopCriteria};
use ndarray::Array2;
use tempfile::TempDir;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gmomp")
}

fn run(args: &[&str], cwd: &Path) -> Output {
    std::process::Command::new(bin())
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

/// Writes the slope-matrix fixture: data S = D X for a Gaussian dictionary
/// at the given size and angle, plus a solve config.
fn write_slope_fixture(dir: &Path, n: usize, angle: f64) -> (PathBuf, Array2<f64>) {
    let d = gmomp::dictionary::gaussian_conv_dictionary(n, 2.5f64.sqrt()).unwrap();
    let x = make_slope_matrix(n, angle).unwrap();
    let s = d.atoms().dot(&x);
    io::write_matrix_csv(&dir.join("S.csv"), &s).unwrap();
    let config = serde_json::json!({
        "dictionary": {"builder": {"kind": "gaussian", "t": n, "std_dev": 2.5f64.sqrt()}},
        "data": dir.join("S.csv"),
        "sigma": 1.0,
        "tau": 1.0,
        "stop": {"max_iterations": 1},
    });
    let path = dir.join("solve.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    (path, x)
}

#[test]
fn solve_slope_fixture_recovers_support() {
    let tmp = TempDir::new().unwrap();
    let n = 64;
    let (config, x_true) = write_slope_fixture(tmp.path(), n, 30.0);
    let out = tmp.path().join("out");
    let result = run(
        &[
            "solve",
            "--config",
            config.to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(code(&result), 0, "{}", String::from_utf8_lossy(&result.stderr));

    let (solution, record) = read_solution(&out).unwrap();
    assert_eq!(solution.nnz(), n);
    assert!(record.residual_norms[0] < 1e-8);
    assert_eq!(record.method, "gm-omp");
    assert_eq!(record.lambda, solution.weakness().ok());
    for ((j, k), v) in x_true.indexed_iter() {
        if *v != 0.0 {
            assert!((solution.x[[j, k]] - 1.0).abs() < 1e-8);
        }
    }

    // Round trip: the files re-parse into the same solution the library
    // produces on the same inputs.
    let d = gmomp::dictionary::gaussian_conv_dictionary(n, 2.5f64.sqrt()).unwrap();
    let s = read_matrix_csv(&tmp.path().join("S.csv")).unwrap();
    let expected = gm_omp(
        &d,
        &MeasurementMatrix::indexed(s),
        &FeasibleParams::new(1.0, 1.0).unwrap(),
        &StopCriteria::iterations(1),
    )
    .unwrap();
    assert_eq!(solution, expected);
}

#[test]
fn solve_sigma_zero_matches_vectorized_mode() {
    let tmp = TempDir::new().unwrap();
    let n = 24;
    let (_, _) = write_slope_fixture(tmp.path(), n, 45.0);
    for (name, patch) in [
        ("gm0", serde_json::json!({"sigma": 0.0, "tau": 1.0, "method": "gm-omp"})),
        ("vec", serde_json::json!({"method": "vectorized-omp"})),
    ] {
        let mut config: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(tmp.path().join("solve.json")).unwrap(),
        )
        .unwrap();
        config["stop"] = serde_json::json!({"max_iterations": 30, "residual_tol": 1e-10});
        for (k, v) in patch.as_object().unwrap() {
            config[k] = v.clone();
        }
        std::fs::write(
            tmp.path().join(format!("{name}.json")),
            serde_json::to_string(&config).unwrap(),
        )
        .unwrap();
        let out = tmp.path().join(name);
        let result = run(
            &[
                "solve",
                "--config",
                tmp.path().join(format!("{name}.json")).to_str().unwrap(),
                "--output",
                out.to_str().unwrap(),
            ],
            tmp.path(),
        );
        assert_eq!(code(&result), 0);
    }
    let x_gm = std::fs::read(tmp.path().join("gm0").join(io::X_CSV)).unwrap();
    let x_vec = std::fs::read(tmp.path().join("vec").join(io::X_CSV)).unwrap();
    assert_eq!(x_gm, x_vec);
    let p_gm = std::fs::read(tmp.path().join("gm0").join(io::PATTERNS_TXT)).unwrap();
    let p_vec = std::fs::read(tmp.path().join("vec").join(io::PATTERNS_TXT)).unwrap();
    assert_eq!(p_gm, p_vec);
}

#[test]
fn solve_missing_data_file_exits_one_with_path() {
    let tmp = TempDir::new().unwrap();
    let config = serde_json::json!({
        "dictionary": {"builder": {"kind": "gaussian", "t": 8, "std_dev": 1.0}},
        "data": "does_not_exist.csv",
        "stop": {"max_iterations": 1},
    });
    std::fs::write(
        tmp.path().join("cfg.json"),
        serde_json::to_string(&config).unwrap(),
    )
    .unwrap();
    let result = run(
        &["solve", "--config", "cfg.json", "--output", "out"],
        tmp.path(),
    );
    assert_eq!(code(&result), 1);
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("does_not_exist.csv"), "{stderr}");
}

#[test]
fn solve_unknown_config_key_exits_one() {
    let tmp = TempDir::new().unwrap();
    std::fs::write(
        tmp.path().join("cfg.json"),
        r#"{"dictionary": {"builder": {"kind": "gaussian", "t": 8, "std_dev": 1.0}},
            "stop": {"max_iterations": 1}, "sigmaa": 3}"#,
    )
    .unwrap();
    let result = run(&["solve", "--config", "cfg.json"], tmp.path());
    assert_eq!(code(&result), 1);
}

#[test]
fn solve_dimension_mismatch_exits_two() {
    let tmp = TempDir::new().unwrap();
    // 4-row data against a dictionary with 8 samples.
    io::write_matrix_csv(&tmp.path().join("S.csv"), &Array2::<f64>::eye(4)).unwrap();
    let config = serde_json::json!({
        "dictionary": {"builder": {"kind": "gaussian", "t": 8, "std_dev": 1.0}},
        "data": tmp.path().join("S.csv"),
        "stop": {"max_iterations": 1},
    });
    std::fs::write(
        tmp.path().join("cfg.json"),
        serde_json::to_string(&config).unwrap(),
    )
    .unwrap();
    let result = run(&["solve", "--config", "cfg.json", "--output", "out"], tmp.path());
    assert_eq!(code(&result), 2);
}

#[test]
fn solve_stagnation_exits_three_with_partial_outputs() {
    let tmp = TempDir::new().unwrap();
    // Two-atom dictionary spanning the first two axes; data on the third.
    let mut atoms = Array2::zeros((3, 2));
    atoms[[0, 0]] = 1.0;
    atoms[[1, 1]] = 1.0;
    io::write_matrix_csv(&tmp.path().join("atoms.csv"), &atoms).unwrap();
    let mut s = Array2::zeros((3, 1));
    s[[2, 0]] = 1.0;
    io::write_matrix_csv(&tmp.path().join("S.csv"), &s).unwrap();
    let config = serde_json::json!({
        "dictionary": {"csv": {"atoms": tmp.path().join("atoms.csv")}},
        "data": tmp.path().join("S.csv"),
        "stop": {"max_iterations": 2},
    });
    std::fs::write(
        tmp.path().join("cfg.json"),
        serde_json::to_string(&config).unwrap(),
    )
    .unwrap();
    let out = tmp.path().join("out");
    let result = run(
        &[
            "solve",
            "--config",
            "cfg.json",
            "--output",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(code(&result), 3);
    let (solution, record) = read_solution(&out).unwrap();
    assert!(record.stagnated);
    assert!(solution.patterns.is_empty());
}

#[test]
fn analyze_orthonormal_dictionary() {
    let tmp = TempDir::new().unwrap();
    // Order-1 B-spline columns are an identity dictionary.
    let config = serde_json::json!({
        "dictionary": {"builder": {"kind": "bspline", "t": 8, "max_order": 1}},
        "stop": {"max_iterations": 1},
    });
    std::fs::write(
        tmp.path().join("cfg.json"),
        serde_json::to_string(&config).unwrap(),
    )
    .unwrap();
    let result = run(
        &["analyze", "--config", "cfg.json", "--sparsity", "3", "--output", "a"],
        tmp.path(),
    );
    assert_eq!(code(&result), 0);
    let report: gmomp::analysis::RecoveryReport = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("a").join("recovery.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report.beta, 0.0);
    assert!(report.condition_beta);
    assert!(report.condition_exact);
    assert_eq!(report.babel_values, vec![0.0; 4]);

    // Support size at or beyond the atom count is a domain error.
    let result = run(
        &["analyze", "--config", "cfg.json", "--sparsity", "8"],
        tmp.path(),
    );
    assert_eq!(code(&result), 2);
}

#[test]
fn bench_slope_writes_expected_groups() {
    let tmp = TempDir::new().unwrap();
    let config = serde_json::json!({
        "experiment": "slope-sweep",
        "size": 16,
        "angles_deg": [0.0, 15.0, 30.0, 45.0],
        "trials": 1,
        "base_seed": 5,
    });
    std::fs::write(
        tmp.path().join("bench.json"),
        serde_json::to_string(&config).unwrap(),
    )
    .unwrap();
    let result = run(
        &["bench", "--config", "bench.json", "--output", "b"],
        tmp.path(),
    );
    assert_eq!(code(&result), 0);
    let csv = std::fs::read_to_string(tmp.path().join("b").join("results.csv")).unwrap();
    let mut groups = std::collections::BTreeSet::new();
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        groups.insert((fields[0].to_string(), fields[1].to_string()));
    }
    // 4 methods x 4 angles.
    assert_eq!(groups.len(), 16);
    assert!(std::fs::metadata(tmp.path().join("b").join("summary.json")).is_ok());
}

#[test]
fn postprocess_clean_diagonal_is_identity() {
    let tmp = TempDir::new().unwrap();
    let n = 24;
    let (config, _) = write_slope_fixture(tmp.path(), n, 45.0);
    let out = tmp.path().join("out");
    let result = run(
        &[
            "solve",
            "--config",
            config.to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(code(&result), 0);
    let result = run(
        &[
            "postprocess",
            "--solution",
            out.to_str().unwrap(),
            "--pattern-degree",
            "1",
        ],
        tmp.path(),
    );
    assert_eq!(code(&result), 0, "{}", String::from_utf8_lossy(&result.stderr));
    let denoised = out.join("denoised");
    let before = std::fs::read(out.join(io::PATTERNS_TXT)).unwrap();
    let after = std::fs::read(denoised.join(io::PATTERNS_TXT)).unwrap();
    assert_eq!(before, after);
    let x0 = read_matrix_csv(&out.join(io::X_CSV)).unwrap();
    let x1 = read_matrix_csv(&denoised.join(io::X_CSV)).unwrap();
    for (a, b) in x0.iter().zip(x1.iter()) {
        assert!((a - b).abs() < 1e-12);
    }
    let structures: Vec<gmomp::postprocess::FittedStructure> = serde_json::from_str(
        &std::fs::read_to_string(denoised.join("structures.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(structures.len(), 1);
    // The diagonal is the line p = m.
    assert!((structures[0].coefficients[1] - 1.0).abs() < 1e-8);
}

#[test]
fn postprocess_recovers_noised_constant_row() {
    let tmp = TempDir::new().unwrap();
    let n = 64;
    let d = gmomp::dictionary::gaussian_conv_dictionary(n, 2.5f64.sqrt()).unwrap();
    let clean = gmomp::experiments::constant_row_matrix(n);
    let noised = gmomp::experiments::add_uniform_pattern_noise(&clean, 2.0, 77).unwrap();
    let s = d.atoms().dot(&noised);
    io::write_matrix_csv(&tmp.path().join("S.csv"), &s).unwrap();
    let config = serde_json::json!({
        "dictionary": {"builder": {"kind": "gaussian", "t": n, "std_dev": 2.5f64.sqrt()}},
        "data": tmp.path().join("S.csv"),
        "sigma": 1.0,
        "tau": 5.0,
        "stop": {"max_iterations": 1},
        "postprocess": {"pattern_degree": 4, "delta": 0.0},
    });
    std::fs::write(
        tmp.path().join("cfg.json"),
        serde_json::to_string(&config).unwrap(),
    )
    .unwrap();
    let out = tmp.path().join("out");
    assert_eq!(
        code(&run(
            &["solve", "--config", "cfg.json", "--output", out.to_str().unwrap()],
            tmp.path()
        )),
        0
    );
    assert_eq!(
        code(&run(
            &["postprocess", "--solution", out.to_str().unwrap()],
            tmp.path()
        )),
        0
    );
    let structures: Vec<gmomp::postprocess::FittedStructure> = serde_json::from_str(
        &std::fs::read_to_string(out.join("denoised").join("structures.json")).unwrap(),
    )
    .unwrap();
    // The planted row is 31 (0-based); the fitted constant term sits near it.
    assert!((structures[0].coefficients[0] - 31.0).abs() < 1.5);
}

#[test]
fn postprocess_rejects_non_1d_parameter_space() {
    let tmp = TempDir::new().unwrap();
    let n = 12;
    let d = gmomp::dictionary::bspline_dictionary(n, 2).unwrap();
    let mut x = Array2::zeros((d.n_atoms(), n));
    for k in 0..n {
        x[[k, k]] = 1.0;
    }
    let s = d.atoms().dot(&x);
    io::write_matrix_csv(&tmp.path().join("S.csv"), &s).unwrap();
    let config = serde_json::json!({
        "dictionary": {"builder": {"kind": "bspline", "t": n, "max_order": 2}},
        "data": tmp.path().join("S.csv"),
        "sigma": "inf",
        "tau": "inf",
        "stop": {"max_iterations": 1},
    });
    std::fs::write(
        tmp.path().join("cfg.json"),
        serde_json::to_string(&config).unwrap(),
    )
    .unwrap();
    let out = tmp.path().join("out");
    assert_eq!(
        code(&run(
            &["solve", "--config", "cfg.json", "--output", out.to_str().unwrap()],
            tmp.path()
        )),
        0
    );
    let result = run(
        &["postprocess", "--solution", out.to_str().unwrap()],
        tmp.path(),
    );
    assert_eq!(code(&result), 2);
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("1-dimensional"), "{stderr}");
}

#[test]
fn dict_exports_reproducible_sidecar() {
    let tmp = TempDir::new().unwrap();
    let config = serde_json::json!({
        "dictionary": {"builder": {"kind": "gabor", "t": 32, "theta": 6.8486,
                        "phi": 14.685, "psi": -2.0836, "dt": 0.01}},
        "stop": {"max_iterations": 1},
    });
    std::fs::write(
        tmp.path().join("cfg.json"),
        serde_json::to_string(&config).unwrap(),
    )
    .unwrap();
    assert_eq!(
        code(&run(
            &["dict", "--config", "cfg.json", "--output", "d"],
            tmp.path()
        )),
        0
    );
    let atoms = read_matrix_csv(&tmp.path().join("d").join("atoms.csv")).unwrap();
    assert_eq!(atoms.dim(), (32, 32));
    let sidecar: gmomp::io::DictionarySidecar = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("d").join("dict.json")).unwrap(),
    )
    .unwrap();
    let rebuilt = sidecar.builder.unwrap().build().unwrap();
    for (a, b) in rebuilt.atoms().iter().zip(atoms.iter()) {
        assert_eq!(a, b);
    }
}
