//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured quantities. Criteria 1 and 6 run full-size benchmarks and
//! take a few minutes; run with
//! `cargo test -p gmomp-cli --test acceptance -- --nocapture` to watch.

use std::path::{Path, PathBuf};
use std::time::Instant;

use gmomp::analysis::{
    babel, bernoulli_connectivity_bound, coloring_reduction, simulate_path_connectivity,
    ColoringReduction, Graph,
};
use gmomp::dictionary::{bspline_dictionary, bspline_eval, gaussian_conv_dictionary};
use gmomp::experiments::{
    run_noise_experiment, run_slope_sweep, ExperimentConfig, ExperimentKind, SolverSettings,
    METHOD_GM, METHOD_PER_COLUMN, METHOD_SOMP, METHOD_VECTORIZED,
};
use gmomp::spaces::{are_intersecting, is_feasible};
use gmomp::{
    gm_omp, greedy_choice, per_column_omp, somp, vectorized_omp, Dictionary, FeasibleParams,
    MeasurementMatrix, Pattern, PointSpace, StopCriteria,
};
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut m = Array2::zeros((rows, cols));
    for v in m.iter_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    m
}

fn random_dictionary(t: usize, p: usize, rng: &mut ChaCha8Rng) -> Dictionary {
    Dictionary::new(random_matrix(t, p, rng), PointSpace::indexed(p)).unwrap()
}

fn random_orthonormal(n: usize, rng: &mut ChaCha8Rng) -> Dictionary {
    let mut m = random_matrix(n, n, rng);
    for _round in 0..2 {
        for j in 0..n {
            for prev in 0..j {
                let dot: f64 = (0..n).map(|i| m[[i, j]] * m[[i, prev]]).sum();
                for i in 0..n {
                    m[[i, j]] -= dot * m[[i, prev]];
                }
            }
            let norm: f64 = (0..n).map(|i| m[[i, j]] * m[[i, j]]).sum::<f64>().sqrt();
            for i in 0..n {
                m[[i, j]] /= norm;
            }
        }
    }
    Dictionary::new(m, PointSpace::indexed(n)).unwrap()
}

/// Criterion 1: slope-sweep reproduction at N = 256 over ten angles.
#[test]
fn acceptance_01_slope_sweep() {
    let start = Instant::now();
    let n = 256;
    let angles: Vec<f64> = (0..=9).map(|i| 5.0 * i as f64).collect();
    let config = ExperimentConfig {
        experiment: ExperimentKind::SlopeSweep,
        size: n,
        angles_deg: angles.clone(),
        noise_levels: vec![],
        trials: 1,
        base_seed: 0,
        solver: SolverSettings::default(),
        output: None,
    };
    let table = run_slope_sweep(&config).unwrap();
    let mut worst_gm: f64 = 0.0;
    let mut worst_base: f64 = 0.0;
    for &angle in &angles {
        let gm_rel = table
            .get(METHOD_GM, angle, "relative_frobenius_error")
            .unwrap();
        let gm_nnz = table.get(METHOD_GM, angle, "nnz").unwrap();
        assert!(gm_rel <= 1e-6, "gm-omp at {angle}: rel err {gm_rel}");
        assert_eq!(gm_nnz, n as f64, "gm-omp nnz at {angle}");
        worst_gm = worst_gm.max(gm_rel);
        for method in [METHOD_PER_COLUMN, METHOD_VECTORIZED] {
            let rel = table
                .get(method, angle, "relative_frobenius_error")
                .unwrap();
            assert!(rel <= 1e-4, "{method} at {angle}: rel err {rel}");
            worst_base = worst_base.max(rel);
        }
        if angle >= 10.0 {
            let somp_nnz = table.get(METHOD_SOMP, angle, "nnz").unwrap();
            assert!(
                somp_nnz >= 10.0 * n as f64,
                "s-omp nnz at {angle}: {somp_nnz}"
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "slope sweep took {elapsed:.1}s");
    println!(
        "criterion 01 PASS: slope sweep, gm rel err <= {worst_gm:.2e}, \
         baseline rel err <= {worst_base:.2e}, nnz exact, {elapsed:.1}s"
    );
}

/// Criterion 2: exact recovery of three planted non-intersecting patterns
/// under an orthonormal dictionary, 100/100 instances.
#[test]
fn acceptance_02_planted_pattern_recovery() {
    let n = 64;
    let mspace = PointSpace::indexed(n);
    let params = FeasibleParams::new(1.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let instances = 100;
    for instance in 0..instances {
        let d = random_orthonormal(n, &mut rng);
        // Three measurement blocks with gaps over sigma, 1-Lipschitz row
        // walks, amplitude tiers with ratio >= 2.
        let mut x = Array2::zeros((n, n));
        let mut planted = Vec::new();
        let mut cursor = rng.random_range(0..4);
        for tier in 0..3 {
            let len = rng.random_range(8..13);
            let base = [16.0, 4.0, 1.0][tier];
            let mut row = rng.random_range(8..(n - 8)) as i64;
            let mut pattern = Pattern::new();
            for k in cursor..cursor + len {
                row = (row + rng.random_range(-1..=1)).clamp(0, n as i64 - 1);
                let amp = base
                    * rng.random_range(1.0..1.4)
                    * if rng.random::<bool>() { 1.0 } else { -1.0 };
                x[[row as usize, k]] = amp;
                pattern.insert(row as usize, k).unwrap();
            }
            cursor += len + rng.random_range(2..4);
            planted.push(pattern);
        }
        assert!(cursor <= n);
        for a in 0..3 {
            for b in (a + 1)..3 {
                assert!(!are_intersecting(
                    &planted[a],
                    &planted[b],
                    &mspace,
                    d.pspace(),
                    &params
                )
                .unwrap());
            }
        }
        let s = d.atoms().dot(&x);
        let sol = gm_omp(
            &d,
            &MeasurementMatrix::indexed(s),
            &params,
            &StopCriteria::iterations(3),
        )
        .unwrap();
        assert_eq!(
            sol.patterns, planted,
            "instance {instance}: iteration patterns differ from planted"
        );
        let expected: Vec<(usize, usize)> = {
            let mut v: Vec<(usize, usize)> = x
                .indexed_iter()
                .filter(|(_, v)| **v != 0.0)
                .map(|((j, k), _)| (j, k))
                .collect();
            v.sort_unstable();
            v
        };
        assert_eq!(sol.support(), expected, "instance {instance}: support");
    }
    println!("criterion 02 PASS: planted patterns recovered in {instances}/{instances} instances");
}

fn brute_force_max_inf(
    c: &Array2<f64>,
    mspace: &PointSpace,
    pspace: &PointSpace,
    params: &FeasibleParams,
) -> f64 {
    let (p, m) = c.dim();
    let mut best = 0.0f64;
    let mut assign = vec![0usize; m]; // 0 = unused, 1..=p picks atom - 1
    'outer: loop {
        let pairs: Vec<(usize, usize)> = assign
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0)
            .map(|(k, &a)| (a - 1, k))
            .collect();
        if !pairs.is_empty() {
            let pattern = Pattern::from_pairs(pairs.iter().copied()).unwrap();
            if is_feasible(&pattern, mspace, pspace, params).unwrap() {
                let v = pairs.iter().map(|&(j, k)| c[[j, k]]).fold(0.0, f64::max);
                if v > best {
                    best = v;
                }
            }
        }
        let mut i = 0;
        loop {
            if i == m {
                break 'outer;
            }
            assign[i] += 1;
            if assign[i] <= p {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }
    best
}

/// Criterion 3: the greedy selection attains the brute-force maximum of the
/// infinity norm over all feasible patterns, 200/200 random instances.
#[test]
fn acceptance_03_greedy_infinity_norm_optimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let sigma_grid = [0.0, 0.5, 1.5, f64::INFINITY];
    let tau_grid = [0.0, 0.5, 1.0, 2.0, f64::INFINITY];
    let instances = 200;
    for _ in 0..instances {
        let p = rng.random_range(1..=5);
        let m = rng.random_range(1..=5);
        let mut c = Array2::zeros((p, m));
        for v in c.iter_mut() {
            *v = rng.random_range(0.0..1.0);
        }
        let mut mpoints: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..4.0)).collect();
        mpoints.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ppoints: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..4.0)).collect();
        ppoints.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let mspace = PointSpace::line(mpoints).unwrap();
        let pspace = PointSpace::line(ppoints).unwrap();
        let params = FeasibleParams::new(
            sigma_grid[rng.random_range(0..sigma_grid.len())],
            tau_grid[rng.random_range(0..tau_grid.len())],
        )
        .unwrap();
        let pattern = greedy_choice(&c, &mspace, &pspace, &params, 0.0, None, None).unwrap();
        assert!(is_feasible(&pattern, &mspace, &pspace, &params).unwrap());
        let achieved = pattern
            .pairs()
            .map(|(j, k)| c[[j, k]])
            .fold(0.0, f64::max);
        let best = brute_force_max_inf(&c, &mspace, &pspace, &params);
        assert_eq!(achieved, best, "greedy {achieved} vs brute force {best}");
    }
    println!("criterion 03 PASS: greedy infinity-norm optimum matched in {instances}/{instances} instances");
}

/// Criterion 4: special-case equivalences are entrywise exact on 50 random
/// problems.
#[test]
fn acceptance_04_special_case_equivalences() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let problems = 50;
    for _ in 0..problems {
        let t = rng.random_range(8..14);
        let p = rng.random_range(4..10);
        let m = rng.random_range(3..8);
        let d = random_dictionary(t, p, &mut rng);
        let s = random_matrix(t, m, &mut rng);
        let data = MeasurementMatrix::indexed(s);
        let stop = StopCriteria::iterations(3).with_correlation_floor(0.0);

        let gm_pc = gm_omp(&d, &data, &FeasibleParams::per_column(), &stop).unwrap();
        let pc = per_column_omp(&d, &data, &stop).unwrap();
        assert_eq!(gm_pc.x, pc.x);
        assert_eq!(gm_pc.patterns, pc.patterns);

        let gm_vec = gm_omp(&d, &data, &FeasibleParams::single_entry(), &stop).unwrap();
        let vec = vectorized_omp(&d, &data, &stop).unwrap();
        assert_eq!(gm_vec.x, vec.x);
        assert_eq!(gm_vec.patterns, vec.patterns);

        let gm_row = gm_omp(&d, &data, &FeasibleParams::row_sparse(), &stop).unwrap();
        let row = somp(&d, &data, f64::INFINITY, &stop).unwrap();
        assert_eq!(gm_row.x, row.x);
        assert_eq!(gm_row.patterns, row.patterns);
    }
    println!("criterion 04 PASS: all three equivalences entrywise exact on {problems}/{problems} problems");
}

/// Criterion 5: the connectivity bound value and its Monte-Carlo validation.
#[test]
fn acceptance_05_bernoulli_connectivity_bound() {
    let bound = bernoulli_connectivity_bound(0.25, 6, 1000).unwrap();
    assert!(
        (bound - 0.7843).abs() <= 1e-4,
        "bound {bound} vs expected 0.7843"
    );
    let trials = 10_000;
    let empirical = simulate_path_connectivity(0.25, 6, 1000, trials, 99).unwrap();
    let se = (empirical * (1.0 - empirical) / trials as f64).sqrt();
    assert!(
        empirical >= bound - 3.0 * se,
        "empirical {empirical} below bound {bound} - 3 se {se}"
    );
    println!(
        "criterion 05 PASS: bound {bound:.5}, empirical {empirical:.5} over {trials} trials (se {se:.5})"
    );
}

/// Criterion 6: uniform-noise pipeline ordering at N = 256, 100 trials per
/// level.
#[test]
fn acceptance_06_uniform_noise_pipeline() {
    let start = Instant::now();
    let config = ExperimentConfig {
        experiment: ExperimentKind::UniformNoise,
        size: 256,
        angles_deg: vec![],
        noise_levels: vec![1.0, 2.0, 3.0, 4.0],
        trials: 100,
        base_seed: 7,
        solver: SolverSettings::default(),
        output: None,
    };
    let table = run_noise_experiment(&config).unwrap();
    for &level in &config.noise_levels {
        let gm = table.get(METHOD_GM, level, "mse_mean").unwrap();
        for method in [METHOD_PER_COLUMN, METHOD_VECTORIZED, METHOD_SOMP] {
            let base = table.get(method, level, "mse_mean").unwrap();
            assert!(
                gm < base,
                "at eps_u {level}: gm {gm} not below {method} {base}"
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "noise pipeline took {elapsed:.1}s");
    let worst = config
        .noise_levels
        .iter()
        .map(|&l| table.get(METHOD_GM, l, "mse_mean").unwrap())
        .fold(0.0f64, f64::max);
    println!(
        "criterion 06 PASS: denoised gm mse below every baseline at all levels \
         (worst gm mse {worst:.2e}), {elapsed:.1}s"
    );
}

fn babel_oracle(d: &Dictionary, l: usize) -> f64 {
    let g = d.gram();
    let p = d.n_atoms();
    let mut best = 0.0f64;
    for mask in 0u32..(1u32 << p) {
        if (mask.count_ones() as usize) > l {
            continue;
        }
        for omega in 0..p {
            if mask & (1 << omega) != 0 {
                continue;
            }
            let mut vals: Vec<f64> = (0..p)
                .filter(|j| mask & (1 << j) != 0)
                .map(|j| g[[j, omega]].abs())
                .collect();
            vals.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
            let sum: f64 = vals.iter().sum();
            if sum > best {
                best = sum;
            }
        }
    }
    best
}

/// Criterion 7: the sorted-column Babel computation equals exhaustive subset
/// enumeration exactly.
#[test]
fn acceptance_07_babel_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let dictionaries = 100;
    for _ in 0..dictionaries {
        let p = rng.random_range(2..=8);
        let t = rng.random_range(4..=10);
        let d = random_dictionary(t, p, &mut rng);
        for l in 0..p {
            let fast = babel(&d, l).unwrap();
            let slow = babel_oracle(&d, l);
            assert_eq!(fast, slow, "babel({l}) mismatch: {fast} vs {slow}");
        }
    }
    println!("criterion 07 PASS: babel equals subset enumeration on {dictionaries}/{dictionaries} dictionaries");
}

fn is_colorable(g: &Graph, colors: usize) -> bool {
    let m = g.n_vertices();
    let mut assign = vec![0usize; m];
    loop {
        if g.is_proper_coloring(&assign) {
            return true;
        }
        let mut i = 0;
        loop {
            if i == m {
                return false;
            }
            assign[i] += 1;
            if assign[i] < colors {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }
}

/// Brute-force maximum of the 1-norm of the reduction's correlation matrix
/// over feasible patterns. Subsets of feasible patterns stay feasible (the
/// radius is infinite and the Lipschitz condition is pairwise), so zero
/// entries never help and it suffices to scan label-matching assignments.
fn reduction_max_one_norm(red: &ColoringReduction, colors: usize) -> f64 {
    let m = red.mspace.len();
    let mut best = 0.0f64;
    let mut assign = vec![0usize; m]; // 0 = skip vertex, 1..=colors
    'outer: loop {
        let pairs: Vec<(usize, usize)> = assign
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0)
            .map(|(v, &a)| ((a - 1) * m + v, v))
            .collect();
        if !pairs.is_empty() {
            let pattern = Pattern::from_pairs(pairs.iter().copied()).unwrap();
            if is_feasible(&pattern, &red.mspace, &red.pspace, &red.params).unwrap() {
                let value: f64 = pairs
                    .iter()
                    .map(|&(atom, v)| red.correlation[[atom, v]].abs())
                    .sum();
                if value > best {
                    best = value;
                }
            }
        }
        let mut i = 0;
        loop {
            if i == m {
                break 'outer;
            }
            assign[i] += 1;
            if assign[i] <= colors {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }
    best
}

fn check_reduction(graph: &Graph, colors: usize) {
    let red = coloring_reduction(graph, colors).unwrap();
    let n = red.padded_degree as f64;
    let m = graph.n_vertices();
    for a in 0..red.pspace.len() {
        for b in (a + 1)..red.pspace.len() {
            let (ca, va) = red.atom_labels[a];
            let (cb, vb) = red.atom_labels[b];
            let expected = if ca == cb && graph.has_edge(va, vb) {
                (2.0 * n + 2.0).sqrt()
            } else {
                (2.0 * n).sqrt()
            };
            let got = red.pspace.distance(a, b).unwrap();
            assert!(
                (got - expected).abs() <= 1e-12,
                "distance (({ca},{va}),({cb},{vb})): {got} vs {expected}"
            );
        }
    }
    let attained = reduction_max_one_norm(&red, colors);
    let colorable = is_colorable(graph, colors);
    assert_eq!(
        attained == m as f64,
        colorable,
        "graph with {} vertices, {colors} colors: max {attained}, colorable {colorable}",
        m
    );
}

/// Criterion 8: the coloring-reduction fixture has the stated distances and
/// its feasibility optimum detects colorability.
#[test]
fn acceptance_08_coloring_reduction() {
    let k3 = Graph::complete(3);
    for colors in 1..=3 {
        check_reduction(&k3, colors);
    }
    assert!(!is_colorable(&k3, 2));
    assert!(is_colorable(&k3, 3));

    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for g_idx in 0..5 {
        let m = rng.random_range(2..=6);
        let mut edges = Vec::new();
        for u in 0..m {
            for v in (u + 1)..m {
                if rng.random::<f64>() < 0.5 {
                    edges.push((u, v));
                }
            }
        }
        let graph = Graph::new(m, edges).unwrap();
        for colors in 1..=3 {
            check_reduction(&graph, colors);
        }
        let _ = g_idx;
    }
    println!("criterion 08 PASS: distances match and colorability coincides with attainability (K3 + 5 random graphs)");
}

fn gauss5(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [
        -0.9061798459386640,
        -0.5384693101056831,
        0.0,
        0.5384693101056831,
        0.9061798459386640,
    ];
    const W: [f64; 5] = [
        0.23692688505618908,
        0.47862867049936647,
        0.5688888888888889,
        0.47862867049936647,
        0.23692688505618908,
    ];
    let h = (b - a) / 2.0;
    let mid = (a + b) / 2.0;
    h * X.iter().zip(&W).map(|(x, w)| w * f(mid + h * x)).sum::<f64>()
}

/// Integrates the order n-1 spline over a unit window, split at its knots so
/// every piece is polynomial and the quadrature exact.
fn bspline_quadrature_oracle(n: usize, t: f64) -> f64 {
    let prev = n - 1;
    let half_prev = prev as f64 / 2.0;
    let mut cuts = vec![-0.5];
    for k in 0..=prev {
        let tau = t - (k as f64 - half_prev);
        if tau > -0.5 && tau < 0.5 {
            cuts.push(tau);
        }
    }
    cuts.push(0.5);
    cuts.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let f = |tau: f64| bspline_eval(prev, t - tau).unwrap();
    cuts.windows(2).map(|w| gauss5(&f, w[0], w[1])).sum()
}

/// Criterion 9: spline recursion vs quadrature, support length, partition of
/// unity, and the full dictionary shape.
#[test]
fn acceptance_09_bspline_dictionary() {
    let mut worst = 0.0f64;
    for n in 2..=7usize {
        let mut t = -4.0;
        while t <= 4.0 {
            let direct = bspline_eval(n, t).unwrap();
            let oracle = bspline_quadrature_oracle(n, t);
            worst = worst.max((direct - oracle).abs());
            t += 0.05;
        }
    }
    assert!(worst <= 1e-8, "recursion vs quadrature: {worst}");

    for n in 1..=7usize {
        let half = n as f64 / 2.0;
        let mut t = half + 0.01;
        while t <= half + 2.0 {
            assert_eq!(bspline_eval(n, t).unwrap(), 0.0);
            assert_eq!(bspline_eval(n, -t).unwrap(), 0.0);
            t += 0.01;
        }
    }

    let mut worst_pu = 0.0f64;
    for n in 1..=7usize {
        let mut t = -1.0;
        while t < 1.0 {
            let sum: f64 = (-16i64..=16)
                .map(|k| bspline_eval(n, t - k as f64).unwrap())
                .sum();
            worst_pu = worst_pu.max((sum - 1.0).abs());
            t += 0.01;
        }
    }
    assert!(worst_pu <= 1e-8, "partition of unity: {worst_pu}");

    let d = bspline_dictionary(96, 7).unwrap();
    assert_eq!(d.n_atoms(), 96 * 7);
    println!(
        "criterion 09 PASS: quadrature gap {worst:.2e}, partition-of-unity gap {worst_pu:.2e}, 672 atoms"
    );
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gmomp")
}

fn run_cli(args: &[&str], cwd: &Path) {
    let out = std::process::Command::new(bin())
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    assert!(
        out.status.code() == Some(0),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn assert_dirs_byte_identical(a: &Path, b: &Path, files: &[&str]) {
    for f in files {
        let left = std::fs::read(a.join(f)).unwrap_or_else(|_| panic!("missing {a:?}/{f}"));
        let right = std::fs::read(b.join(f)).unwrap_or_else(|_| panic!("missing {b:?}/{f}"));
        assert_eq!(left, right, "{f} differs between runs");
    }
}

/// Criterion 10: every CLI command, run twice with identical configuration,
/// seed, and --threads 2, produces byte-identical outputs.
#[test]
fn acceptance_10_cli_determinism() {
    let tmp = tempfile::TempDir::new().unwrap();
    let root = tmp.path();

    // Shared solve fixture.
    let n = 64;
    let d = gaussian_conv_dictionary(n, 2.5f64.sqrt()).unwrap();
    let x = gmomp::experiments::make_slope_matrix(n, 30.0).unwrap();
    let s = d.atoms().dot(&x);
    gmomp::io::write_matrix_csv(&root.join("S.csv"), &s).unwrap();
    let solve_cfg = serde_json::json!({
        "dictionary": {"builder": {"kind": "gaussian", "t": n, "std_dev": 2.5f64.sqrt()}},
        "data": root.join("S.csv"),
        "sigma": 1.0,
        "tau": 1.0,
        "stop": {"max_iterations": 1},
        "seed": 11,
    });
    std::fs::write(
        root.join("solve.json"),
        serde_json::to_string(&solve_cfg).unwrap(),
    )
    .unwrap();
    // Analysis needs a dictionary whose threshold is defined.
    let analyze_cfg = serde_json::json!({
        "dictionary": {"builder": {"kind": "bspline", "t": 16, "max_order": 1}},
        "stop": {"max_iterations": 1},
    });
    std::fs::write(
        root.join("analyze.json"),
        serde_json::to_string(&analyze_cfg).unwrap(),
    )
    .unwrap();
    let bench_slope = serde_json::json!({
        "experiment": "slope-sweep", "size": 24,
        "angles_deg": [0.0, 45.0], "trials": 1, "base_seed": 3,
    });
    std::fs::write(
        root.join("bench_slope.json"),
        serde_json::to_string(&bench_slope).unwrap(),
    )
    .unwrap();
    let bench_bern = serde_json::json!({
        "experiment": "bernoulli-noise", "size": 32,
        "noise_levels": [0.25], "trials": 5, "base_seed": 3,
    });
    std::fs::write(
        root.join("bench_bern.json"),
        serde_json::to_string(&bench_bern).unwrap(),
    )
    .unwrap();

    let out = |name: &str, round: usize| -> PathBuf { root.join(format!("{name}{round}")) };
    for round in 0..2usize {
        let threads: &[&str] = &["--threads", "2"];
        run_cli(
            &[&["solve", "--config", "solve.json", "--output",
                out("solve", round).to_str().unwrap()], threads].concat(),
            root,
        );
        run_cli(
            &[&["analyze", "--config", "analyze.json", "--sparsity", "3", "--output",
                out("analyze", round).to_str().unwrap()], threads].concat(),
            root,
        );
        run_cli(
            &[&["bench", "--config", "bench_slope.json", "--output",
                out("bslope", round).to_str().unwrap()], threads].concat(),
            root,
        );
        run_cli(
            &[&["bench", "--config", "bench_bern.json", "--seed", "3", "--output",
                out("bbern", round).to_str().unwrap()], threads].concat(),
            root,
        );
        run_cli(
            &[&["dict", "--config", "solve.json", "--output",
                out("dict", round).to_str().unwrap()], threads].concat(),
            root,
        );
        run_cli(
            &[&["postprocess", "--solution", out("solve", round).to_str().unwrap(),
                "--pattern-degree", "1", "--output",
                out("post", round).to_str().unwrap()], threads].concat(),
            root,
        );
    }

    assert_dirs_byte_identical(
        &out("solve", 0),
        &out("solve", 1),
        &["X.csv", "patterns.txt", "run.json"],
    );
    assert_dirs_byte_identical(&out("analyze", 0), &out("analyze", 1), &["recovery.json"]);
    assert_dirs_byte_identical(
        &out("bslope", 0),
        &out("bslope", 1),
        &["results.csv", "summary.json"],
    );
    assert_dirs_byte_identical(
        &out("bbern", 0),
        &out("bbern", 1),
        &["results.csv", "summary.json"],
    );
    assert_dirs_byte_identical(
        &out("dict", 0),
        &out("dict", 1),
        &["atoms.csv", "pspace.csv", "dict.json"],
    );
    assert_dirs_byte_identical(
        &out("post", 0),
        &out("post", 1),
        &["X.csv", "patterns.txt", "structures.json", "run.json"],
    );
    println!("criterion 10 PASS: all commands byte-identical across repeated runs with --threads 2");
}
