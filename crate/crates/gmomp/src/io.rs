//! File formats: CSV matrices and point spaces, the line-oriented pattern
//! format, dictionary sidecars, and the run record accompanying solver
//! outputs. Floats are written in shortest round-trip form so re-parsing
//! reproduces them exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dictionary::{Dictionary, DictionaryBuilder};
use crate::error::{Error, Result};
use crate::solver::{Solution, StopCriteria};
use crate::spaces::{FeasibleParams, MetricKind, Pattern, PointSpace};

pub const X_CSV: &str = "X.csv";
pub const PATTERNS_TXT: &str = "patterns.txt";
pub const RUN_JSON: &str = "run.json";

/// JSON encoding for extended reals: finite values as numbers, infinity as
/// the string "inf".
pub mod extended_real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Raw::Text(t) => Err(de::Error::custom(format!(
                "expected a number or \"inf\", got {t:?}"
            ))),
        }
    }
}

/// Same encoding for optional extended reals.
pub mod extended_real_opt {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) if x.is_infinite() => s.serialize_str("inf"),
            Some(x) => s.serialize_f64(*x),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Option::<Raw>::deserialize(d)? {
            None => Ok(None),
            Some(Raw::Num(v)) => Ok(Some(v)),
            Some(Raw::Text(t)) if t == "inf" => Ok(Some(f64::INFINITY)),
            Some(Raw::Text(t)) => Err(de::Error::custom(format!(
                "expected a number or \"inf\", got {t:?}"
            ))),
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Writes a matrix as headerless CSV, one row per line.
pub fn write_matrix_csv(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn parse_numeric_row(line: &str) -> Option<Vec<f64>> {
    let mut out = Vec::new();
    for field in line.split(',') {
        match field.trim().parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) => return None,
        }
    }
    Some(out)
}

/// Reads a CSV matrix; a single leading header line is detected and skipped
/// when its fields do not parse as numbers.
pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let reader = BufReader::new(open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_numeric_row(&line) {
            Some(row) => rows.push(row),
            None if lineno == 0 => continue,
            None => {
                return Err(Error::Format(format!(
                    "{}: line {} is not numeric",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Format(format!("{}: no data rows", path.display())));
    }
    let ncols = rows[0].len();
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::Format(format!(
            "{}: row {} has {} fields, expected {ncols}",
            path.display(),
            bad + 1,
            rows[bad].len()
        )));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let nrows = flat.len() / ncols;
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Point spaces serialize as CSV with one row per point.
pub fn write_point_space_csv(path: &Path, space: &PointSpace) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    for i in 0..space.len() {
        let line: Vec<String> = space.point(i).iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_point_space_csv(path: &Path, metric: MetricKind) -> Result<PointSpace> {
    let m = read_matrix_csv(path)?;
    let points: Vec<Vec<f64>> = m.rows().into_iter().map(|r| r.to_vec()).collect();
    PointSpace::new(points, metric)
}

/// Pattern file: one `iteration,atom,measurement,amplitude` line per pair,
/// 1-based indices, preceded by a header line.
pub fn write_patterns(path: &Path, patterns: &[Pattern], x: &Array2<f64>) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    writeln!(w, "iteration,atom,measurement,amplitude")?;
    for (l, pattern) in patterns.iter().enumerate() {
        for (atom, measurement) in pattern.pairs() {
            writeln!(
                w,
                "{},{},{},{}",
                l + 1,
                atom + 1,
                measurement + 1,
                fmt_f64(x[[atom, measurement]])
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_patterns(path: &Path) -> Result<Vec<Pattern>> {
    let reader = BufReader::new(open(path)?);
    let mut patterns: Vec<Pattern> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || (lineno == 0 && trimmed.starts_with("iteration")) {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Format(format!(
                "{}: line {} has {} fields, expected 4",
                path.display(),
                lineno + 1,
                fields.len()
            )));
        }
        let parse_index = |s: &str, what: &str| -> Result<usize> {
            s.trim().parse::<usize>().map_err(|_| {
                Error::Format(format!(
                    "{}: line {}: bad {what} {s:?}",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        let iteration = parse_index(fields[0], "iteration")?;
        let atom = parse_index(fields[1], "atom")?;
        let measurement = parse_index(fields[2], "measurement")?;
        if iteration == 0 || atom == 0 || measurement == 0 {
            return Err(Error::Format(format!(
                "{}: line {}: indices are 1-based",
                path.display(),
                lineno + 1
            )));
        }
        while patterns.len() < iteration {
            patterns.push(Pattern::new());
        }
        patterns[iteration - 1].insert(atom - 1, measurement - 1)?;
    }
    Ok(patterns)
}

/// Metadata written next to X.csv and patterns.txt; enough to re-assemble
/// the in-memory solution and to reproduce the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub config_hash: String,
    pub method: String,
    pub params: FeasibleParams,
    pub stop: StopCriteria,
    pub floor_used: f64,
    pub residual_norms: Vec<f64>,
    pub weakness_trace: Vec<f64>,
    pub lambda: Option<f64>,
    pub stagnated: bool,
    /// Echo of the effective configuration the run was made from.
    pub config: serde_json::Value,
}

pub fn write_run_record(path: &Path, record: &RunRecord) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, record)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_run_record(path: &Path) -> Result<RunRecord> {
    Ok(serde_json::from_reader(BufReader::new(open(path)?))?)
}

/// Writes X.csv, patterns.txt and run.json into `dir`.
pub fn write_solution(dir: &Path, solution: &Solution, record: &RunRecord) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_matrix_csv(&dir.join(X_CSV), &solution.x)?;
    write_patterns(&dir.join(PATTERNS_TXT), &solution.patterns, &solution.x)?;
    write_run_record(&dir.join(RUN_JSON), record)?;
    Ok(())
}

/// Re-assembles a solution and its record from a solve output directory.
pub fn read_solution(dir: &Path) -> Result<(Solution, RunRecord)> {
    let x = read_matrix_csv(&dir.join(X_CSV))?;
    let patterns = read_patterns(&dir.join(PATTERNS_TXT))?;
    let record = read_run_record(&dir.join(RUN_JSON))?;
    let solution = Solution {
        x,
        patterns,
        residual_norms: record.residual_norms.clone(),
        weakness_trace: record.weakness_trace.clone(),
        stagnated: record.stagnated,
    };
    Ok((solution, record))
}

/// Sidecar describing how a dictionary on disk was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionarySidecar {
    pub builder: Option<DictionaryBuilder>,
    pub n_samples: usize,
    pub n_atoms: usize,
    pub metric: MetricKind,
}

/// Writes atoms.csv, pspace.csv and dict.json into `dir`.
pub fn write_dictionary(
    dir: &Path,
    dictionary: &Dictionary,
    builder: Option<&DictionaryBuilder>,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_matrix_csv(&dir.join("atoms.csv"), dictionary.atoms())?;
    write_point_space_csv(&dir.join("pspace.csv"), dictionary.pspace())?;
    let sidecar = DictionarySidecar {
        builder: builder.cloned(),
        n_samples: dictionary.n_samples(),
        n_atoms: dictionary.n_atoms(),
        metric: dictionary.pspace().metric(),
    };
    let mut w = BufWriter::new(create(&dir.join("dict.json"))?);
    serde_json::to_writer_pretty(&mut w, &sidecar)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Loads a dictionary from an atoms CSV, with an optional parameter-space
/// CSV; without one, parameter points default to the column index.
pub fn read_dictionary_csv(
    atoms_path: &Path,
    pspace: Option<(&Path, MetricKind)>,
) -> Result<Dictionary> {
    let atoms = read_matrix_csv(atoms_path)?;
    let space = match pspace {
        Some((path, metric)) => read_point_space_csv(path, metric)?,
        None => PointSpace::indexed(atoms.ncols()),
    };
    Dictionary::new(atoms, space)
}
