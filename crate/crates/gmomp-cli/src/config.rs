//! JSON run configuration. Unknown keys are rejected everywhere so typos
//! fail loudly before any computation starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use gmomp::dictionary::DictionaryBuilder;
use gmomp::io::{read_dictionary_csv, read_matrix_csv, read_point_space_csv};
use gmomp::{Dictionary, Error, MetricKind, PointSpace, Result, StopCriteria};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSource {
    pub path: PathBuf,
    pub metric: MetricKind,
}

impl SpaceSource {
    pub fn load(&self) -> Result<PointSpace> {
        read_point_space_csv(&self.path, self.metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvDictionary {
    pub atoms: PathBuf,
    #[serde(default)]
    pub parameter_space: Option<SpaceSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DictionarySource {
    Builder(DictionaryBuilder),
    Csv(CsvDictionary),
}

impl DictionarySource {
    pub fn build(&self) -> Result<Dictionary> {
        match self {
            DictionarySource::Builder(builder) => builder.build(),
            DictionarySource::Csv(csv) => {
                let pspace = match &csv.parameter_space {
                    Some(src) => Some((src.path.as_path(), src.metric)),
                    None => None,
                };
                read_dictionary_csv(&csv.atoms, pspace)
            }
        }
    }

    pub fn builder(&self) -> Option<&DictionaryBuilder> {
        match self {
            DictionarySource::Builder(b) => Some(b),
            DictionarySource::Csv(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    GmOmp,
    PerColumnOmp,
    VectorizedOmp,
    SOmp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::GmOmp => "gm-omp",
            Method::PerColumnOmp => "per-column-omp",
            Method::VectorizedOmp => "vectorized-omp",
            Method::SOmp => "s-omp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostprocessConfig {
    #[serde(default = "default_pattern_degree")]
    pub pattern_degree: usize,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub amplitude_degree: Option<usize>,
}

fn default_pattern_degree() -> usize {
    4
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            pattern_degree: default_pattern_degree(),
            delta: 0.0,
            amplitude_degree: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dictionary: DictionarySource,
    /// CSV data matrix for solve runs.
    #[serde(default)]
    pub data: Option<PathBuf>,
    /// Measurement points; defaults to the column index on the line.
    #[serde(default)]
    pub measurement_space: Option<SpaceSource>,
    /// Overrides the parameter space the dictionary builder attaches.
    #[serde(default)]
    pub parameter_space: Option<SpaceSource>,
    #[serde(with = "gmomp::io::extended_real", default = "inf")]
    pub sigma: f64,
    #[serde(with = "gmomp::io::extended_real", default = "inf")]
    pub tau: f64,
    pub stop: StopCriteria,
    #[serde(default)]
    pub method: Method,
    /// Row-selection norm for the s-omp method.
    #[serde(with = "gmomp::io::extended_real", default = "one")]
    pub somp_lambda: f64,
    #[serde(default)]
    pub postprocess: Option<PostprocessConfig>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn inf() -> f64 {
    f64::INFINITY
}

fn one() -> f64 {
    1.0
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Builds the dictionary, applying a parameter-space override when set.
    pub fn dictionary(&self) -> Result<Dictionary> {
        let d = self.dictionary.build()?;
        match &self.parameter_space {
            Some(src) => Dictionary::new(d.atoms().clone(), src.load()?),
            None => Ok(d),
        }
    }

    pub fn load_data(&self) -> Result<ndarray::Array2<f64>> {
        let path = self.data.as_ref().ok_or_else(|| {
            Error::Format("config has no \"data\" entry, nothing to solve".into())
        })?;
        read_matrix_csv(path)
    }

    pub fn measurement_space(&self, n_measurements: usize) -> Result<PointSpace> {
        match &self.measurement_space {
            Some(src) => src.load(),
            None => Ok(PointSpace::indexed(n_measurements)),
        }
    }
}

/// Hash of the canonical JSON serialization; the output path is excluded so
/// re-running into a different directory reproduces byte-identical records.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let canonical = serde_json::to_string(value)?;
    let digest = Sha256::digest(canonical.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}
