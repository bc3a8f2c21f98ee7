//! Run configuration: a small TOML document with `[model]`, `[run]` and
//! `[quadrature]` sections.
//!
//! ```toml
//! [model]
//! beta_L = 1.0
//! beta_R = 3.0
//! gamma = 0.5
//! lambda = 0.3
//!
//! [run]
//! n_list = [32, 64, 128]
//! output = "out"
//! formats = ["csv", "json", "plot"]
//!
//! [quadrature]
//! abs_tol = 1e-12
//! rel_tol = 1e-10
//! max_subdivisions = 2000
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ChainParams, ModelError};
use crate::quadrature::QuadratureSpec;

pub const DEFAULT_N_LIST: [usize; 5] = [32, 64, 128, 256, 512];
pub const DEFAULT_OUTPUT: &str = "out";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: &str, message: impl Into<String>) -> Self {
        Self::Invalid {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl From<ModelError> for ConfigError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidParameter { name, message } => Self::invalid(name, message),
            other => Self::invalid("model", other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Plot,
}

impl FromStr for Format {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "plot" => Ok(Self::Plot),
            other => Err(ConfigError::invalid(
                "formats",
                format!("unknown format {other:?}"),
            )),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
            Self::Plot => "plot",
        })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    model: Option<RawModel>,
    run: Option<RawRun>,
    quadrature: Option<RawQuadrature>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(rename = "beta_L")]
    beta_left: Option<f64>,
    #[serde(rename = "beta_R")]
    beta_right: Option<f64>,
    gamma: Option<f64>,
    lambda: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    n_list: Option<Vec<i64>>,
    output: Option<String>,
    formats: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuadrature {
    abs_tol: Option<f64>,
    rel_tol: Option<f64>,
    max_subdivisions: Option<i64>,
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub beta_left: Option<f64>,
    pub beta_right: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub n_list: Option<Vec<usize>>,
    pub output: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub abs_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: ChainParams,
    pub theorem_domain: bool,
    pub warning: Option<String>,
    pub n_list: Vec<usize>,
    pub quadrature: QuadratureSpec,
    pub output: PathBuf,
    pub formats: Vec<Format>,
    /// Where each tolerance came from: `default`, `config` or `flag`.
    pub tolerance_source: BTreeMap<&'static str, &'static str>,
}

impl RunConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

/// Parses and validates a configuration document without command-line overrides.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    resolve(Some(text), &Overrides::default())
}

/// Merges an optional document with overrides, applies defaults and validates.
pub fn resolve(text: Option<&str>, ov: &Overrides) -> Result<RunConfig, ConfigError> {
    let doc: RawDocument = match text {
        Some(t) => toml::from_str(t).map_err(|e| ConfigError::Parse {
            line: e.span().map_or(1, |s| line_of(t, s.start)),
            message: e.message().to_string(),
        })?,
        None => RawDocument::default(),
    };
    let model = doc.model.unwrap_or_default();
    let run = doc.run.unwrap_or_default();
    let quad = doc.quadrature.unwrap_or_default();

    let need = |flag: Option<f64>, file: Option<f64>, key: &str| {
        flag.or(file)
            .ok_or_else(|| ConfigError::invalid(key, "missing required model parameter"))
    };
    let params = ChainParams::new(
        need(ov.beta_left, model.beta_left, "beta_L")?,
        need(ov.beta_right, model.beta_right, "beta_R")?,
        need(ov.gamma, model.gamma, "gamma")?,
        need(ov.lambda, model.lambda, "lambda")?,
    )?;

    let n_list: Vec<usize> = match (&ov.n_list, run.n_list) {
        (Some(v), _) => v.clone(),
        (None, Some(v)) => v
            .into_iter()
            .map(|n| {
                usize::try_from(n)
                    .map_err(|_| ConfigError::invalid("n_list", format!("{n} is negative")))
            })
            .collect::<Result<_, _>>()?,
        (None, None) => DEFAULT_N_LIST.to_vec(),
    };
    if n_list.is_empty() {
        return Err(ConfigError::invalid("n_list", "must be nonempty"));
    }
    if n_list.contains(&0) {
        return Err(ConfigError::invalid(
            "n_list",
            "block sizes must be positive",
        ));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::invalid("n_list", "must be strictly ascending"));
    }

    let formats = match (&ov.formats, run.formats) {
        (Some(f), _) => f.clone(),
        (None, Some(f)) => f.iter().map(|s| s.parse()).collect::<Result<_, _>>()?,
        (None, None) => vec![Format::Csv, Format::Json],
    };
    if formats.is_empty() {
        return Err(ConfigError::invalid(
            "formats",
            "must name at least one format",
        ));
    }
    let mut formats = formats;
    formats.sort();
    formats.dedup();

    let mut source = BTreeMap::new();
    let mut spec = QuadratureSpec::default();
    source.insert("abs_tol", "default");
    source.insert("rel_tol", "default");
    source.insert("max_subdivisions", "default");
    if let Some(v) = quad.abs_tol {
        spec.abs_tol = v;
        source.insert("abs_tol", "config");
    }
    if let Some(v) = ov.abs_tol {
        spec.abs_tol = v;
        source.insert("abs_tol", "flag");
    }
    if let Some(v) = quad.rel_tol {
        spec.rel_tol = v;
        source.insert("rel_tol", "config");
    }
    if let Some(v) = quad.max_subdivisions {
        spec.max_subdivisions = usize::try_from(v)
            .map_err(|_| ConfigError::invalid("max_subdivisions", "must be positive"))?;
        source.insert("max_subdivisions", "config");
    }
    if !(spec.abs_tol > 0.0 && spec.abs_tol.is_finite()) {
        return Err(ConfigError::invalid("abs_tol", "must be positive"));
    }
    if !(spec.rel_tol > 0.0 && spec.rel_tol.is_finite()) {
        return Err(ConfigError::invalid("rel_tol", "must be positive"));
    }
    if spec.max_subdivisions == 0 {
        return Err(ConfigError::invalid("max_subdivisions", "must be positive"));
    }

    let output = ov
        .output
        .clone()
        .or_else(|| run.output.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));

    Ok(RunConfig {
        theorem_domain: params.theorem_domain(),
        warning: params.domain_warning(),
        params,
        n_list,
        quadrature: spec,
        output,
        formats,
        tolerance_source: source,
    })
}

/// Parses a comma-separated list such as `32,64,128`.
pub fn parse_list<T: FromStr>(s: &str, key: &str) -> Result<Vec<T>, ConfigError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| ConfigError::invalid(key, format!("cannot parse {:?}", p.trim())))
        })
        .collect()
}
