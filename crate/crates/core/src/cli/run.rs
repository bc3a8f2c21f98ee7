//! Subcommand execution and artifact writing.

use std::f64::consts::{LN_2, TAU};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use super::config::{ConfigError, Format, RunConfig};
use crate::entropy::{
    convergence_report, entropy_for, equilibrium_constant, szego_constant, EntropyError,
};
use crate::fock::{self, FockError};
use crate::model::{spectral_bound_rho, ChainParams};
use crate::quadrature::QuadratureError;
use crate::spectrum::{self, skew_eigenvalues, SpectrumError};
use crate::symbol::{self, symbol_a, Mat2};
use crate::toeplitz::{self, assemble_with_cache, operator_norm, CoefficientCache, ToeplitzError};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Symbol { points: usize },
    Coeffs { from: i64, to: i64 },
    Matrix,
    Spectrum,
    Entropy,
    Limit,
    Converge,
    CompareEq { steps: usize },
    OracleCheck { sizes: Vec<usize>, seed: u64 },
    FigureH { points: usize },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Symbol { .. } => "symbol",
            Self::Coeffs { .. } => "coeffs",
            Self::Matrix => "matrix",
            Self::Spectrum => "spectrum",
            Self::Entropy => "entropy",
            Self::Limit => "limit",
            Self::Converge => "converge",
            Self::CompareEq { .. } => "compare-eq",
            Self::OracleCheck { .. } => "oracle-check",
            Self::FigureH { .. } => "figure-h",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io { .. } => 2,
            Self::Quadrature(_) => 3,
            Self::Invariant(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Io { .. } => "io",
            Self::Quadrature(_) => "non_convergence",
            Self::Invariant(_) => "invariant",
        }
    }

    /// Machine-readable form printed on failure.
    pub fn to_json(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
            }
        })
    }
}

impl From<ToeplitzError> for RunError {
    fn from(e: ToeplitzError) -> Self {
        match e {
            ToeplitzError::Quadrature(q) => q.into(),
            other => Self::Invariant(other.to_string()),
        }
    }
}

impl From<SpectrumError> for RunError {
    fn from(e: SpectrumError) -> Self {
        Self::Invariant(e.to_string())
    }
}

impl From<EntropyError> for RunError {
    fn from(e: EntropyError) -> Self {
        match e {
            EntropyError::Quadrature(q) => q.into(),
            EntropyError::Toeplitz(t) => t.into(),
            EntropyError::Model(m) => ConfigError::from(m).into(),
            other => Self::Invariant(other.to_string()),
        }
    }
}

impl From<FockError> for RunError {
    fn from(e: FockError) -> Self {
        match e {
            FockError::Quadrature(q) => q.into(),
            FockError::Toeplitz(t) => t.into(),
            FockError::Entropy(x) => x.into(),
            FockError::Cap { .. } | FockError::Shape(_) => ConfigError::Invalid {
                key: "n".into(),
                message: e.to_string(),
            }
            .into(),
            other => Self::Invariant(other.to_string()),
        }
    }
}

/// Fixed float formatting: 17 significant digits.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), RunError> {
    let io = |e: std::io::Error| RunError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

struct Sink<'a> {
    cfg: &'a RunConfig,
    command: &'static str,
    written: Vec<PathBuf>,
}

impl Sink<'_> {
    fn file(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        let path = self.cfg.output.join(name);
        write_atomic(&path, contents)?;
        self.written.push(path);
        Ok(())
    }

    fn csv(&mut self, stem: &str, table: &Table) -> Result<(), RunError> {
        if self.cfg.wants(Format::Csv) || self.cfg.wants(Format::Plot) {
            self.file(&format!("{stem}.csv"), &table.render())?;
        }
        Ok(())
    }

    fn json(&mut self, result: Value) -> Result<(), RunError> {
        if !self.cfg.wants(Format::Json) {
            return Ok(());
        }
        let doc = json!({
            "schema": SCHEMA,
            "command": self.command,
            "config": self.cfg,
            "tolerances": tolerances(self.cfg),
            "result": result,
        });
        let text = serde_json::to_string_pretty(&doc).expect("report serializes");
        self.file(&format!("{}.json", self.command), &(text + "\n"))
    }

    fn plot(&mut self, script: &str) -> Result<(), RunError> {
        if self.cfg.wants(Format::Plot) {
            self.file(&format!("{}.py", self.command), script)?;
        }
        Ok(())
    }
}

fn tolerances(cfg: &RunConfig) -> Value {
    let q = &cfg.quadrature;
    json!({
        "quadrature": {
            "abs_tol": { "value": q.abs_tol, "source": cfg.tolerance_source["abs_tol"] },
            "rel_tol": { "value": q.rel_tol, "source": cfg.tolerance_source["rel_tol"] },
            "max_subdivisions": { "value": q.max_subdivisions, "source": cfg.tolerance_source["max_subdivisions"] },
            "max_fourier_index": { "value": q.max_fourier_index, "source": "default" },
        },
        "checks": {
            "toeplitz_structure": toeplitz::STRUCTURE_TOL,
            "spectrum_pairing": spectrum::PAIRING_TOL,
            "spectrum_overshoot": spectrum::OVERSHOOT_TOL,
            "symbol_mu_singular": symbol::MU_SINGULAR_TOL,
            "fock_entropy": fock::ENTROPY_TOL,
            "fock_moment": fock::MOMENT_TOL,
            "fock_wick": fock::WICK_TOL,
            "fock_car": fock::CAR_TOL,
        }
    })
}

fn mat_fields(m: &Mat2) -> Vec<String> {
    m.transpose()
        .iter()
        .flat_map(|z| [fmt_f(z.re), fmt_f(z.im)])
        .collect()
}

const MAT_HEADER: [&str; 8] = [
    "a11_re", "a11_im", "a12_re", "a12_im", "a21_re", "a21_im", "a22_re", "a22_im",
];

fn with_prefix(first: &[&'static str], rest: &[&'static str]) -> Vec<&'static str> {
    first.iter().chain(rest).copied().collect()
}

/// Runs one subcommand, returning the paths it wrote.
pub fn run(cmd: &Command, cfg: &RunConfig) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(&cfg.output).map_err(|e| RunError::Io {
        path: cfg.output.display().to_string(),
        message: e.to_string(),
    })?;
    let mut sink = Sink {
        cfg,
        command: cmd.name(),
        written: Vec::new(),
    };
    let p = &cfg.params;
    let spec = &cfg.quadrature;
    match cmd {
        Command::Symbol { points } => {
            if *points == 0 {
                return Err(ConfigError::Invalid {
                    key: "points".into(),
                    message: "must be positive".into(),
                }
                .into());
            }
            let mut t = Table::new(&with_prefix(
                &["xi"],
                &[&MAT_HEADER[..], &["mu", "norm"]].concat(),
            ));
            let mut max_norm = 0.0f64;
            for k in 0..*points {
                let xi = TAU * k as f64 / *points as f64;
                let a = symbol_a(p, xi);
                max_norm = max_norm.max(a.norm());
                let mut row = vec![fmt_f(xi)];
                row.extend(mat_fields(&a.m));
                row.push(fmt_f(p.mu(xi)));
                row.push(fmt_f(a.norm()));
                t.push(row);
            }
            sink.csv("symbol", &t)?;
            sink.json(json!({ "points": points, "max_norm": max_norm, "rho_bound": spectral_bound_rho(p) }))?;
        }
        Command::Coeffs { from, to } => {
            if from > to {
                return Err(ConfigError::Invalid {
                    key: "from".into(),
                    message: "range is empty".into(),
                }
                .into());
            }
            let cache = CoefficientCache::new(*p, spec);
            cache.ensure(from.unsigned_abs().max(to.unsigned_abs()) as usize + 1)?;
            let mut t = Table::new(&with_prefix(&["x"], &MAT_HEADER));
            let mut max_imag = 0.0f64;
            for x in *from..=*to {
                let c = cache.get(x)?;
                max_imag = c.iter().fold(max_imag, |m, z| m.max(z.im.abs()));
                let mut row = vec![x.to_string()];
                row.extend(mat_fields(&c));
                t.push(row);
            }
            sink.csv("coeffs", &t)?;
            sink.json(json!({ "from": from, "to": to, "max_imag": max_imag }))?;
        }
        Command::Matrix => {
            let cache = CoefficientCache::new(*p, spec);
            let mut results = Vec::new();
            for &n in &cfg.n_list {
                let m = assemble_with_cache(&cache, n)?;
                let header: Vec<String> = (1..=2 * n).map(|c| format!("c{c}")).collect();
                let mut s = header.join(",");
                s.push('\n');
                for r in 0..2 * n {
                    let row: Vec<String> = (0..2 * n).map(|c| fmt_f(m.entries[(r, c)])).collect();
                    s.push_str(&row.join(","));
                    s.push('\n');
                }
                if cfg.wants(Format::Csv) {
                    sink.file(&format!("matrix_n{n}.csv"), &s)?;
                }
                results.push(json!({
                    "n": n,
                    "imag_residual": m.imag_residual,
                    "skew_residual": m.skew_residual,
                    "shift_residual": m.shift_residual(),
                    "operator_norm": operator_norm(&m),
                }));
            }
            sink.json(json!({ "matrices": results, "rho_bound": spectral_bound_rho(p) }))?;
        }
        Command::Spectrum => {
            let cache = CoefficientCache::new(*p, spec);
            let mut t = Table::new(&["n", "i", "lambda"]);
            let mut results = Vec::new();
            for &n in &cfg.n_list {
                let s = skew_eigenvalues(&assemble_with_cache(&cache, n)?.entries)?;
                for (i, l) in s.lambdas.iter().enumerate() {
                    t.push(vec![n.to_string(), (i + 1).to_string(), fmt_f(*l)]);
                }
                results.push(json!({
                    "n": n,
                    "max_lambda": s.lambdas.first().copied().unwrap_or(0.0),
                    "pairing_residual": s.pairing_residual,
                }));
            }
            sink.csv("spectrum", &t)?;
            sink.json(json!({ "spectra": results, "rho_bound": spectral_bound_rho(p) }))?;
        }
        Command::Entropy => {
            let cache = CoefficientCache::new(*p, spec);
            cache.ensure(*cfg.n_list.last().expect("validated nonempty"))?;
            let mut t = Table::new(&["n", "S_n", "density"]);
            let mut rows = Vec::new();
            for &n in &cfg.n_list {
                let (s, _) = entropy_for(&cache, n)?;
                t.push(vec![n.to_string(), fmt_f(s), fmt_f(s / n as f64)]);
                rows.push(json!({ "n": n, "entropy": s, "density": s / n as f64 }));
            }
            sink.csv("entropy", &t)?;
            sink.json(json!({ "rows": rows }))?;
            sink.plot(&density_plot_script("entropy", None))?;
        }
        Command::Limit => {
            let c = szego_constant(p, spec)?;
            let left = equilibrium_constant(p.beta_left(), p.gamma(), p.lambda(), spec)?;
            let right = equilibrium_constant(p.beta_right(), p.gamma(), p.lambda(), spec)?;
            let mean = equilibrium_constant(p.beta(), p.gamma(), p.lambda(), spec)?;
            let rho = spectral_bound_rho(p);
            let h_rho = crate::entropy::entropy_h(rho)?;
            let values = [
                ("C", c),
                ("C_eq_beta", mean),
                ("C_eq_left", left),
                ("C_eq_right", right),
                ("split_residual", c - 0.5 * (left + right)),
                ("excess_over_equilibrium", c - mean),
                ("rho_bound", rho),
                ("h_rho", h_rho),
                ("log2", LN_2),
            ];
            let mut t = Table::new(&["quantity", "value"]);
            let mut obj = serde_json::Map::new();
            for (k, v) in values {
                t.push(vec![k.to_string(), fmt_f(v)]);
                obj.insert(k.to_string(), json!(v));
            }
            sink.csv("limit", &t)?;
            sink.json(Value::Object(obj))?;
        }
        Command::Converge => {
            let report = convergence_report(p, &cfg.n_list, spec)?;
            let mut t = Table::new(&["n", "S_n", "density", "e_n", "remainder"]);
            for r in &report.rows {
                t.push(vec![
                    r.n.to_string(),
                    fmt_f(r.entropy),
                    fmt_f(r.density),
                    fmt_f(r.error),
                    fmt_f(r.remainder),
                ]);
            }
            sink.csv("converge", &t)?;
            sink.json(json!({
                "report": report,
                "split_residual": report.split_residual(),
                "errors_strictly_decreasing": report.errors_strictly_decreasing(),
            }))?;
            sink.plot(&density_plot_script("converge", Some(report.c)))?;
        }
        Command::CompareEq { steps } => {
            if *steps == 0 {
                return Err(ConfigError::Invalid {
                    key: "steps".into(),
                    message: "must be positive".into(),
                }
                .into());
            }
            let beta = p.beta();
            let mean = equilibrium_constant(beta, p.gamma(), p.lambda(), spec)?;
            let mut t = Table::new(&[
                "delta",
                "beta_L",
                "beta_R",
                "C",
                "C_eq_beta",
                "excess",
                "split_residual",
            ]);
            let mut rows = Vec::new();
            for k in 0..=*steps {
                let delta = beta * k as f64 / *steps as f64;
                let q =
                    ChainParams::new((beta - delta).max(0.0), beta + delta, p.gamma(), p.lambda())
                        .map_err(ConfigError::from)?;
                let c = szego_constant(&q, spec)?;
                let left = equilibrium_constant(q.beta_left(), q.gamma(), q.lambda(), spec)?;
                let right = equilibrium_constant(q.beta_right(), q.gamma(), q.lambda(), spec)?;
                let split = c - 0.5 * (left + right);
                t.push(
                    [
                        delta,
                        q.beta_left(),
                        q.beta_right(),
                        c,
                        mean,
                        c - mean,
                        split,
                    ]
                    .iter()
                    .map(|&v| fmt_f(v))
                    .collect(),
                );
                rows.push(json!({
                    "delta": delta, "beta_L": q.beta_left(), "beta_R": q.beta_right(),
                    "C": c, "excess": c - mean, "split_residual": split,
                }));
            }
            sink.csv("compare-eq", &t)?;
            sink.json(json!({ "beta": beta, "C_eq_beta": mean, "rows": rows }))?;
        }
        Command::OracleCheck { sizes, seed } => {
            let mut rng = rand::rngs::StdRng::seed_from_u64(*seed);
            let mut t = Table::new(&[
                "n",
                "passed",
                "entropy_residual",
                "trace_error",
                "min_eigenvalue",
                "moment_residual",
                "fermion_two_point_residual",
                "random_rotation_car_residual",
            ]);
            let mut reports = Vec::new();
            let mut all = true;
            for &n in sizes {
                let r = fock::run_oracle_suite(p, n, spec)?;
                let a = DMatrix::from_fn(2 * n, 2 * n, |_, _| rng.gen_range(-1.0..1.0));
                let random_car = fock::car_residual(&fock::rotated_fermions(n, &a.qr().q())?);
                let passed = r.passed && random_car <= fock::CAR_TOL;
                all &= passed;
                t.push(vec![
                    n.to_string(),
                    passed.to_string(),
                    fmt_f(r.entropy_residual),
                    fmt_f(r.trace - 1.0),
                    fmt_f(r.min_eigenvalue),
                    fmt_f(r.moment_residual),
                    fmt_f(r.fermion_two_point_residual),
                    fmt_f(random_car),
                ]);
                reports.push(OracleEntry {
                    passed,
                    random_rotation_car_residual: random_car,
                    suite: r,
                });
            }
            sink.csv("oracle-check", &t)?;
            sink.json(json!({ "seed": seed, "passed": all, "reports": reports }))?;
            if !all {
                return Err(RunError::Invariant("oracle suite reported failures".into()));
            }
        }
        Command::FigureH { points } => {
            if *points < 2 {
                return Err(ConfigError::Invalid {
                    key: "points".into(),
                    message: "need at least 2".into(),
                }
                .into());
            }
            let mut t = Table::new(&["x", "h"]);
            for k in 0..*points {
                let x = -1.0 + 2.0 * k as f64 / (*points - 1) as f64;
                t.push(vec![fmt_f(x), fmt_f(crate::entropy::entropy_h(x)?)]);
            }
            sink.csv("figure-h", &t)?;
            sink.json(json!({ "points": points, "max": LN_2 }))?;
            sink.plot(FIGURE_H_SCRIPT)?;
        }
    }
    Ok(sink.written)
}

#[derive(Serialize)]
struct OracleEntry {
    passed: bool,
    random_rotation_car_residual: f64,
    #[serde(flatten)]
    suite: fock::OracleReport,
}

const FIGURE_H_SCRIPT: &str = r#"import csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

with open("figure-h.csv") as f:
    rows = list(csv.DictReader(f))
x = [float(r["x"]) for r in rows]
h = [float(r["h"]) for r in rows]
plt.plot(x, h, color="black")
plt.xlabel("x")
plt.ylabel("h(x)")
plt.xlim(-1, 1)
plt.ylim(0, 0.75)
plt.savefig("figure-h.png", dpi=150, bbox_inches="tight")
"#;

fn density_plot_script(stem: &str, limit: Option<f64>) -> String {
    let hline = match limit {
        Some(c) => format!(
            "plt.axhline({}, linestyle=\"--\", color=\"gray\", label=\"limit\")\nplt.legend()\n",
            fmt_f(c)
        ),
        None => String::new(),
    };
    format!(
        r#"import csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

with open("{stem}.csv") as f:
    rows = list(csv.DictReader(f))
n = [int(r["n"]) for r in rows]
d = [float(r["density"]) for r in rows]
plt.semilogx(n, d, "o-", label="S_n / n")
{hline}plt.xlabel("n")
plt.ylabel("entropy density")
plt.savefig("{stem}.png", dpi=150, bbox_inches="tight")
"#
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::parse_config;

    fn config(dir: &Path, model: &str, extra: &str) -> RunConfig {
        let text = format!(
            "{model}[run]\noutput = {:?}\nformats = [\"csv\", \"json\", \"plot\"]\n{extra}",
            dir.display()
        );
        parse_config(&text).unwrap()
    }

    const HOT: &str = "[model]\nbeta_L = 0\nbeta_R = 0\ngamma = 0.5\nlambda = 0.3\n";
    const REF: &str = "[model]\nbeta_L = 1\nbeta_R = 3\ngamma = 0.5\nlambda = 0.3\n";

    fn read_json(path: &Path) -> Value {
        serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
    }

    #[test]
    fn limit_at_infinite_temperature() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), HOT, "");
        run(&Command::Limit, &cfg).unwrap();
        let v = read_json(&dir.path().join("limit.json"));
        assert_eq!(v["schema"], 1);
        assert!((v["result"]["C"].as_f64().unwrap() - LN_2).abs() < 1e-12);
        assert_eq!(v["config"]["params"]["beta_right"], 0.0);
        assert_eq!(
            v["tolerances"]["quadrature"]["abs_tol"]["source"],
            "default"
        );
    }

    #[test]
    fn figure_h_extremes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), HOT, "");
        let files = run(&Command::FigureH { points: 401 }, &cfg).unwrap();
        assert!(files.iter().any(|f| f.ends_with("figure-h.py")));
        let csv = fs::read_to_string(dir.path().join("figure-h.csv")).unwrap();
        let rows: Vec<(f64, f64)> = csv
            .lines()
            .skip(1)
            .map(|l| {
                let (a, b) = l.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect();
        assert_eq!(rows.len(), 401);
        assert_eq!(rows[0], (-1.0, 0.0));
        assert_eq!(rows[400], (1.0, 0.0));
        let (x, h) = rows[200];
        assert_eq!((x, h), (0.0, LN_2));
        assert!(rows.iter().all(|r| r.1 <= LN_2));
    }

    #[test]
    fn converge_is_deterministic_and_decreasing() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), REF, "n_list = [8, 16, 32, 64]\n");
        run(&Command::Converge, &cfg).unwrap();
        let first = fs::read(dir.path().join("converge.csv")).unwrap();
        let first_json = fs::read(dir.path().join("converge.json")).unwrap();
        run(&Command::Converge, &cfg).unwrap();
        assert_eq!(first, fs::read(dir.path().join("converge.csv")).unwrap());
        assert_eq!(
            first_json,
            fs::read(dir.path().join("converge.json")).unwrap()
        );
        let errors: Vec<f64> = String::from_utf8(first)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
            .collect();
        assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    }

    #[test]
    fn oracle_check_reports_pass() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), REF, "");
        run(
            &Command::OracleCheck {
                sizes: vec![1, 2],
                seed: 3,
            },
            &cfg,
        )
        .unwrap();
        let v = read_json(&dir.path().join("oracle-check.json"));
        assert_eq!(v["result"]["passed"], true);
        assert_eq!(v["result"]["reports"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn oversize_oracle_request_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), REF, "");
        let err = run(
            &Command::OracleCheck {
                sizes: vec![11],
                seed: 0,
            },
            &cfg,
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn small_subcommands_write_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), REF, "n_list = [2, 3]\n");
        for cmd in [
            Command::Symbol { points: 16 },
            Command::Coeffs { from: -3, to: 3 },
            Command::Matrix,
            Command::Spectrum,
            Command::Entropy,
            Command::CompareEq { steps: 4 },
        ] {
            let files = run(&cmd, &cfg).unwrap();
            assert!(!files.is_empty(), "{}", cmd.name());
        }
        let coeffs = fs::read_to_string(dir.path().join("coeffs.csv")).unwrap();
        assert_eq!(coeffs.lines().count(), 8);
        assert!(coeffs.starts_with("x,a11_re,"));
        let m = fs::read_to_string(dir.path().join("matrix_n3.csv")).unwrap();
        assert_eq!(m.lines().count(), 7);
        let v = read_json(&dir.path().join("compare-eq.json"));
        let rows = v["result"]["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows[1]["excess"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn error_json_shape() {
        let e = RunError::Quadrature(QuadratureError::InvalidSpec("x".into()));
        let v = e.to_json();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["error"]["exit_code"], 3);
        assert_eq!(RunError::Invariant("x".into()).exit_code(), 4);
    }
}
