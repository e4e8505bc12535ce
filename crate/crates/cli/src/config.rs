//! Solver configuration.
//!
//! The document is flat `key = value` text (TOML syntax, no tables):
//!
//! ```text
//! # comments start with '#'
//! m = 1.0
//! omega = 2.0
//! gamma0 = 1.0             # or gamma_profile = "gamma.csv" (header r,value)
//! s = 1
//! K = 8
//! r_max = 100.0
//! n = 4096
//! grading = 1.0
//! newton_tol = 1e-10
//! residual_tol = 1e-8
//! phase_tol = 1e-6
//! pde_tol = 1e-4
//! alphas = [1e-3, 2e-3, 1e-2, -1e-3, -2e-3, -1e-2]
//! tau_3 = 2.0              # phase override for mode 3
//! t_count = 65
//! r_subsample = 8
//! out = "out"
//! ```
//!
//! Keys are case-insensitive. Values from `BREATHER_<KEY>` environment
//! variables replace those of the document, and `--override KEY=VALUE`
//! replaces both.

use std::f64::consts::TAU;
use std::path::PathBuf;

use breather_core::bifurcation::NODES_PER_WAVELENGTH;
use breather_core::helmholtz::far_field::{MIN_PERIODS, WINDOW};
use breather_core::linearized::mode_mu;
use breather_core::radial::make_grid;
use serde::Serialize;
use thiserror::Error;
use toml::{Table, Value};

pub const ENV_PREFIX: &str = "BREATHER_";

const KEYS: &[&str] = &[
    "m",
    "omega",
    "gamma0",
    "gamma_profile",
    "s",
    "k",
    "r_max",
    "n",
    "grading",
    "newton_tol",
    "residual_tol",
    "phase_tol",
    "pde_tol",
    "alphas",
    "t_count",
    "r_subsample",
    "out",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("`{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSource {
    Constant(f64),
    Profile(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    pub r_max: f64,
    pub n: usize,
    pub grading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    /// Newton target for `||F||_{X_1}`.
    pub newton: f64,
    /// Ground-state ODE residual.
    pub residual: f64,
    /// Fit vs Prüfer phase agreement.
    pub phase: f64,
    /// Normalized space-time residual of the assembled breather.
    pub pde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub m: f64,
    pub omega: f64,
    pub gamma: GammaSource,
    pub s: usize,
    #[serde(rename = "K")]
    pub k_max: usize,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    pub alphas: Vec<f64>,
    /// `(k, tau_k)` pairs replacing the planned phases.
    pub tau_overrides: Vec<(usize, f64)>,
    pub t_count: usize,
    pub r_subsample: usize,
    pub out: PathBuf,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            m: 1.0,
            omega: 2.0,
            gamma: GammaSource::Constant(1.0),
            s: 1,
            k_max: 8,
            grid: GridConfig {
                r_max: 100.0,
                n: 4096,
                grading: 1.0,
            },
            tolerances: Tolerances {
                newton: 1e-10,
                residual: 1e-8,
                phase: 1e-6,
                pde: 1e-4,
            },
            alphas: vec![1e-3, 2e-3, 1e-2, -1e-3, -2e-3, -1e-2],
            tau_overrides: Vec::new(),
            t_count: 65,
            r_subsample: 8,
            out: PathBuf::from("out"),
        }
    }
}

/// Parses a document into a key table with lower-case keys.
pub fn parse_document(source: &str) -> Result<Table, ConfigError> {
    let table: Table = source.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let mut out = Table::new();
    for (k, v) in table {
        if v.is_table() {
            return Err(ConfigError::Syntax(format!("`{k}`: nested tables are not supported")));
        }
        out.insert(k.to_lowercase(), v);
    }
    Ok(out)
}

/// Parses a single value: TOML literal if it is one, bare string otherwise.
fn parse_value(text: &str) -> Value {
    let doc = format!("v = {text}");
    match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(text.to_string())),
        Err(_) => Value::String(text.to_string()),
    }
}

/// Applies one `KEY=VALUE` assignment.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::Syntax(format!("override `{assignment}` is not KEY=VALUE")))?;
    table.insert(key.trim().to_lowercase(), parse_value(value.trim()));
    Ok(())
}

/// Applies `BREATHER_<KEY>` variables from `vars`.
pub fn apply_env(table: &mut Table, vars: impl IntoIterator<Item = (String, String)>) {
    let mut found: Vec<(String, String)> = vars
        .into_iter()
        .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|k| (k.to_lowercase(), v)))
        .collect();
    found.sort();
    for (k, v) in found {
        table.insert(k, parse_value(&v));
    }
}

fn get_f64(table: &Table, key: &str, default: f64) -> Result<f64, ConfigError> {
    match table.get(key) {
        None => Ok(default),
        Some(Value::Float(x)) => Ok(*x),
        Some(Value::Integer(i)) => Ok(*i as f64),
        Some(other) => Err(invalid(key, format!("expected a number, got {other}"))),
    }
}

fn get_usize(table: &Table, key: &str, default: usize) -> Result<usize, ConfigError> {
    match table.get(key) {
        None => Ok(default),
        Some(Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
        Some(other) => Err(invalid(key, format!("expected a non-negative integer, got {other}"))),
    }
}

fn get_alphas(table: &Table, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
    let number = |v: &Value| match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(invalid("alphas", format!("expected numbers, got {other}"))),
    };
    match table.get("alphas") {
        None => Ok(default.to_vec()),
        Some(Value::Array(items)) => items.iter().map(number).collect(),
        // comma list, as typically given through the environment
        Some(Value::String(s)) => s
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|e| invalid("alphas", format!("`{x}`: {e}")))
            })
            .collect(),
        Some(v) => Ok(vec![number(v)?]),
    }
}

/// Builds and validates a configuration from a key table.
pub fn from_table(table: &Table) -> Result<SolverConfig, ConfigError> {
    let d = SolverConfig::default();
    let mut tau_overrides = Vec::new();
    for key in table.keys() {
        if let Some(k) = key.strip_prefix("tau_") {
            let k: usize = k.parse().map_err(|_| ConfigError::UnknownKey(key.clone()))?;
            tau_overrides.push((k, get_f64(table, key, 0.0)?));
        } else if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
    }
    tau_overrides.sort_by_key(|&(k, _)| k);
    let gamma = match (table.get("gamma0"), table.get("gamma_profile")) {
        (Some(_), Some(_)) => return Err(invalid("gamma0", "give either gamma0 or gamma_profile, not both")),
        (_, Some(Value::String(p))) => GammaSource::Profile(PathBuf::from(p)),
        (_, Some(other)) => return Err(invalid("gamma_profile", format!("expected a path, got {other}"))),
        _ => GammaSource::Constant(get_f64(table, "gamma0", 1.0)?),
    };
    let out = match table.get("out") {
        None => d.out.clone(),
        Some(Value::String(p)) => PathBuf::from(p),
        Some(other) => return Err(invalid("out", format!("expected a path, got {other}"))),
    };
    let cfg = SolverConfig {
        m: get_f64(table, "m", d.m)?,
        omega: get_f64(table, "omega", d.omega)?,
        gamma,
        s: get_usize(table, "s", d.s)?,
        k_max: get_usize(table, "k", d.k_max)?,
        grid: GridConfig {
            r_max: get_f64(table, "r_max", d.grid.r_max)?,
            n: get_usize(table, "n", d.grid.n)?,
            grading: get_f64(table, "grading", d.grid.grading)?,
        },
        tolerances: Tolerances {
            newton: get_f64(table, "newton_tol", d.tolerances.newton)?,
            residual: get_f64(table, "residual_tol", d.tolerances.residual)?,
            phase: get_f64(table, "phase_tol", d.tolerances.phase)?,
            pde: get_f64(table, "pde_tol", d.tolerances.pde)?,
        },
        alphas: get_alphas(table, &d.alphas)?,
        tau_overrides,
        t_count: get_usize(table, "t_count", d.t_count)?,
        r_subsample: get_usize(table, "r_subsample", d.r_subsample)?,
        out,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a document with defaults filled in and no overrides.
pub fn parse_config(source: &str) -> Result<SolverConfig, ConfigError> {
    from_table(&parse_document(source)?)
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.m > 0.0) {
            return Err(invalid("m", format!("must be positive, got {}", self.m)));
        }
        if !(self.omega > self.m) {
            return Err(invalid(
                "omega",
                format!("requires omega > m, got omega = {}, m = {}", self.omega, self.m),
            ));
        }
        if self.s == 0 {
            return Err(invalid("s", "must be at least 1"));
        }
        if self.k_max < 3 * self.s {
            return Err(invalid(
                "K",
                format!("requires K >= 3s, got K = {}, s = {}", self.k_max, self.s),
            ));
        }
        if let GammaSource::Constant(g) = self.gamma {
            if !g.is_finite() {
                return Err(invalid("gamma0", "must be finite"));
            }
        }
        for (name, tol) in [
            ("newton_tol", self.tolerances.newton),
            ("residual_tol", self.tolerances.residual),
            ("phase_tol", self.tolerances.phase),
            ("pde_tol", self.tolerances.pde),
        ] {
            if !(tol > 0.0) {
                return Err(invalid(name, "must be positive"));
            }
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !a.is_finite()) {
            return Err(invalid("alphas", "need at least one finite value"));
        }
        for &(k, tau) in &self.tau_overrides {
            if k == 0 || k > self.k_max {
                return Err(invalid(&format!("tau_{k}"), format!("mode outside 1..={}", self.k_max)));
            }
            if !(0.0..std::f64::consts::PI).contains(&tau) {
                return Err(invalid(&format!("tau_{k}"), "must lie in [0, pi)"));
            }
        }
        if self.t_count < 2 {
            return Err(invalid("t_count", "need at least two time samples"));
        }
        if self.r_subsample == 0 {
            return Err(invalid("r_subsample", "must be at least 1"));
        }
        let grid = make_grid(self.grid.r_max, self.grid.n, self.grid.grading)
            .map_err(|e| invalid("grid", e.to_string()))?;
        let mu_k = mode_mu(self.k_max, self.m, self.omega);
        let needed = TAU / mu_k.sqrt() / NODES_PER_WAVELENGTH;
        if grid.max_spacing() > needed {
            return Err(invalid(
                "n",
                format!(
                    "grid spacing {:.4e} does not resolve mode K = {} (needs <= {needed:.4e})",
                    grid.max_spacing(),
                    self.k_max
                ),
            ));
        }
        let rho_1 = mode_mu(1, self.m, self.omega).sqrt();
        let periods = rho_1 * (WINDOW.1 - WINDOW.0) * self.grid.r_max / TAU;
        if periods < MIN_PERIODS {
            return Err(invalid(
                "r_max",
                format!("far-field window holds {periods:.2} periods of mode 1 (needs {MIN_PERIODS})"),
            ));
        }
        Ok(())
    }
}
