//! Flat `key = value` run configuration with flag overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use smearspace::scales::PhysicalConstants;

use crate::CliError;

const PHYSICAL_KEYS: &[&str] = &["physical.hbar", "physical.c", "physical.g", "physical.lambda", "physical.d"];
const DIMENSIONLESS_KEYS: &[&str] = &[
    "dimensionless.hbar",
    "dimensionless.beta",
    "dimensionless.sigma_g",
    "dimensionless.sigma_g_tilde",
];
const OTHER_KEYS: &[&str] = &[
    "mode",
    "seed",
    "grid.n",
    "grid.extent",
    "output.path",
    "output.format",
    "kernel.shape",
    "state.width",
    "state.mean",
    "state.k0",
    "uncertainty.betas",
    "uncertainty.widths",
    "uncertainty.optimal",
    "uncertainty.random",
    "measure.history",
    "measure.count",
    "measure.axis",
    "evolve.mass",
    "evolve.potential",
    "evolve.omega",
    "evolve.dt",
    "evolve.steps",
    "evolve.every",
    "entangle.n",
    "entangle.u_extent",
    "entangle.v_extent",
    "entangle.state",
    "povm.sigma_x",
    "povm.sigma_p",
    "massradius.decades",
    "massradius.per_decade",
];

/// Relative tolerance on `beta = 2 sigma_g sigma_g_tilde` when both are given.
const CONSISTENCY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Config(format!("unknown format {other:?}; expected csv or json"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimensionless {
    pub hbar: f64,
    pub beta: f64,
    pub sigma_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Physical(PhysicalConstants),
    Dimensionless(Dimensionless),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    Physical,
    Dimensionless,
}

impl ModeKind {
    fn name(self) -> &'static str {
        match self {
            ModeKind::Physical => "physical",
            ModeKind::Dimensionless => "dimensionless",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub grid_n: usize,
    pub grid_extent: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    values: BTreeMap<String, String>,
}

/// Parse `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value, got {raw:?}", no + 1)))?;
        let key = key.trim().to_string();
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key {key}", no + 1)));
        }
    }
    Ok(map)
}

pub fn read_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    parse_text(&text)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {value:?}")))
}

impl RunConfig {
    /// Build from merged key-value pairs. `default_mode` applies when
    /// neither mode block is present.
    pub fn from_values(values: BTreeMap<String, String>, default_mode: ModeKind) -> Result<Self, CliError> {
        for key in values.keys() {
            let known = [PHYSICAL_KEYS, DIMENSIONLESS_KEYS, OTHER_KEYS].iter().any(|set| set.contains(&key.as_str()));
            if !known {
                return Err(CliError::Config(format!("unknown key {key}")));
            }
        }
        let has_physical = PHYSICAL_KEYS.iter().any(|k| values.contains_key(*k));
        let has_dimensionless = DIMENSIONLESS_KEYS.iter().any(|k| values.contains_key(*k));
        if has_physical && has_dimensionless {
            return Err(CliError::Config("both physical and dimensionless blocks are present".into()));
        }
        let declared = match values.get("mode").map(String::as_str) {
            None => None,
            Some("physical") => Some(ModeKind::Physical),
            Some("dimensionless") => Some(ModeKind::Dimensionless),
            Some(other) => return Err(CliError::Config(format!("unknown mode {other:?}"))),
        };
        let implied = if has_physical {
            Some(ModeKind::Physical)
        } else if has_dimensionless {
            Some(ModeKind::Dimensionless)
        } else {
            None
        };
        let kind = match (declared, implied) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Config(format!("mode = {} conflicts with the {} block", a.name(), b.name())))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => default_mode,
        };
        let mut cfg = RunConfig {
            mode: Mode::Dimensionless(Dimensionless {
                hbar: 1.0,
                beta: 0.1,
                sigma_g: 0.5,
            }),
            grid_n: 0,
            grid_extent: 0.0,
            seed: 0,
            out: None,
            format: Format::Csv,
            values,
        };
        cfg.mode = match kind {
            ModeKind::Physical => Mode::Physical(cfg.physical_constants()?),
            ModeKind::Dimensionless => Mode::Dimensionless(cfg.dimensionless()?),
        };
        cfg.grid_n = cfg.get("grid.n", 512)?;
        cfg.grid_extent = cfg.get("grid.extent", 32.0)?;
        cfg.seed = cfg.get("seed", 0)?;
        cfg.out = cfg.values.get("output.path").map(PathBuf::from);
        cfg.format = match cfg.values.get("output.format") {
            Some(f) => Format::parse(f)?,
            None => Format::Csv,
        };
        Ok(cfg)
    }

    fn physical_constants(&self) -> Result<PhysicalConstants, CliError> {
        let base = PhysicalConstants::observed();
        Ok(PhysicalConstants::new(
            self.get("physical.hbar", base.hbar)?,
            self.get("physical.c", base.c)?,
            self.get("physical.g", base.g_d)?,
            self.get("physical.lambda", base.lambda_d)?,
            self.get("physical.d", base.d)?,
        )?)
    }

    fn dimensionless(&self) -> Result<Dimensionless, CliError> {
        let hbar: f64 = self.get("dimensionless.hbar", 1.0)?;
        let sigma_g: f64 = self.get("dimensionless.sigma_g", 0.5)?;
        let tilde: Option<f64> = self.get_opt("dimensionless.sigma_g_tilde")?;
        let beta: f64 = match (self.get_opt::<f64>("dimensionless.beta")?, tilde) {
            (Some(beta), Some(t)) => {
                let implied = 2.0 * sigma_g * t;
                if (implied - beta).abs() > CONSISTENCY_TOLERANCE * beta.abs() {
                    return Err(CliError::Config(format!(
                        "beta = {beta} is inconsistent with 2 sigma_g sigma_g_tilde = {implied}"
                    )));
                }
                beta
            }
            (Some(beta), None) => beta,
            (None, Some(t)) => 2.0 * sigma_g * t,
            (None, None) => 0.1,
        };
        for (name, v) in [("hbar", hbar), ("beta", beta), ("sigma_g", sigma_g)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(Dimensionless { hbar, beta, sigma_g })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.get_opt(key)?.unwrap_or(default))
    }

    pub fn get_opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.values.get(key).map(|v| parse_value(key, v)).transpose()
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Comma-separated list of reals.
    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.values
            .get(key)
            .map(|v| v.split(',').map(|item| parse_value(key, item.trim())).collect())
            .transpose()
    }

    pub fn require_physical(&self, command: &str) -> Result<PhysicalConstants, CliError> {
        match self.mode {
            Mode::Physical(c) => Ok(c),
            Mode::Dimensionless(_) => Err(CliError::Config(format!("{command} needs physical mode"))),
        }
    }

    pub fn require_dimensionless(&self, command: &str) -> Result<Dimensionless, CliError> {
        match self.mode {
            Mode::Dimensionless(d) => Ok(d),
            Mode::Physical(_) => Err(CliError::Config(format!("{command} needs dimensionless mode"))),
        }
    }
}
