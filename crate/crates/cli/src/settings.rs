//! Run settings: TOML config file merged under command-line flags.

use std::path::Path;

use clap::ValueEnum;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BaseKind {
    Circle,
    Torus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum IsometryName {
    Identity,
    Reflection,
    Rotation,
    SwapShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Pathway {
    Theorem,
    Definition,
    Both,
}

/// Every tunable of a run. `None` means "not given here".
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    pub format: Option<Format>,
    pub cutoff: Option<f64>,
    pub tail_tol: Option<f64>,
    pub seed: Option<u64>,
    pub a: Option<f64>,
    pub rho: Option<f64>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub angle: Option<f64>,
    pub q: Option<usize>,
    pub lambda: Option<f64>,
    pub t: Option<f64>,
    pub base: Option<BaseKind>,
    pub isometry: Option<IsometryName>,
    pub pathway: Option<Pathway>,
    pub witten: Option<bool>,
    pub only: Option<String>,
}

macro_rules! prefer {
    ($hi:expr, $lo:expr; $($f:ident),*) => {
        Settings { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))
    }

    /// Field-wise: values set in `self` win over `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        prefer!(self, lower; format, cutoff, tail_tol, seed, a, rho, l1, l2, angle, q, lambda, t, base, isometry, pathway, witten, only)
    }
}
