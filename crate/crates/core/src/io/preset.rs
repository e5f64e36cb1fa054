//! Built-in run configurations and data sets.

use crate::error::{Error, Result};
use crate::io::config::{RunConfig, Scenario};
use crate::io::series::{parse_case_series, CaseSeries};

/// Name and TOML text of every built-in configuration.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig2", include_str!("../../presets/fig2.toml")),
    ("sim1", include_str!("../../presets/sim1.toml")),
    ("sim2", include_str!("../../presets/sim2.toml")),
    ("sim3", include_str!("../../presets/sim3.toml")),
    ("sim4", include_str!("../../presets/sim4.toml")),
    ("diamond", include_str!("../../presets/diamond.toml")),
];

const DIAMOND_PRINCESS_CSV: &str = include_str!("../../data/diamond_princess.csv");

pub const BUILTIN_PREFIX: &str = "builtin:";

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

pub fn preset(name: &str) -> Result<RunConfig> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        Error::Config(format!(
            "unknown preset {name:?}; available: {}",
            preset_names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    RunConfig::from_toml(text)
}

/// Loads `builtin:<name>` data.
pub fn builtin_series(name: &str, interpolate: bool) -> Result<CaseSeries> {
    match name {
        "diamond_princess" => {
            parse_case_series(DIAMOND_PRINCESS_CSV.as_bytes(), "builtin:diamond_princess", interpolate)
        }
        other => Err(Error::Config(format!("unknown built-in data set {other:?}"))),
    }
}

/// The Diamond Princess population, block network, fixed recovery rate,
/// priors and step-0.1 kernel.
pub fn diamond_princess_preset() -> Result<Scenario> {
    preset("diamond")?.scenario()
}
