//! TOML run configuration. Every struct rejects unknown keys.

use std::fs;
use std::path::{Path, PathBuf};

use csigan_core::{ArrayGeometry, Scenario, TrainingConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::exit::{CmdResult, CoreContext, OrFail};

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> CmdResult<T> {
    let text = fs::read_to_string(path).or_usage(format!("reading config {}", path.display()))?;
    toml::from_str(&text).or_usage(format!("parsing config {}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Walled hall with a central blocker and four arrays.
    Demo,
}

/// A named scenario with optional overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetConfig {
    preset: Preset,
    geometry: ArrayGeometry,
    noise_power: Option<f64>,
    seed: Option<u64>,
}

/// Scenario files either spell out a full [`Scenario`] or name a preset:
///
/// ```toml
/// preset = "demo"
/// seed = 3
///
/// [geometry]
/// num_arrays = 1
/// rows_per_array = 2
/// cols_per_array = 4
/// num_taps = 16
/// carrier_hz = 1.272e9
/// bandwidth_hz = 50e6
/// ```
pub fn load_scenario(path: &Path) -> CmdResult<Scenario> {
    let text = fs::read_to_string(path).or_usage(format!("reading config {}", path.display()))?;
    let table: toml::Table = toml::from_str(&text).or_usage(format!("parsing config {}", path.display()))?;
    let scenario = if table.contains_key("preset") {
        let p: PresetConfig = toml::from_str(&text).or_usage(format!("parsing config {}", path.display()))?;
        let mut s = match p.preset {
            Preset::Demo => Scenario::demo(p.geometry),
        };
        if let Some(n) = p.noise_power {
            s.noise_power = n;
        }
        if let Some(seed) = p.seed {
            s.seed = seed;
        }
        s
    } else {
        toml::from_str(&text).or_usage(format!("parsing config {}", path.display()))?
    };
    scenario.validate().within(format!("scenario {}", path.display()))?;
    Ok(scenario)
}

pub fn load_training(path: &Path) -> CmdResult<TrainingConfig> {
    let config: TrainingConfig = read_toml(path)?;
    config.validate().within(format!("training config {}", path.display()))?;
    Ok(config)
}

/// Where a file output's resolved configuration goes: `out.csit` gets
/// `out.resolved.toml`.
pub fn resolved_beside(out: &Path) -> PathBuf {
    out.with_extension("resolved.toml")
}

pub fn write_resolved<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let text = toml::to_string(value).or_data("serializing resolved config")?;
    fs::write(path, text).or_data(format!("writing {}", path.display()))
}
