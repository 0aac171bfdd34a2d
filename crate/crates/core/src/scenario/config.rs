use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::mpc::MpcConfig;
use crate::plant::{sized, HouseModel, SystemConfig};
use crate::rules::RuleBasedConfig;
use crate::weather::{CsvSchema, ForecastMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Mpc,
    Baseline,
    RuleBased,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [ControllerKind::Mpc, ControllerKind::Baseline, ControllerKind::RuleBased];

    pub fn as_str(self) -> &'static str {
        match self {
            ControllerKind::Mpc => "mpc",
            ControllerKind::Baseline => "baseline",
            ControllerKind::RuleBased => "rule_based",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ControllerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "mpc" => Ok(ControllerKind::Mpc),
            "baseline" => Ok(ControllerKind::Baseline),
            "rule_based" | "rulebased" | "rb" => Ok(ControllerKind::RuleBased),
            other => Err(format!("unknown controller `{other}`")),
        }
    }
}

/// PV + battery sizes A-F. A battery unit is half of the reference battery
/// (2700 Wh of capacity), scaling all four battery limits together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SizePreset {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl SizePreset {
    pub const ALL: [SizePreset; 6] = [
        SizePreset::A,
        SizePreset::B,
        SizePreset::C,
        SizePreset::D,
        SizePreset::E,
        SizePreset::F,
    ];

    /// `(panels, battery units)`.
    pub fn spec(self) -> (u32, u32) {
        match self {
            SizePreset::A => (3, 2),
            SizePreset::B => (3, 4),
            SizePreset::C => (4, 2),
            SizePreset::D => (4, 4),
            SizePreset::E => (5, 4),
            SizePreset::F => (6, 4),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SizePreset::A => "A",
            SizePreset::B => "B",
            SizePreset::C => "C",
            SizePreset::D => "D",
            SizePreset::E => "E",
            SizePreset::F => "F",
        }
    }

    /// `reference` describes the two-unit, reference-panel installation.
    pub fn apply(self, reference: &SystemConfig) -> SystemConfig {
        let (n_pv, units) = self.spec();
        sized(reference, n_pv, units)
    }
}

impl FromStr for SizePreset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(SizePreset::A),
            "B" => Ok(SizePreset::B),
            "C" => Ok(SizePreset::C),
            "D" => Ok(SizePreset::D),
            "E" => Ok(SizePreset::E),
            "F" => Ok(SizePreset::F),
            other => Err(format!("unknown size preset `{other}` (expected A-F)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeatherSource {
    /// The bundled storm-week generator.
    #[default]
    Synthetic,
    Csv {
        path: PathBuf,
        #[serde(default)]
        schema: CsvSchema,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HistorySource {
    /// Synthetic profile for synthetic weather, otherwise built from the
    /// weather file itself.
    #[default]
    Auto,
    Synthetic,
    /// Directory of `day_NNN.csv` files.
    Dir {
        path: PathBuf,
    },
    /// Multi-year weather CSV averaged into a profile.
    Csv {
        path: PathBuf,
        #[serde(default)]
        schema: CsvSchema,
    },
}

/// Everything needed to reproduce one closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub weather: WeatherSource,
    pub history: HistorySource,
    /// Defaults to the synthetic start, or the first record of a CSV.
    pub start: Option<NaiveDateTime>,
    pub duration_days: f64,
    pub dt_hours: f64,
    pub controller: ControllerKind,
    pub mpc: MpcConfig,
    pub rule_based: RuleBasedConfig,
    /// Resizes `system` when set.
    pub size: Option<SizePreset>,
    pub system: SystemConfig,
    /// Defaults to a full battery.
    pub initial_e_bat: Option<f64>,
    pub initial_t_fr: f64,
    pub house: HouseModel,
    pub forecast: ForecastMode,
    pub output_dir: Option<PathBuf>,
    /// Add wall-clock solve times to the trace CSV.
    pub trace_timing: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            weather: WeatherSource::Synthetic,
            history: HistorySource::Auto,
            start: None,
            duration_days: 7.0,
            dt_hours: 1.0 / 6.0,
            controller: ControllerKind::Mpc,
            mpc: MpcConfig::default(),
            rule_based: RuleBasedConfig::default(),
            size: None,
            system: SystemConfig::default(),
            initial_e_bat: None,
            initial_t_fr: 2.0,
            house: HouseModel::TraceDriven,
            forecast: ForecastMode::Perfect,
            output_dir: None,
            trace_timing: false,
        }
    }
}

impl ScenarioConfig {
    /// Installation after applying the size preset.
    pub fn effective_system(&self) -> SystemConfig {
        match self.size {
            Some(p) => p.apply(&self.system),
            None => self.system.clone(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> Result<String, toml::ser::Error> {
        toml::to_string(self)
    }

    /// Sets the horizon of both predictive controllers.
    pub fn with_horizon_steps(mut self, n: usize) -> Self {
        self.mpc.n_steps = n;
        self.rule_based.n_steps = n;
        self
    }
}
