use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use pvguard_core::mpc::{BatteryTerm, HousePrediction};
use pvguard_core::plant::{sized, HouseModel};
use pvguard_core::scenario::{ControllerKind, HistorySource, ScenarioConfig, SizePreset, WeatherSource};
use pvguard_core::weather::{parse_timestamp, CsvSchema, ForecastMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ControllerArg {
    Mpc,
    Baseline,
    #[value(alias = "rule_based")]
    RuleBased,
}

impl From<ControllerArg> for ControllerKind {
    fn from(c: ControllerArg) -> Self {
        match c {
            ControllerArg::Mpc => ControllerKind::Mpc,
            ControllerArg::Baseline => ControllerKind::Baseline,
            ControllerArg::RuleBased => ControllerKind::RuleBased,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HouseArg {
    TraceDriven,
    FirstOrderRc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ForecastArg {
    Perfect,
    Persistence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BatteryTermArg {
    /// Stored energy in Wh.
    Wh,
    /// Stored energy as a fraction of capacity.
    Soc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HousePredArg {
    Constant,
    Offset,
}

/// Scenario settings. A `--config` TOML file is read first; every other flag
/// overrides the corresponding field.
#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// Scenario TOML file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Weather CSV (default: bundled synthetic storm week).
    #[arg(long, value_name = "FILE")]
    pub weather: Option<PathBuf>,
    /// Read weather and history CSVs with the NSRDB column layout.
    #[arg(long)]
    pub nsrdb: bool,
    /// Directory of `day_NNN.csv` historical temperature profiles.
    #[arg(long, value_name = "DIR", conflicts_with = "history_csv")]
    pub history_dir: Option<PathBuf>,
    /// Multi-year weather CSV used to build the historical profile.
    #[arg(long, value_name = "FILE")]
    pub history_csv: Option<PathBuf>,
    /// Start time, e.g. 2017-09-11T00:00.
    #[arg(long)]
    pub start: Option<String>,
    #[arg(long)]
    pub days: Option<f64>,
    #[arg(long)]
    pub dt_minutes: Option<f64>,
    #[arg(long, value_enum)]
    pub controller: Option<ControllerArg>,
    /// Size preset A-F.
    #[arg(long)]
    pub size: Option<String>,
    /// Panel count (with --battery-units, replaces the preset).
    #[arg(long)]
    pub n_pv: Option<u32>,
    /// Battery units of 2700 Wh.
    #[arg(long)]
    pub battery_units: Option<u32>,
    /// Initial battery energy, Wh (default: full).
    #[arg(long)]
    pub e_bat0: Option<f64>,
    /// Initial fridge temperature, °C.
    #[arg(long)]
    pub t_fr0: Option<f64>,
    #[arg(long, value_enum)]
    pub house: Option<HouseArg>,
    /// House thermal resistance, °C/W.
    #[arg(long)]
    pub house_r: Option<f64>,
    /// House thermal capacitance, J/°C.
    #[arg(long)]
    pub house_c: Option<f64>,
    #[arg(long, value_enum)]
    pub forecast: Option<ForecastArg>,
    /// Planning horizon of the MPC and Rule-Based controllers.
    #[arg(long)]
    pub horizon_hours: Option<f64>,
    /// Rule-Based fast-charge allowance per day.
    #[arg(long)]
    pub fast_charge_hours: Option<f64>,
    #[arg(long, value_enum)]
    pub battery_term: Option<BatteryTermArg>,
    #[arg(long, value_enum)]
    pub house_pred: Option<HousePredArg>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub lambda3: Option<f64>,
    #[arg(long)]
    pub lambda4: Option<f64>,
    #[arg(long)]
    pub gamma_min: Option<f64>,
    #[arg(long)]
    pub gamma_max: Option<f64>,
    /// Branch-and-bound node cap per MPC solve.
    #[arg(long)]
    pub max_nodes: Option<usize>,
    /// Wall-clock cap per MPC solve, seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Include wall-clock solve times in trace CSVs.
    #[arg(long)]
    pub with_timing: bool,
}

fn schema(nsrdb: bool) -> CsvSchema {
    if nsrdb {
        CsvSchema::nsrdb()
    } else {
        CsvSchema::default()
    }
}

impl ScenarioArgs {
    pub fn to_config(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                ScenarioConfig::from_toml(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => ScenarioConfig::default(),
        };
        if let Some(w) = &self.weather {
            cfg.weather = WeatherSource::Csv {
                path: w.clone(),
                schema: schema(self.nsrdb),
            };
        }
        if let Some(d) = &self.history_dir {
            cfg.history = HistorySource::Dir { path: d.clone() };
        }
        if let Some(h) = &self.history_csv {
            cfg.history = HistorySource::Csv {
                path: h.clone(),
                schema: schema(self.nsrdb),
            };
        }
        if let Some(s) = &self.start {
            cfg.start = Some(parse_timestamp(s).with_context(|| format!("unrecognised start time `{s}`"))?);
        }
        if let Some(d) = self.days {
            cfg.duration_days = d;
        }
        if let Some(m) = self.dt_minutes {
            if !(m > 0.0) {
                bail!("--dt-minutes must be positive");
            }
            let steps_mpc = cfg.mpc.n_steps as f64 * cfg.dt_hours;
            let steps_rb = cfg.rule_based.n_steps as f64 * cfg.dt_hours;
            cfg.dt_hours = m / 60.0;
            // keep the horizon length in hours
            cfg.mpc.n_steps = ((steps_mpc / cfg.dt_hours).round() as usize).max(1);
            cfg.rule_based.n_steps = ((steps_rb / cfg.dt_hours).round() as usize).max(1);
        }
        cfg.mpc.dt_hours = cfg.dt_hours;
        cfg.rule_based.dt_hours = cfg.dt_hours;
        if let Some(c) = self.controller {
            cfg.controller = c.into();
        }
        if let Some(s) = &self.size {
            cfg.size = Some(s.parse::<SizePreset>().map_err(anyhow::Error::msg)?);
        }
        if self.n_pv.is_some() || self.battery_units.is_some() {
            let base = cfg.effective_system();
            let units = self
                .battery_units
                .unwrap_or_else(|| ((base.e_bat_max / 2700.0).round() as u32).max(1));
            cfg.system = sized(&cfg.system, self.n_pv.unwrap_or(base.n_pv), units);
            cfg.size = None;
        }
        if let Some(e) = self.e_bat0 {
            cfg.initial_e_bat = Some(e);
        }
        if let Some(t) = self.t_fr0 {
            cfg.initial_t_fr = t;
        }
        match self.house {
            Some(HouseArg::TraceDriven) => cfg.house = HouseModel::TraceDriven,
            Some(HouseArg::FirstOrderRc) => cfg.house = self.rc_model(),
            None => {}
        }
        if let Some(f) = self.forecast {
            cfg.forecast = match f {
                ForecastArg::Perfect => ForecastMode::Perfect,
                ForecastArg::Persistence => ForecastMode::Persistence,
            };
        }
        if let Some(h) = self.horizon_hours {
            let n = (h / cfg.dt_hours).round() as usize;
            if n == 0 {
                bail!("--horizon-hours {h} is shorter than one step");
            }
            cfg = cfg.with_horizon_steps(n);
        }
        if let Some(b) = self.fast_charge_hours {
            cfg.rule_based.fast_charge_budget_hours = b;
        }
        if let Some(t) = self.battery_term {
            cfg.mpc.battery_term = match t {
                BatteryTermArg::Wh => BatteryTerm::WattHours,
                BatteryTermArg::Soc => BatteryTerm::StateOfCharge,
            };
        }
        if let Some(p) = self.house_pred {
            cfg.mpc.house_pred = match p {
                HousePredArg::Constant => HousePrediction::Constant,
                HousePredArg::Offset => HousePrediction::Offset,
            };
        }
        let m = &mut cfg.mpc;
        for (dst, src) in [
            (&mut m.lambda1, self.lambda1),
            (&mut m.lambda2, self.lambda2),
            (&mut m.lambda3, self.lambda3),
            (&mut m.lambda4, self.lambda4),
            (&mut m.gamma_min, self.gamma_min),
            (&mut m.gamma_max, self.gamma_max),
            (&mut m.time_limit_s, self.time_limit),
        ] {
            if let Some(v) = src {
                *dst = v;
            }
        }
        if let Some(n) = self.max_nodes {
            m.max_nodes = n;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = Some(o.clone());
        }
        if self.with_timing {
            cfg.trace_timing = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// RC house from the flags, falling back to the default parameters.
    pub fn rc_model(&self) -> HouseModel {
        match HouseModel::default_rc() {
            HouseModel::FirstOrderRc { r_h, c_h } => HouseModel::FirstOrderRc {
                r_h: self.house_r.unwrap_or(r_h),
                c_h: self.house_c.unwrap_or(c_h),
            },
            other => other,
        }
    }
}

pub fn parse_list<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(f).collect()
}

pub fn parse_controllers(s: &str) -> Result<Vec<ControllerKind>> {
    parse_list(s, |t| t.parse::<ControllerKind>().map_err(anyhow::Error::msg))
}

pub fn parse_sizes(s: &str) -> Result<Vec<SizePreset>> {
    parse_list(s, |t| t.parse::<SizePreset>().map_err(anyhow::Error::msg))
}

pub fn parse_hours(s: &str) -> Result<Vec<f64>> {
    parse_list(s, |t| t.parse::<f64>().with_context(|| format!("bad number `{t}`")))
}
