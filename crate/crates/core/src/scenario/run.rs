use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::{NaiveDateTime, Timelike};
use thiserror::Error;

use super::config::{ControllerKind, HistorySource, ScenarioConfig, WeatherSource};
use crate::metrics::{summarize, MetricsError, ResiliencyReport, RunTrace, TraceStep};
use crate::mpc::{predict_house_temp, HorizonForecast, MpcController, MpcError};
use crate::plant::{pv_energy, ConfigError, Plant, PlantState, SystemConfig};
use crate::rules::{baseline_step, RuleBasedController, RulesError};
use crate::weather::{
    build_historical_profile, forecast, parse_weather_csv, resample_span, steps_per_day, synthetic, ExogenousTrace,
    HistoricalProfiles, WeatherError, WeatherRecord,
};

/// Minutes between synthetic weather samples before resampling.
const SYNTHETIC_CADENCE_MIN: u32 = 10;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("weather input `{path}`: {source}")]
    WeatherFile { path: PathBuf, source: WeatherError },
    #[error("weather: {0}")]
    Weather(#[from] WeatherError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mpc(#[from] MpcError),
    #[error(transparent)]
    Rules(#[from] RulesError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("writing `{path}`: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

/// Desired secondary energy per step: lights 18:00-24:00, fans 21:00-09:00,
/// judged at the start of each step.
pub fn build_secondary_profile(start: NaiveDateTime, n_steps: usize, dt_hours: f64, sys: &SystemConfig) -> Vec<f64> {
    let step = chrono::Duration::milliseconds((dt_hours * 3.6e6).round() as i64);
    (0..n_steps)
        .map(|k| {
            let t = start + step * k as i32;
            let h = f64::from(t.num_seconds_from_midnight()) / 3600.0;
            let lights = if h >= 18.0 { sys.light_power() } else { 0.0 };
            let fans = if !(9.0..21.0).contains(&h) {
                sys.fan_power()
            } else {
                0.0
            };
            (lights + fans) * dt_hours
        })
        .collect()
}

/// Resolved exogenous inputs. `offset` steps of lead-in precede the run so
/// persistence forecasts have a previous day to look at.
#[derive(Debug, Clone)]
pub struct ScenarioInputs {
    pub trace: ExogenousTrace,
    pub history: HistoricalProfiles,
    pub offset: usize,
    pub n_steps: usize,
    pub horizon: usize,
}

fn read_records(path: &Path, schema: &crate::weather::CsvSchema) -> Result<Vec<WeatherRecord>, ScenarioError> {
    let wrap = |source| ScenarioError::WeatherFile {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(|e| wrap(WeatherError::Io(e)))?;
    parse_weather_csv(file, schema).map_err(wrap)
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.duration_days > 0.0 && self.duration_days.is_finite()) {
            return Err(ScenarioError::Invalid(format!(
                "duration_days must be > 0, got {}",
                self.duration_days
            )));
        }
        steps_per_day(self.dt_hours)?;
        if !self.initial_t_fr.is_finite() {
            return Err(ScenarioError::Invalid("initial_t_fr must be finite".into()));
        }
        let sys = self.effective_system();
        sys.validate()?;
        if let Some(e) = self.initial_e_bat {
            if !(e >= sys.e_bat_min && e <= sys.e_bat_max) {
                return Err(ScenarioError::Invalid(format!(
                    "initial_e_bat {e} outside [{}, {}]",
                    sys.e_bat_min, sys.e_bat_max
                )));
            }
        }
        self.house
            .validate()
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.duration_days * 24.0 / self.dt_hours).round() as usize
    }

    fn horizon(&self) -> usize {
        match self.controller {
            ControllerKind::Mpc => self.mpc.n_steps,
            ControllerKind::RuleBased => self.rule_based.n_steps,
            ControllerKind::Baseline => 1,
        }
    }

    /// Loads or generates the weather, secondary demand and historical
    /// profile covering the run plus one horizon.
    pub fn resolve_inputs(&self) -> Result<ScenarioInputs, ScenarioError> {
        self.validate()?;
        let dt = self.dt_hours;
        let spd = steps_per_day(dt)?;
        let n_steps = self.n_steps();
        let horizon = self.horizon().max(1);
        let offset = match self.forecast {
            crate::weather::ForecastMode::Perfect => 0,
            crate::weather::ForecastMode::Persistence => spd,
        };
        let total = offset + n_steps + horizon;
        let lead = chrono::Duration::milliseconds((offset as f64 * dt * 3.6e6).round() as i64);

        let (records, start) = match &self.weather {
            WeatherSource::Synthetic => {
                let start = self.start.unwrap_or_else(synthetic::default_start);
                let lead_h = offset as f64 * dt;
                let hours = total as f64 * dt;
                let cad = f64::from(SYNTHETIC_CADENCE_MIN) / 60.0;
                let n = (hours / cad).ceil() as usize + 1;
                let recs: Vec<WeatherRecord> = (0..n)
                    .map(|i| synthetic::sample(start, i as f64 * cad - lead_h))
                    .collect();
                (recs, start)
            }
            WeatherSource::Csv { path, schema } => {
                let recs = read_records(path, schema)?;
                let first = recs.first().map(|r| r.timestamp).ok_or(WeatherError::EmptyFile)?;
                let start = self.start.unwrap_or(first + lead);
                (recs, start)
            }
        };
        let first = records[0].timestamp;
        let last = records[records.len() - 1].timestamp;
        if start - lead < first {
            return Err(WeatherError::InsufficientCoverage(format!(
                "run starts {start} but data begins {first}; persistence forecasts need one prior day"
            ))
            .into());
        }
        let end = start + chrono::Duration::milliseconds(((n_steps as f64) * dt * 3.6e6).round() as i64);
        if end > last + chrono::Duration::milliseconds((dt * 3.6e6).round() as i64) {
            return Err(WeatherError::InsufficientCoverage(format!("run ends {end} but data ends {last}")).into());
        }
        let mut trace = resample_span(&records, start - lead, total, dt)?;
        trace.secondary_demand = build_secondary_profile(trace.start, total, dt, &self.effective_system());
        trace.validate()?;

        let history = match (&self.history, &self.weather) {
            (HistorySource::Synthetic, _) | (HistorySource::Auto, WeatherSource::Synthetic) => {
                synthetic::historical_profiles(dt)?
            }
            (HistorySource::Auto, WeatherSource::Csv { .. }) => build_historical_profile(&records, dt)?,
            (HistorySource::Dir { path }, _) => {
                HistoricalProfiles::read_dir(path, dt).map_err(|source| ScenarioError::WeatherFile {
                    path: path.clone(),
                    source,
                })?
            }
            (HistorySource::Csv { path, schema }, _) => {
                let recs = read_records(path, schema)?;
                build_historical_profile(&recs, dt).map_err(|source| ScenarioError::WeatherFile {
                    path: path.clone(),
                    source,
                })?
            }
        };
        Ok(ScenarioInputs {
            trace,
            history,
            offset,
            n_steps,
            horizon,
        })
    }
}

enum Active {
    Mpc(Box<MpcController>),
    Baseline,
    RuleBased(Box<RuleBasedController>),
}

/// Result of one closed-loop run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: RunTrace,
    pub report: ResiliencyReport,
    pub system: SystemConfig,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Write each MPC problem as an LP file here.
    pub dump_lp: Option<PathBuf>,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, ScenarioError> {
    let inputs = cfg.resolve_inputs()?;
    run_with_inputs(cfg, &inputs, &RunOptions::default())
}

/// Closed loop over pre-resolved inputs. Controller failures inside a step
/// fall back to the safe command and never abort the run.
pub fn run_with_inputs(
    cfg: &ScenarioConfig,
    inputs: &ScenarioInputs,
    opts: &RunOptions,
) -> Result<RunOutput, ScenarioError> {
    cfg.validate()?;
    let sys = cfg.effective_system();
    let dt = cfg.dt_hours;
    let spd = steps_per_day(dt)?;
    let tr = &inputs.trace;
    let horizon = inputs.horizon;
    if tr.len() < inputs.offset + inputs.n_steps + horizon {
        return Err(WeatherError::HorizonOutOfRange {
            k: inputs.offset + inputs.n_steps,
            n: horizon,
            len: tr.len(),
        }
        .into());
    }
    let plant = Plant::new(sys.clone(), cfg.house.clone(), dt)?;
    let start = tr.timestamp(inputs.offset);
    let mut active = match cfg.controller {
        ControllerKind::Mpc => {
            let mut m = cfg.mpc.clone();
            m.dt_hours = dt;
            let mut c = MpcController::new(m, sys.clone())?;
            c.dump_dir = opts.dump_lp.clone();
            Active::Mpc(Box::new(c))
        }
        ControllerKind::Baseline => Active::Baseline,
        ControllerKind::RuleBased => {
            let mut r = cfg.rule_based.clone();
            r.dt_hours = dt;
            let since_midnight = (f64::from(start.num_seconds_from_midnight()) / 3600.0 / dt).round() as usize % spd;
            Active::RuleBased(Box::new(RuleBasedController::new(
                r,
                sys.clone(),
                spd - since_midnight,
            )?))
        }
    };
    let e0 = cfg.initial_e_bat.unwrap_or(sys.e_bat_max);
    let mut state: PlantState = plant.initial_state(e0, cfg.initial_t_fr, tr.ambient_temp[inputs.offset]);
    let pv_series: Vec<f64> = tr.ghi.iter().map(|&g| pv_energy(&sys, g, dt)).collect();
    let mut steps = Vec::with_capacity(inputs.n_steps);

    for k in 0..inputs.n_steps {
        let ka = inputs.offset + k;
        let ambient = tr.ambient_temp[ka];
        let e_s = tr.secondary_demand[ka];
        let fc = || -> Result<HorizonForecast, ScenarioError> {
            let e_pv = forecast(&pv_series, ka, horizon, cfg.forecast, spd)?;
            let t_meas = plant.house_temp(&state, ambient);
            let hist = inputs.history.slice(tr.timestamp(ka), horizon)?;
            let t_house = predict_house_temp(t_meas, &hist, horizon, cfg.mpc.house_pred)?;
            Ok(HorizonForecast {
                e_pv,
                e_s: tr.secondary_demand[ka..ka + horizon].to_vec(),
                t_house,
            })
        };
        let (cmd, solver, e_mis) = match &mut active {
            Active::Mpc(m) => {
                let f = fc()?;
                let (cmd, d) = m.control_step(state.e_bat, state.t_fr, &f, k);
                (cmd, Some(d), None)
            }
            Active::Baseline => (baseline_step(&state, pv_series[ka], e_s, &sys, dt), None, None),
            Active::RuleBased(r) => {
                let f = fc()?;
                let (cmd, d) = r.command(&state, &f);
                (cmd, None, Some(d.e_mis))
            }
        };
        let (next, acc) = plant.step_with_pv(&state, &cmd, pv_series[ka], e_s, ambient);
        steps.push(TraceStep {
            step: k,
            timestamp: tr.timestamp(ka),
            t_fr: next.t_fr,
            e_bat: next.e_bat,
            cmd,
            acc,
            solver,
            e_mis,
        });
        state = next;
    }
    let trace = RunTrace {
        controller: cfg.controller.as_str().to_string(),
        dt_hours: dt,
        initial_e_bat: e0,
        initial_t_fr: cfg.initial_t_fr,
        steps,
    };
    let report = summarize(&trace, &sys)?;
    Ok(RunOutput {
        trace,
        report,
        system: sys,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, ScenarioError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| ScenarioError::Output {
            path: path.to_path_buf(),
            source,
        })
}

fn write_text(path: &Path, text: &str) -> Result<(), ScenarioError> {
    std::fs::write(path, text).map_err(|source| ScenarioError::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `trace.csv`, `report.json` and `report.txt` into `dir`.
pub fn write_run_outputs(out: &RunOutput, dir: &Path, with_timing: bool) -> Result<(), ScenarioError> {
    std::fs::create_dir_all(dir).map_err(|source| ScenarioError::Output {
        path: dir.to_path_buf(),
        source,
    })?;
    out.trace.write_csv(create(&dir.join("trace.csv"))?, with_timing)?;
    write_text(&dir.join("report.json"), &out.report.to_json()?)?;
    write_text(&dir.join("report.txt"), &out.report.to_key_value())?;
    Ok(())
}

/// Whitespace-separated columns for plotting: hours, fridge temperature,
/// battery energy, PV available, PV used, secondary served, desired.
pub fn write_gnuplot(trace: &RunTrace, path: &Path) -> Result<(), ScenarioError> {
    use std::io::Write;
    let io = |source| ScenarioError::Output {
        path: path.to_path_buf(),
        source,
    };
    let mut w = create(path)?;
    writeln!(w, "# hours t_fr e_bat e_pv_avail e_pv_used e_s_served e_s_desired").map_err(io)?;
    for s in &trace.steps {
        writeln!(
            w,
            "{:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6}",
            (s.step + 1) as f64 * trace.dt_hours,
            s.t_fr,
            s.e_bat,
            s.acc.e_pv_avail,
            s.acc.e_pv_used,
            s.acc.e_s_served,
            s.acc.e_s_desired
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;

    #[test]
    fn secondary_schedule() {
        let sys = SystemConfig::default();
        let s = synthetic::default_start();
        let p = build_secondary_profile(s, 144, 1.0 / 6.0, &sys);
        assert_eq!(p.len(), 144);
        assert!((p[120] - 8.0).abs() < 1e-12);
        assert!((p[132] - 308.0 / 6.0).abs() < 1e-12);
        assert_eq!(p[72], 0.0);
        // fans until 09:00, lights off at midnight
        assert!((p[53] - 260.0 / 6.0).abs() < 1e-12);
        assert_eq!(p[54], 0.0);
        assert!((p[0] - 260.0 / 6.0).abs() < 1e-12);
        assert!((p[143] - 308.0 / 6.0).abs() < 1e-12);
        let q = build_secondary_profile(s + Duration::hours(20), 1, 1.0 / 6.0, &sys);
        assert_eq!(q[0], p[120]);
    }

    fn short(controller: ControllerKind) -> ScenarioConfig {
        ScenarioConfig {
            controller,
            duration_days: 0.25,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn inputs_cover_run_and_horizon() {
        let cfg = short(ControllerKind::Mpc);
        let i = cfg.resolve_inputs().unwrap();
        assert_eq!(i.n_steps, 36);
        assert_eq!(i.trace.len(), 36 + 18);
        assert_eq!(i.offset, 0);
        assert_eq!(i.trace.start, synthetic::default_start());
    }

    #[test]
    fn persistence_adds_lead_day() {
        let cfg = ScenarioConfig {
            forecast: crate::weather::ForecastMode::Persistence,
            ..short(ControllerKind::RuleBased)
        };
        let i = cfg.resolve_inputs().unwrap();
        assert_eq!(i.offset, 144);
        assert_eq!(i.trace.timestamp(144), synthetic::default_start());
        let out = run_with_inputs(&cfg, &i, &RunOptions::default()).unwrap();
        assert_eq!(out.trace.steps.len(), 36);
        assert_eq!(out.trace.steps[0].timestamp, synthetic::default_start());
    }

    #[test]
    fn each_controller_runs() {
        for c in ControllerKind::ALL {
            let out = run_scenario(&short(c)).unwrap();
            assert_eq!(out.trace.steps.len(), 36);
            assert_eq!(out.report.controller, c.as_str());
        }
    }

    #[test]
    fn bad_initial_energy_rejected() {
        let cfg = ScenarioConfig {
            initial_e_bat: Some(10.0),
            ..ScenarioConfig::default()
        };
        assert!(matches!(run_scenario(&cfg), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn missing_weather_file_names_path() {
        let cfg = ScenarioConfig {
            weather: WeatherSource::Csv {
                path: "/nonexistent/w.csv".into(),
                schema: Default::default(),
            },
            ..ScenarioConfig::default()
        };
        let msg = run_scenario(&cfg).unwrap_err().to_string();
        assert!(msg.contains("/nonexistent/w.csv"), "{msg}");
    }
}
