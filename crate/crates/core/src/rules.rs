//! Baseline and Rule-Based controllers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mpc::HorizonForecast;
use crate::plant::{thermostat, ControlCommand, HouseModel, Plant, PlantState, SystemConfig};

/// Mismatches smaller than this (Wh) count as zero.
pub const MISMATCH_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RulesError {
    #[error("forecast covers {got} steps, horizon needs {need}")]
    HorizonOutOfRange { got: usize, need: usize },
    #[error("invalid rule-based config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleBasedConfig {
    pub n_steps: usize,
    pub fast_charge_budget_hours: f64,
    pub dt_hours: f64,
}

impl Default for RuleBasedConfig {
    fn default() -> Self {
        Self {
            n_steps: 18,
            fast_charge_budget_hours: 5.0,
            dt_hours: 1.0 / 6.0,
        }
    }
}

impl RuleBasedConfig {
    pub fn validate(&self) -> Result<(), RulesError> {
        if self.n_steps == 0 {
            return Err(RulesError::InvalidConfig("n_steps must be >= 1".into()));
        }
        if !(self.fast_charge_budget_hours >= 0.0 && self.fast_charge_budget_hours.is_finite()) {
            return Err(RulesError::InvalidConfig(
                "fast_charge_budget_hours must be >= 0".into(),
            ));
        }
        if !(self.dt_hours > 0.0 && self.dt_hours.is_finite()) {
            return Err(RulesError::InvalidConfig("dt_hours must be positive".into()));
        }
        Ok(())
    }
}

/// Projected serviced vs desired load energy over the horizon, Wh.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MismatchReport {
    pub e_serviced: f64,
    pub e_desired: f64,
    /// `e_serviced - e_desired`, never positive.
    pub e_mis: f64,
}

/// Daily fast-charge allowance, reset when `steps_until_reset` reaches zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FastChargeBudget {
    pub left_hours: f64,
    pub daily_hours: f64,
    pub steps_until_reset: usize,
}

impl FastChargeBudget {
    /// Takes one step of fast charging if the allowance covers it.
    pub fn try_take(&mut self, dt_hours: f64) -> bool {
        if self.left_hours + 1e-9 >= dt_hours {
            self.left_hours = (self.left_hours - dt_hours).max(0.0);
            true
        } else {
            false
        }
    }

    /// Moves to the next step, refilling at the day boundary.
    pub fn advance(&mut self, steps_per_day: usize) {
        if self.steps_until_reset <= 1 {
            self.left_hours = self.daily_hours;
            self.steps_until_reset = steps_per_day;
        } else {
            self.steps_until_reset -= 1;
        }
    }
}

/// House load for the given gates, including inverter loss. The fridge draws
/// only when its thermostat calls for cooling.
fn house_load(sys: &SystemConfig, dt_hours: f64, fridge_running: bool, e_s: f64) -> f64 {
    let e_fr = if fridge_running {
        sys.fridge_energy(dt_hours)
    } else {
        0.0
    };
    (e_fr + e_s) / sys.eta_inv
}

fn charge_command(u_fr: bool, u_s: bool, e_pv: f64, served: f64) -> ControlCommand {
    let c = e_pv > served;
    ControlCommand {
        u_fr,
        u_s,
        c,
        d: e_pv < served,
        x_bat: u8::from(c),
    }
}

/// Serves every load while PV plus battery can carry it, shedding secondary
/// then fridge otherwise; charges on surplus and discharges on deficit.
pub fn baseline_step(
    state: &PlantState,
    e_pv: f64,
    e_s_desired: f64,
    sys: &SystemConfig,
    dt_hours: f64,
) -> ControlCommand {
    let running = thermostat(state, sys);
    let available = e_pv + sys.discharge_cap(state.e_bat);
    let e_s = e_s_desired.max(0.0);
    let full = house_load(sys, dt_hours, running, e_s);
    let fridge_only = house_load(sys, dt_hours, running, 0.0);
    let (u_fr, u_s, served) = if available >= full {
        (true, e_s > 0.0, full)
    } else if available >= fridge_only {
        (true, false, fridge_only)
    } else {
        (false, false, 0.0)
    };
    charge_command(u_fr, u_s, e_pv, served)
}

/// Closed-loop simulation of the baseline-with-fast-charging policy over
/// the horizon, on an internal plant driven by the forecast indoor
/// temperature. Returns the mismatch and the thermostat's current output.
pub fn rulebased_internal_sim(
    state: &PlantState,
    fc: &HorizonForecast,
    n_steps: usize,
    budget: FastChargeBudget,
    model: &Plant,
) -> Result<(MismatchReport, bool), RulesError> {
    let need = n_steps;
    let got = fc.e_pv.len().min(fc.e_s.len()).min(fc.t_house.len());
    if got < need {
        return Err(RulesError::HorizonOutOfRange { got, need });
    }
    let sys = &model.sys;
    let dt = model.dt_hours;
    let spd = (24.0 / dt).round().max(1.0) as usize;
    let mut budget = budget;
    let mut s = PlantState {
        house_state: Vec::new(),
        ..state.clone()
    };
    let mut report = MismatchReport::default();
    for i in 0..n_steps {
        let mut cmd = baseline_step(&s, fc.e_pv[i], fc.e_s[i], sys, dt);
        if cmd.c {
            let served = house_load(
                sys,
                dt,
                cmd.u_fr && thermostat(&s, sys),
                if cmd.u_s { fc.e_s[i] } else { 0.0 },
            );
            if fc.e_pv[i] - served > sys.e_bat_c_max && budget.try_take(dt) {
                cmd.x_bat = 2;
            }
        }
        let wants = thermostat(&s, sys);
        let (next, acc) = model.step_with_pv(&s, &cmd, fc.e_pv[i], fc.e_s[i], fc.t_house[i]);
        report.e_desired += fc.e_s[i].max(0.0) + if wants { sys.fridge_energy(dt) } else { 0.0 };
        report.e_serviced += acc.e_s_served + acc.e_fr;
        s = next;
        budget.advance(spd);
    }
    report.e_mis = (report.e_serviced - report.e_desired).min(0.0);
    Ok((report, thermostat(state, sys)))
}

/// Secondary gate from the projected mismatch: on when nothing is short;
/// on while the rest of the horizon's secondary demand can still absorb the
/// shortfall; off once it cannot.
pub fn secondary_logic(report: &MismatchReport, e_s_now: f64, e_s_horizon: f64) -> bool {
    if e_s_now <= 0.0 {
        return false;
    }
    let short = -report.e_mis;
    short <= MISMATCH_TOL || short <= e_s_horizon - e_s_now
}

/// Charge-controller commands for the chosen load gates. Fast charge is
/// used when the PV surplus exceeds the normal charge cap and the daily
/// allowance still covers a step; the allowance is drawn down then.
#[allow(clippy::too_many_arguments)]
pub fn battery_logic(
    u_fr: bool,
    u_s: bool,
    e_pv: f64,
    e_s_now: f64,
    state: &PlantState,
    budget: &mut FastChargeBudget,
    sys: &SystemConfig,
    dt_hours: f64,
) -> (bool, bool, u8) {
    let running = u_fr && thermostat(state, sys);
    let e_hl = house_load(sys, dt_hours, running, if u_s { e_s_now.max(0.0) } else { 0.0 });
    let cmd = charge_command(u_fr, u_s, e_pv, e_hl);
    let x_bat = if cmd.c && e_pv - e_hl > sys.e_bat_c_max && budget.try_take(dt_hours) {
        2
    } else {
        cmd.x_bat
    };
    (cmd.c, cmd.d, x_bat)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleDiagnostics {
    pub e_mis: f64,
    pub fast_charge: bool,
}

/// Rule-Based controller with its per-run fast-charge allowance.
#[derive(Debug, Clone)]
pub struct RuleBasedController {
    pub cfg: RuleBasedConfig,
    model: Plant,
    budget: FastChargeBudget,
    steps_per_day: usize,
}

impl RuleBasedController {
    /// `steps_until_midnight` aligns the allowance reset with local midnight.
    pub fn new(cfg: RuleBasedConfig, sys: SystemConfig, steps_until_midnight: usize) -> Result<Self, RulesError> {
        cfg.validate()?;
        let model = Plant::new(sys, HouseModel::TraceDriven, cfg.dt_hours)
            .map_err(|e| RulesError::InvalidConfig(e.to_string()))?;
        let steps_per_day = (24.0 / cfg.dt_hours).round().max(1.0) as usize;
        Ok(Self {
            budget: FastChargeBudget {
                left_hours: cfg.fast_charge_budget_hours,
                daily_hours: cfg.fast_charge_budget_hours,
                steps_until_reset: steps_until_midnight.max(1),
            },
            cfg,
            model,
            steps_per_day,
        })
    }

    pub fn budget(&self) -> &FastChargeBudget {
        &self.budget
    }

    /// Command for the current step; call once per step. When the forecast
    /// is shorter than the horizon the mismatch is treated as unknown and
    /// the secondary load is kept off.
    pub fn command(&mut self, state: &PlantState, fc: &HorizonForecast) -> (ControlCommand, RuleDiagnostics) {
        let sys = &self.model.sys;
        let e_pv = fc.e_pv.first().copied().unwrap_or(0.0);
        let e_s_now = fc.e_s.first().copied().unwrap_or(0.0);
        let sim = rulebased_internal_sim(state, fc, self.cfg.n_steps, self.budget, &self.model);
        let (u_fr, u_s, e_mis) = match sim {
            Ok((report, u_fr)) => {
                let horizon_s: f64 = fc.e_s[..self.cfg.n_steps].iter().map(|v| v.max(0.0)).sum();
                (u_fr, secondary_logic(&report, e_s_now, horizon_s), report.e_mis)
            }
            Err(_) => (thermostat(state, sys), false, f64::NAN),
        };
        let (c, d, x_bat) = battery_logic(
            u_fr,
            u_s,
            e_pv,
            e_s_now,
            state,
            &mut self.budget,
            sys,
            self.cfg.dt_hours,
        );
        self.budget.advance(self.steps_per_day);
        (
            ControlCommand { u_fr, u_s, c, d, x_bat },
            RuleDiagnostics {
                e_mis,
                fast_charge: x_bat == 2,
            },
        )
    }
}
