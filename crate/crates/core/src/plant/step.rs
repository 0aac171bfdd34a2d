use serde::{Deserialize, Serialize};

use super::config::{ConfigError, SystemConfig};
use super::fridge::{discretize_fridge, thermostat_output, FridgeDiscretization};
use super::house::HouseModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub e_bat: f64,
    pub t_fr: f64,
    /// Thermostat latch: the compressor state the thermostat last asked for.
    pub compressor_on: bool,
    pub house_state: Vec<f64>,
    pub step: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ControlCommand {
    pub u_fr: bool,
    pub u_s: bool,
    pub c: bool,
    pub d: bool,
    /// 0 idle, 1 normal charge, 2 fast charge.
    pub x_bat: u8,
}

impl ControlCommand {
    /// Everything disconnected, battery idle.
    pub fn safe() -> Self {
        Self::default()
    }

    pub fn is_valid(&self) -> bool {
        !(self.c && self.d) && self.x_bat <= 2 && (self.x_bat > 0) == self.c
    }
}

/// Energy flows realized during one step, all in Wh.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepAccounting {
    pub e_pv_avail: f64,
    pub e_pv_used: f64,
    pub e_hl: f64,
    pub e_fr: f64,
    pub e_s_desired: f64,
    pub e_s_served: f64,
    pub e_c: f64,
    pub e_dc: f64,
    pub compressor_run: bool,
    pub shed_secondary: bool,
    pub shed_fridge: bool,
    /// Indoor temperature used by this step's fridge update.
    pub t_house: f64,
}

pub fn pv_energy(cfg: &SystemConfig, ghi: f64, dt_hours: f64) -> f64 {
    f64::from(cfg.n_pv) * cfg.p_pv_rated * (ghi / cfg.g_std) * dt_hours
}

pub fn thermostat(state: &PlantState, cfg: &SystemConfig) -> bool {
    thermostat_output(state.t_fr, state.compressor_on, cfg.t_fr_min, cfg.t_fr_max)
}

/// The simulated physical system.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub sys: SystemConfig,
    pub disc: FridgeDiscretization,
    pub house: HouseModel,
    pub dt_hours: f64,
}

impl Plant {
    pub fn new(sys: SystemConfig, house: HouseModel, dt_hours: f64) -> Result<Self, ConfigError> {
        sys.validate()?;
        house.validate()?;
        if !(dt_hours > 0.0 && dt_hours.is_finite()) {
            return Err(ConfigError::Invalid("dt_hours must be positive".into()));
        }
        Ok(Self {
            disc: discretize_fridge(&sys, dt_hours),
            sys,
            house,
            dt_hours,
        })
    }

    pub fn initial_state(&self, e_bat: f64, t_fr: f64, ambient: f64) -> PlantState {
        PlantState {
            e_bat,
            t_fr,
            compressor_on: false,
            house_state: self.house.initial_state(ambient),
            step: 0,
        }
    }

    pub fn house_temp(&self, state: &PlantState, ambient: f64) -> f64 {
        self.house.temperature(&state.house_state, ambient)
    }

    pub fn pv_energy(&self, ghi: f64) -> f64 {
        pv_energy(&self.sys, ghi, self.dt_hours)
    }

    /// Advances one step. Commands the supply cannot carry are shed,
    /// secondary load first, then the fridge.
    pub fn step(
        &self,
        state: &PlantState,
        cmd: &ControlCommand,
        ghi: f64,
        e_s_desired: f64,
        ambient: f64,
    ) -> (PlantState, StepAccounting) {
        self.step_with_pv(state, cmd, self.pv_energy(ghi.max(0.0)), e_s_desired, ambient)
    }

    /// As [`Plant::step`] with the available PV energy given directly.
    pub fn step_with_pv(
        &self,
        state: &PlantState,
        cmd: &ControlCommand,
        e_pv: f64,
        e_s_desired: f64,
        ambient: f64,
    ) -> (PlantState, StepAccounting) {
        debug_assert!(cmd.is_valid(), "invalid command {cmd:?}");
        let e_pv = e_pv.max(0.0);
        let sys = &self.sys;
        let wants_cooling = thermostat(state, sys);
        let mut run = cmd.u_fr && wants_cooling;
        let e_fr_rated = sys.fridge_energy(self.dt_hours);
        let mut e_s = if cmd.u_s { e_s_desired.max(0.0) } else { 0.0 };
        let load = |run: bool, e_s: f64| (if run { e_fr_rated } else { 0.0 } + e_s) / sys.eta_inv;

        let dc_cap = if cmd.d { sys.discharge_cap(state.e_bat) } else { 0.0 };
        let available = e_pv + dc_cap;
        let mut e_hl = load(run, e_s);
        let mut shed_secondary = false;
        let mut shed_fridge = false;
        if available < e_hl && e_s > 0.0 {
            e_s = 0.0;
            shed_secondary = true;
            e_hl = load(run, e_s);
        }
        if available < e_hl && run {
            run = false;
            shed_fridge = true;
            e_hl = load(run, e_s);
        }

        let e_c = if cmd.c {
            (e_pv - e_hl)
                .min(sys.e_bat_max - state.e_bat)
                .min(sys.charge_cap(cmd.x_bat))
                .max(0.0)
        } else {
            0.0
        };
        let e_dc = if cmd.d { (e_hl - e_pv).min(dc_cap).max(0.0) } else { 0.0 };
        let e_pv_used = e_hl + e_c - e_dc;
        let e_bat = state.e_bat + sys.eta_c * e_c - e_dc / sys.eta_dc;

        let t_house = self.house_temp(state, ambient);
        let t_fr = self.disc.next(state.t_fr, run, t_house);
        let house_state = self.house.advance(&state.house_state, ambient, self.dt_hours);

        let next = PlantState {
            e_bat,
            t_fr,
            compressor_on: wants_cooling,
            house_state,
            step: state.step + 1,
        };
        let acc = StepAccounting {
            e_pv_avail: e_pv,
            e_pv_used,
            e_hl,
            e_fr: if run { e_fr_rated } else { 0.0 },
            e_s_desired: e_s_desired.max(0.0),
            e_s_served: e_s,
            e_c,
            e_dc,
            compressor_run: run,
            shed_secondary,
            shed_fridge,
            t_house,
        };
        (next, acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 1.0 / 6.0;

    fn plant() -> Plant {
        Plant::new(SystemConfig::default(), HouseModel::TraceDriven, DT).unwrap()
    }

    fn charge(x_bat: u8) -> ControlCommand {
        ControlCommand {
            u_fr: true,
            u_s: true,
            c: true,
            d: false,
            x_bat,
        }
    }

    #[test]
    fn pv_formula() {
        let cfg = SystemConfig::default();
        assert!((pv_energy(&cfg, 1000.0, DT) - 142.5).abs() < 1e-12);
        assert!((pv_energy(&cfg, 500.0, DT) - 71.25).abs() < 1e-12);
        assert_eq!(pv_energy(&cfg, 0.0, DT), 0.0);
    }

    #[test]
    fn full_battery_does_not_charge() {
        let p = plant();
        let s = p.initial_state(5400.0, 2.0, 25.0);
        // 3 panels at 1000 W/m² would give 142.5 Wh; use more panels for a big surplus
        let mut big = p.clone();
        big.sys.n_pv = 20;
        let (n, acc) = big.step(&s, &charge(1), 1000.0, 0.0, 25.0);
        assert_eq!(acc.e_c, 0.0);
        assert_eq!(n.e_bat, 5400.0);
        assert!(acc.e_pv_used < acc.e_pv_avail);
    }

    #[test]
    fn battery_at_floor_sheds() {
        let p = plant();
        let mut s = p.initial_state(1080.0, 5.0, 25.0);
        s.compressor_on = true;
        let cmd = ControlCommand {
            u_fr: true,
            u_s: true,
            c: false,
            d: true,
            x_bat: 0,
        };
        let (n, acc) = p.step(&s, &cmd, 0.0, 50.0, 25.0);
        assert_eq!(acc.e_dc, 0.0);
        assert!(acc.shed_secondary && acc.shed_fridge);
        assert!(!acc.compressor_run);
        assert_eq!(n.e_bat, 1080.0);
        // the thermostat still wants cooling
        assert!(n.compressor_on);
    }

    #[test]
    fn warm_fridge_runs_at_rated_power() {
        let p = plant();
        let s = p.initial_state(5400.0, 5.0, 25.0);
        let cmd = ControlCommand {
            u_fr: true,
            u_s: false,
            c: false,
            d: true,
            x_bat: 0,
        };
        let (n, acc) = p.step(&s, &cmd, 0.0, 0.0, 25.0);
        assert!(acc.compressor_run);
        assert!((acc.e_fr - 250.0 / 6.0).abs() < 1e-12);
        assert!((acc.e_dc - acc.e_fr / 0.9).abs() < 1e-12);
        assert!((n.e_bat - (5400.0 - acc.e_dc / 0.9)).abs() < 1e-12);
        assert!(n.t_fr < 5.0);
    }

    #[test]
    fn idle_free_response() {
        let p = plant();
        let s = p.initial_state(3000.0, 2.0, 25.0);
        let (n, acc) = p.step(&s, &ControlCommand::safe(), 0.0, 0.0, 25.0);
        assert_eq!(n.e_bat, 3000.0);
        assert_eq!(acc.e_hl, 0.0);
        assert!((n.t_fr - (25.0 + (2.0 - 25.0) * p.disc.a)).abs() < 1e-12);
    }

    #[test]
    fn power_gate_cannot_force_compressor() {
        let p = plant();
        let s = p.initial_state(5400.0, 2.0, 25.0);
        let (_, acc) = p.step(&s, &charge(1), 1000.0, 0.0, 25.0);
        assert!(!acc.compressor_run);
        assert_eq!(acc.e_fr, 0.0);
    }

    #[test]
    fn fast_charge_doubles_cap() {
        let mut p = plant();
        p.sys.n_pv = 60;
        let s = p.initial_state(2000.0, 2.0, 25.0);
        let (_, one) = p.step(&s, &charge(1), 1000.0, 0.0, 25.0);
        let (_, two) = p.step(&s, &charge(2), 1000.0, 0.0, 25.0);
        assert_eq!(one.e_c, 810.0);
        assert_eq!(two.e_c, 1620.0);
    }

    #[test]
    fn secondary_shed_before_fridge() {
        let p = plant();
        let mut s = p.initial_state(5400.0, 5.0, 25.0);
        s.compressor_on = true;
        // PV alone carries the fridge, not fridge + fans
        let cmd = ControlCommand {
            u_fr: true,
            u_s: true,
            c: false,
            d: false,
            x_bat: 0,
        };
        let (_, acc) = p.step(&s, &cmd, 500.0, 51.0, 25.0);
        assert!(acc.shed_secondary);
        assert!(!acc.shed_fridge);
        assert!(acc.compressor_run);
        assert_eq!(acc.e_s_served, 0.0);
    }

    #[test]
    fn command_validity() {
        assert!(ControlCommand::safe().is_valid());
        assert!(charge(2).is_valid());
        let both = ControlCommand {
            c: true,
            d: true,
            x_bat: 1,
            ..Default::default()
        };
        assert!(!both.is_valid());
        let idle_mode = ControlCommand {
            x_bat: 1,
            ..Default::default()
        };
        assert!(!idle_mode.is_valid());
    }
}
