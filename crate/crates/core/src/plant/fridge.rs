use serde::{Deserialize, Serialize};

use super::config::SystemConfig;

/// Coefficients of `T(k+1) = a T(k) + b u Q + d T_house(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FridgeDiscretization {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    /// Heat extraction rate `COP * P_rated`, W.
    pub q_fr: f64,
}

/// Zero-order-hold discretization of
/// `dT/dt = (T_house - T)/(R C) - u Q/C`.
pub fn discretize_fridge(cfg: &SystemConfig, dt_hours: f64) -> FridgeDiscretization {
    let tau = cfg.r_fr * cfg.c_fr;
    let a = (-dt_hours * 3600.0 / tau).exp();
    // 1 - a without cancellation for tiny steps
    let one_minus_a = -(-dt_hours * 3600.0 / tau).exp_m1();
    FridgeDiscretization {
        a,
        b: -one_minus_a * cfg.r_fr,
        d: one_minus_a,
        q_fr: cfg.cop * cfg.p_fr_rated,
    }
}

impl FridgeDiscretization {
    pub fn next(&self, t_fr: f64, compressor: bool, t_house: f64) -> f64 {
        let u = if compressor { 1.0 } else { 0.0 };
        self.a * t_fr + self.b * u * self.q_fr + self.d * t_house
    }
}

/// Hysteresis thermostat: on above `hi`, off below `lo`, otherwise holds.
pub fn thermostat_output(t_fr: f64, latch: bool, lo: f64, hi: f64) -> bool {
    if t_fr > hi {
        true
    } else if t_fr < lo {
        false
    } else {
        latch
    }
}
