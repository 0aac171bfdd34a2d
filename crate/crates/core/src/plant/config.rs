use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid system config: {0}")]
    Invalid(String),
}

/// Physical constants of the PV + battery + loads installation.
///
/// Energies are Wh (per step where noted), powers W, temperatures °C,
/// thermal resistance °C/W and capacitance J/°C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub n_pv: u32,
    pub p_pv_rated: f64,
    pub g_std: f64,
    pub e_bat_min: f64,
    pub e_bat_max: f64,
    /// Normal-mode charge cap per step.
    pub e_bat_c_max: f64,
    /// Discharge cap per step.
    pub e_bat_dc_max: f64,
    pub eta_c: f64,
    pub eta_dc: f64,
    pub eta_inv: f64,
    pub p_fr_rated: f64,
    pub t_fr_min: f64,
    pub t_fr_max: f64,
    pub r_fr: f64,
    pub c_fr: f64,
    pub cop: f64,
    pub n_lights: u32,
    pub p_light: f64,
    pub n_fans: u32,
    pub p_fan: f64,
    /// Charge cap multiplier applied when `x_bat = 2`.
    pub fast_charge_multiplier: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_pv: 3,
            p_pv_rated: 285.0,
            g_std: 1000.0,
            e_bat_min: 1080.0,
            e_bat_max: 5400.0,
            e_bat_c_max: 810.0,
            e_bat_dc_max: 844.5,
            eta_c: 0.9,
            eta_dc: 0.9,
            eta_inv: 0.9,
            p_fr_rated: 250.0,
            t_fr_min: 0.0,
            t_fr_max: 4.0,
            r_fr: 1.4749,
            c_fr: 8937.4,
            cop: 0.2324,
            n_lights: 6,
            p_light: 8.0,
            n_fans: 4,
            p_fan: 65.0,
            fast_charge_multiplier: 2.0,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        let fields = [
            self.p_pv_rated,
            self.g_std,
            self.e_bat_min,
            self.e_bat_max,
            self.e_bat_c_max,
            self.e_bat_dc_max,
            self.eta_c,
            self.eta_dc,
            self.eta_inv,
            self.p_fr_rated,
            self.t_fr_min,
            self.t_fr_max,
            self.r_fr,
            self.c_fr,
            self.cop,
            self.p_light,
            self.p_fan,
            self.fast_charge_multiplier,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return bad("non-finite parameter");
        }
        for (name, eta) in [
            ("eta_c", self.eta_c),
            ("eta_dc", self.eta_dc),
            ("eta_inv", self.eta_inv),
        ] {
            if !(eta > 0.0 && eta <= 1.0) {
                return bad(&format!("{name} must lie in (0, 1]"));
            }
        }
        if self.e_bat_min < 0.0 || self.e_bat_min >= self.e_bat_max {
            return bad("need 0 <= e_bat_min < e_bat_max");
        }
        let ratings = [
            self.p_pv_rated,
            self.g_std,
            self.e_bat_c_max,
            self.e_bat_dc_max,
            self.p_fr_rated,
            self.r_fr,
            self.c_fr,
            self.cop,
            self.p_light,
            self.p_fan,
        ];
        if ratings.iter().any(|&v| v <= 0.0) {
            return bad("ratings must be positive");
        }
        if self.t_fr_min >= self.t_fr_max {
            return bad("need t_fr_min < t_fr_max");
        }
        if self.fast_charge_multiplier < 1.0 {
            return bad("fast_charge_multiplier must be >= 1");
        }
        Ok(())
    }

    /// Secondary-load power with every light and fan on, W.
    pub fn light_power(&self) -> f64 {
        f64::from(self.n_lights) * self.p_light
    }

    pub fn fan_power(&self) -> f64 {
        f64::from(self.n_fans) * self.p_fan
    }

    /// Fridge energy per step at rated power.
    pub fn fridge_energy(&self, dt_hours: f64) -> f64 {
        self.p_fr_rated * dt_hours
    }

    /// Charge cap for the given mode, before the headroom and surplus clamps.
    pub fn charge_cap(&self, x_bat: u8) -> f64 {
        match x_bat {
            0 => 0.0,
            1 => self.e_bat_c_max,
            _ => self.fast_charge_multiplier * self.e_bat_c_max,
        }
    }

    /// Energy deliverable to the bus this step if discharging, honoring the
    /// floor after the discharge loss.
    pub fn discharge_cap(&self, e_bat: f64) -> f64 {
        ((e_bat - self.e_bat_min).max(0.0) * self.eta_dc).min(self.e_bat_dc_max)
    }
}

/// Scales the battery by `units / 2`, the reference installation having two
/// units, and sets the panel count.
pub fn sized(base: &SystemConfig, n_pv: u32, battery_units: u32) -> SystemConfig {
    let k = f64::from(battery_units) / 2.0;
    SystemConfig {
        n_pv,
        e_bat_min: base.e_bat_min * k,
        e_bat_max: base.e_bat_max * k,
        e_bat_c_max: base.e_bat_c_max * k,
        e_bat_dc_max: base.e_bat_dc_max * k,
        ..base.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SystemConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_inverted_bounds() {
        let mut c = SystemConfig::default();
        c.t_fr_min = 5.0;
        assert!(c.validate().is_err());
        let mut c = SystemConfig::default();
        c.eta_inv = 1.2;
        assert!(c.validate().is_err());
        let mut c = SystemConfig::default();
        c.e_bat_min = c.e_bat_max;
        assert!(c.validate().is_err());
    }

    #[test]
    fn four_units_double_the_battery() {
        let c = sized(&SystemConfig::default(), 4, 4);
        assert_eq!(c.n_pv, 4);
        assert_eq!(c.e_bat_max, 10800.0);
        assert_eq!(c.e_bat_min, 2160.0);
        assert_eq!(c.e_bat_c_max, 1620.0);
        assert_eq!(c.e_bat_dc_max, 1689.0);
    }

    #[test]
    fn discharge_cap_respects_floor() {
        let c = SystemConfig::default();
        assert_eq!(c.discharge_cap(1080.0), 0.0);
        assert!((c.discharge_cap(1180.0) - 90.0).abs() < 1e-12);
        assert_eq!(c.discharge_cap(5400.0), 844.5);
    }

    #[test]
    fn toml_overrides_single_field() {
        let c: SystemConfig = toml::from_str("n_pv = 5\n").unwrap();
        assert_eq!(c.n_pv, 5);
        assert_eq!(c.e_bat_max, 5400.0);
    }
}
