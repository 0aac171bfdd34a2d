use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::{MilpProblem, Relation};
use crate::plant::{FridgeDiscretization, SystemConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpcError {
    #[error("historical slice has {got} values, horizon needs {need}")]
    SliceTooShort { got: usize, need: usize },
    #[error("forecast `{name}` has {got} values, horizon needs {need}")]
    ForecastLength {
        name: &'static str,
        got: usize,
        need: usize,
    },
    #[error("invalid MPC config: {0}")]
    InvalidConfig(String),
}

/// How the historical profile enters the indoor-temperature prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HousePrediction {
    /// Measured temperature held over the horizon.
    Constant,
    /// Historical shape shifted to pass through the measurement.
    #[default]
    Offset,
}

/// Scale of the stored-energy term of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryTerm {
    /// Stored energy in Wh.
    WattHours,
    /// Stored energy as a fraction of capacity.
    #[default]
    StateOfCharge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcConfig {
    pub n_steps: usize,
    pub dt_hours: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub eta_con: f64,
    pub house_pred: HousePrediction,
    pub battery_term: BatteryTerm,
    pub max_nodes: usize,
    pub time_limit_s: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            n_steps: 18,
            dt_hours: 1.0 / 6.0,
            lambda1: 1.0,
            lambda2: 1.0,
            lambda3: 1.0,
            lambda4: 10.0,
            gamma_min: -1.0,
            gamma_max: 2.0,
            eta_con: 1.0,
            house_pred: HousePrediction::Offset,
            battery_term: BatteryTerm::StateOfCharge,
            max_nodes: 100_000,
            time_limit_s: 10.0,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<(), MpcError> {
        let bad = |m: &str| Err(MpcError::InvalidConfig(m.into()));
        if self.n_steps == 0 {
            return bad("n_steps must be >= 1");
        }
        if !(self.dt_hours > 0.0 && self.dt_hours.is_finite()) {
            return bad("dt_hours must be positive");
        }
        if !(self.gamma_min < 0.0 && self.gamma_max > 1.0) {
            return bad("need gamma_min < 0 < 1 < gamma_max");
        }
        let lambdas = [self.lambda1, self.lambda2, self.lambda3, self.lambda4];
        if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return bad("lambdas must be finite and >= 0");
        }
        if !(self.eta_con > 0.0 && self.eta_con <= 1.0) {
            return bad("eta_con must lie in (0, 1]");
        }
        if !(self.time_limit_s > 0.0) || self.max_nodes == 0 {
            return bad("solver limits must be positive");
        }
        Ok(())
    }
}

/// Column map of the horizon problem. States `T_fr(s)`, `E_bat(s)` exist for
/// `s = 0..=N` (state 0 pinned to the measurement); per-step decisions
/// `Γ, u_fr, u_s, g, ζ` exist for `i = 0..N`. Step `i` drives state `i+1`
/// and `ζ(i)` relaxes the upper bound on `T_fr(i+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MpcDecisionLayout {
    pub n: usize,
}

const PER_STEP: usize = 7;

impl MpcDecisionLayout {
    pub fn num_vars(&self) -> usize {
        2 + PER_STEP * self.n
    }
    pub fn t_fr(&self, s: usize) -> usize {
        if s == 0 {
            0
        } else {
            2 + PER_STEP * (s - 1) + 5
        }
    }
    pub fn e_bat(&self, s: usize) -> usize {
        if s == 0 {
            1
        } else {
            2 + PER_STEP * (s - 1) + 6
        }
    }
    pub fn gamma(&self, i: usize) -> usize {
        2 + PER_STEP * i
    }
    pub fn u_fr(&self, i: usize) -> usize {
        2 + PER_STEP * i + 1
    }
    pub fn u_s(&self, i: usize) -> usize {
        2 + PER_STEP * i + 2
    }
    pub fn g(&self, i: usize) -> usize {
        2 + PER_STEP * i + 3
    }
    pub fn zeta(&self, i: usize) -> usize {
        2 + PER_STEP * i + 4
    }
}

/// Indoor temperature over the horizon. The first value is the measurement.
pub fn predict_house_temp(t_meas: f64, t_hist: &[f64], n: usize, mode: HousePrediction) -> Result<Vec<f64>, MpcError> {
    if t_hist.len() < n {
        return Err(MpcError::SliceTooShort {
            got: t_hist.len(),
            need: n,
        });
    }
    Ok(match mode {
        HousePrediction::Constant => vec![t_meas; n],
        HousePrediction::Offset => (0..n)
            .map(|k| {
                if k == 0 {
                    t_meas
                } else {
                    t_hist[k] + (t_meas - t_hist[0])
                }
            })
            .collect(),
    })
}

/// Exogenous inputs over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonForecast {
    /// Available PV energy per step, Wh.
    pub e_pv: Vec<f64>,
    /// Desired secondary energy per step, Wh.
    pub e_s: Vec<f64>,
    pub t_house: Vec<f64>,
}

/// Builds the horizon MILP from the measured battery energy and fridge
/// temperature.
pub fn build_problem(
    e_bat: f64,
    t_fr: f64,
    fc: &HorizonForecast,
    cfg: &MpcConfig,
    sys: &SystemConfig,
    disc: &FridgeDiscretization,
) -> Result<MilpProblem, MpcError> {
    let n = cfg.n_steps;
    for (name, v) in [("e_pv", &fc.e_pv), ("e_s", &fc.e_s), ("t_house", &fc.t_house)] {
        if v.len() < n {
            return Err(MpcError::ForecastLength {
                name,
                got: v.len(),
                need: n,
            });
        }
    }
    let lay = MpcDecisionLayout { n };
    let inf = f64::INFINITY;
    let e_fr = sys.fridge_energy(cfg.dt_hours);
    let e_unit = match cfg.battery_term {
        BatteryTerm::WattHours => 1.0,
        BatteryTerm::StateOfCharge => sys.e_bat_max,
    };

    let mut p = MilpProblem::new();
    p.add_var("T_fr_0", -inf, inf, 0.0);
    p.add_var("E_bat_0", -inf, inf, 0.0);
    let mut t_free = t_fr;
    for i in 0..n {
        let w = (n - i) as f64;
        p.add_var(format!("gamma_{i}"), cfg.gamma_min, cfg.gamma_max, cfg.lambda3);
        p.add_binary(format!("u_fr_{i}"), 1.0, 0.0);
        let us_hi = if fc.e_s[i] > 0.0 { 1.0 } else { 0.0 };
        p.add_binary(format!("u_s_{i}"), us_hi, -cfg.lambda4 * w);
        p.add_var(format!("g_{i}"), 0.0, fc.e_pv[i].max(0.0), 0.0);
        p.add_var(format!("zeta_{i}"), 0.0, inf, cfg.lambda1 * w);
        // the lower band gives way to the free response so that the
        // all-off point stays feasible from any measured state
        t_free = disc.next(t_free, false, fc.t_house[i]);
        p.add_var(format!("T_fr_{}", i + 1), sys.t_fr_min.min(t_free), inf, 0.0);
        p.add_var(
            format!("E_bat_{}", i + 1),
            sys.e_bat_min,
            sys.e_bat_max,
            -cfg.lambda2 / e_unit,
        );
    }
    debug_assert_eq!(p.num_vars, lay.num_vars());

    let e0 = e_bat.clamp(sys.e_bat_min, sys.e_bat_max);
    p.add_constraint(vec![(lay.t_fr(0), 1.0)], Relation::Eq, t_fr);
    p.add_constraint(vec![(lay.e_bat(0), 1.0)], Relation::Eq, e0);
    for i in 0..n {
        p.add_constraint(
            vec![
                (lay.t_fr(i + 1), 1.0),
                (lay.t_fr(i), -disc.a),
                (lay.u_fr(i), -disc.b * disc.q_fr),
            ],
            Relation::Eq,
            disc.d * fc.t_house[i],
        );
        p.add_constraint(
            vec![
                (lay.e_bat(i + 1), 1.0),
                (lay.e_bat(i), -1.0),
                (lay.gamma(i), -cfg.eta_con * sys.e_bat_c_max),
            ],
            Relation::Eq,
            0.0,
        );
        p.add_constraint(
            vec![
                (lay.u_fr(i), e_fr),
                (lay.gamma(i), sys.e_bat_c_max),
                (lay.u_s(i), fc.e_s[i]),
                (lay.g(i), -1.0),
            ],
            Relation::Eq,
            0.0,
        );
        p.add_constraint(
            vec![(lay.t_fr(i + 1), 1.0), (lay.zeta(i), -1.0)],
            Relation::Le,
            sys.t_fr_max,
        );
    }
    Ok(p)
}

/// The all-off point: no cooling, no secondary, idle battery, no PV draw.
pub fn all_off_point(
    p: &MilpProblem,
    lay: &MpcDecisionLayout,
    e_bat: f64,
    t_fr: f64,
    t_house: &[f64],
    disc: &FridgeDiscretization,
    t_max: f64,
) -> Vec<f64> {
    let mut x = vec![0.0; p.num_vars];
    let e0 = e_bat.clamp(p.lower[lay.e_bat(1)], p.upper[lay.e_bat(1)]);
    x[lay.t_fr(0)] = t_fr;
    x[lay.e_bat(0)] = e0;
    let mut t = t_fr;
    for i in 0..lay.n {
        t = disc.next(t, false, t_house[i]);
        x[lay.t_fr(i + 1)] = t;
        x[lay.e_bat(i + 1)] = e0;
        x[lay.zeta(i)] = (t - t_max).max(0.0);
    }
    x
}

/// Charge-controller decisions for a battery fraction `gamma`.
pub fn map_gamma(gamma: f64) -> (bool, bool, u8) {
    let c = gamma > 0.0;
    let d = gamma < 0.0;
    let x_bat = if gamma > 0.0 && gamma <= 1.0 {
        1
    } else if gamma > 1.0 && gamma <= 2.0 {
        2
    } else {
        0
    };
    (c, d, x_bat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::discretize_fridge;

    fn fc(n: usize, e_pv: f64, e_s: f64) -> HorizonForecast {
        HorizonForecast {
            e_pv: vec![e_pv; n],
            e_s: vec![e_s; n],
            t_house: vec![27.0; n],
        }
    }

    #[test]
    fn gamma_mapping() {
        assert_eq!(map_gamma(1.5), (true, false, 2));
        assert_eq!(map_gamma(0.0), (false, false, 0));
        assert_eq!(map_gamma(-0.7), (false, true, 0));
        assert_eq!(map_gamma(1.0), (true, false, 1));
        assert_eq!(map_gamma(2.0), (true, false, 2));
        assert_eq!(map_gamma(-1.0), (false, true, 0));
    }

    #[test]
    fn house_prediction_forms() {
        let hist = [25.0, 26.0, 27.0];
        assert_eq!(
            predict_house_temp(25.0, &hist, 3, HousePrediction::Offset).unwrap(),
            vec![25.0, 26.0, 27.0]
        );
        assert_eq!(
            predict_house_temp(28.0, &hist, 3, HousePrediction::Offset).unwrap(),
            vec![28.0, 29.0, 30.0]
        );
        assert_eq!(
            predict_house_temp(28.0, &hist, 1, HousePrediction::Offset).unwrap(),
            vec![28.0]
        );
        assert_eq!(
            predict_house_temp(28.0, &hist, 3, HousePrediction::Constant).unwrap(),
            vec![28.0; 3]
        );
        assert!(predict_house_temp(28.0, &hist, 4, HousePrediction::Offset).is_err());
    }

    #[test]
    fn layout_is_a_bijection() {
        let lay = MpcDecisionLayout { n: 5 };
        let mut seen = vec![false; lay.num_vars()];
        for s in 0..=5 {
            for c in [lay.t_fr(s), lay.e_bat(s)] {
                assert!(!seen[c]);
                seen[c] = true;
            }
        }
        for i in 0..5 {
            for c in [lay.gamma(i), lay.u_fr(i), lay.u_s(i), lay.g(i), lay.zeta(i)] {
                assert!(!seen[c]);
                seen[c] = true;
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn reference_dimensions() {
        let sys = SystemConfig::default();
        let cfg = MpcConfig::default();
        let disc = discretize_fridge(&sys, cfg.dt_hours);
        let p = build_problem(5400.0, 2.0, &fc(18, 100.0, 10.0), &cfg, &sys, &disc).unwrap();
        assert_eq!(p.num_binaries(), 36);
        assert_eq!(p.num_vars, 128);
        assert_eq!(p.constraints.len(), 74);
        let lay = MpcDecisionLayout { n: 18 };
        let us0 = p.objective.iter().find(|(j, _)| *j == lay.u_s(0)).unwrap().1;
        assert_eq!(us0, -180.0);
        p.validate().unwrap();
    }

    #[test]
    fn no_secondary_demand_fixes_u_s() {
        let sys = SystemConfig::default();
        let cfg = MpcConfig::default();
        let disc = discretize_fridge(&sys, cfg.dt_hours);
        let p = build_problem(5400.0, 2.0, &fc(18, 100.0, 0.0), &cfg, &sys, &disc).unwrap();
        let lay = MpcDecisionLayout { n: 18 };
        for i in 0..18 {
            assert_eq!(p.upper[lay.u_s(i)], 0.0);
        }
    }

    #[test]
    fn all_off_point_is_feasible() {
        let sys = SystemConfig::default();
        let cfg = MpcConfig::default();
        let disc = discretize_fridge(&sys, cfg.dt_hours);
        for (e, t) in [(1080.0, -3.0), (5400.0, 12.0), (3000.0, 2.0)] {
            let f = fc(18, 0.0, 40.0);
            let p = build_problem(e, t, &f, &cfg, &sys, &disc).unwrap();
            let lay = MpcDecisionLayout { n: 18 };
            let x = all_off_point(&p, &lay, e, t, &f.t_house, &disc, sys.t_fr_max);
            assert!(p.max_violation(&x) < 1e-9, "{e} {t}");
        }
    }
}
