use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::problem::{build_problem, map_gamma, HorizonForecast, MpcConfig, MpcDecisionLayout, MpcError};
use crate::milp::{solve_milp_with_hint, SolveStatus, SolverLimits};
use crate::plant::{discretize_fridge, ControlCommand, FridgeDiscretization, SystemConfig};

/// Γ values this close to 0 or 1 are snapped before mapping, so solver
/// round-off never flips the charge mode.
pub const GAMMA_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpcDiagnostics {
    pub status: SolveStatus,
    pub nodes: usize,
    /// Wall-clock seconds.
    pub solve_time: f64,
    pub objective: f64,
    pub gamma: f64,
    pub u_fr: bool,
    pub u_s: bool,
    pub warm_start_used: bool,
    /// The safe all-off command was applied instead of a solution.
    pub fallback: bool,
}

pub fn snap_gamma(gamma: f64) -> f64 {
    if gamma.abs() <= GAMMA_SNAP {
        0.0
    } else if (gamma - 1.0).abs() <= GAMMA_SNAP {
        1.0
    } else {
        gamma
    }
}

/// Receding-horizon controller; keeps the previous solution for warm hints.
#[derive(Debug, Clone)]
pub struct MpcController {
    pub cfg: MpcConfig,
    pub sys: SystemConfig,
    pub disc: FridgeDiscretization,
    /// Write each step's problem as `mpc_step_NNNNN.lp` into this directory.
    pub dump_dir: Option<PathBuf>,
    last: Option<Vec<f64>>,
}

impl MpcController {
    pub fn new(cfg: MpcConfig, sys: SystemConfig) -> Result<Self, MpcError> {
        cfg.validate()?;
        sys.validate().map_err(|e| MpcError::InvalidConfig(e.to_string()))?;
        Ok(Self {
            disc: discretize_fridge(&sys, cfg.dt_hours),
            cfg,
            sys,
            dump_dir: None,
            last: None,
        })
    }

    pub fn limits(&self) -> SolverLimits {
        SolverLimits {
            max_nodes: self.cfg.max_nodes,
            time_limit: Duration::from_secs_f64(self.cfg.time_limit_s),
        }
    }

    fn shifted_hint(&self) -> Option<Vec<f64>> {
        let old = self.last.as_ref()?;
        let lay = MpcDecisionLayout { n: self.cfg.n_steps };
        if old.len() != lay.num_vars() {
            return None;
        }
        let block = lay.num_vars() - 2;
        let per = block / lay.n;
        let mut hint = vec![0.0; old.len()];
        hint[0] = old[lay.t_fr(1)];
        hint[1] = old[lay.e_bat(1)];
        for i in 0..lay.n {
            let src = (i + 1).min(lay.n - 1);
            hint[2 + per * i..2 + per * (i + 1)].copy_from_slice(&old[2 + per * src..2 + per * (src + 1)]);
        }
        Some(hint)
    }

    /// Solves the horizon problem for the measured state and returns the
    /// first-step command. Failures degrade to the all-off command.
    pub fn control_step(
        &mut self,
        e_bat: f64,
        t_fr: f64,
        fc: &HorizonForecast,
        step: usize,
    ) -> (ControlCommand, MpcDiagnostics) {
        let mut diag = MpcDiagnostics {
            status: SolveStatus::Infeasible,
            nodes: 0,
            solve_time: 0.0,
            objective: f64::NAN,
            gamma: 0.0,
            u_fr: false,
            u_s: false,
            warm_start_used: false,
            fallback: true,
        };
        let p = match build_problem(e_bat, t_fr, fc, &self.cfg, &self.sys, &self.disc) {
            Ok(p) => p,
            Err(_) => {
                self.last = None;
                return (ControlCommand::safe(), diag);
            }
        };
        if let Some(dir) = &self.dump_dir {
            // best effort; a failed dump must not disturb the run
            let _ = std::fs::create_dir_all(dir)
                .and_then(|_| std::fs::write(dir.join(format!("mpc_step_{step:05}.lp")), p.to_lp_string()));
        }
        let hint = self.shifted_hint();
        let sol = match solve_milp_with_hint(&p, &self.limits(), hint.as_deref()) {
            Ok(s) => s,
            Err(_) => {
                self.last = None;
                return (ControlCommand::safe(), diag);
            }
        };
        diag.status = sol.status;
        diag.nodes = sol.nodes_explored;
        diag.solve_time = sol.solve_time;
        diag.warm_start_used = sol.warm_start_used;
        if !sol.has_point() {
            self.last = None;
            return (ControlCommand::safe(), diag);
        }
        let lay = MpcDecisionLayout { n: self.cfg.n_steps };
        let gamma = snap_gamma(sol.x[lay.gamma(0)]);
        let u_fr = sol.x[lay.u_fr(0)] > 0.5;
        let u_s = sol.x[lay.u_s(0)] > 0.5;
        let (c, d, x_bat) = map_gamma(gamma);
        diag.objective = sol.objective_value;
        diag.gamma = gamma;
        diag.u_fr = u_fr;
        diag.u_s = u_s;
        diag.fallback = false;
        self.last = Some(sol.x);
        (ControlCommand { u_fr, u_s, c, d, x_bat }, diag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fc(e_pv: f64, e_s: f64) -> HorizonForecast {
        HorizonForecast {
            e_pv: vec![e_pv; 18],
            e_s: vec![e_s; 18],
            t_house: vec![27.0; 18],
        }
    }

    #[test]
    fn snapping() {
        assert_eq!(snap_gamma(1e-12), 0.0);
        assert_eq!(snap_gamma(-1e-12), 0.0);
        assert_eq!(snap_gamma(1.0 + 1e-12), 1.0);
        assert_eq!(snap_gamma(0.3), 0.3);
    }

    #[test]
    fn dark_and_warm_discharges_for_fridge() {
        let mut m = MpcController::new(MpcConfig::default(), SystemConfig::default()).unwrap();
        let (cmd, diag) = m.control_step(5400.0, 5.0, &fc(0.0, 0.0), 0);
        assert_eq!(diag.status, SolveStatus::Optimal);
        assert!(cmd.u_fr);
        assert!(cmd.d && !cmd.c);
        assert!(diag.gamma < 0.0);
    }

    #[test]
    fn resolving_is_deterministic() {
        let mut a = MpcController::new(MpcConfig::default(), SystemConfig::default()).unwrap();
        let mut b = a.clone();
        let f = fc(60.0, 43.0);
        assert_eq!(
            a.control_step(3000.0, 3.5, &f, 0).0,
            b.control_step(3000.0, 3.5, &f, 0).0
        );
        assert_eq!(
            a.control_step(2990.0, 3.0, &f, 1).0,
            b.control_step(2990.0, 3.0, &f, 1).0
        );
    }

    #[test]
    fn short_forecast_falls_back() {
        let mut m = MpcController::new(MpcConfig::default(), SystemConfig::default()).unwrap();
        let mut f = fc(0.0, 0.0);
        f.e_pv.truncate(3);
        let (cmd, diag) = m.control_step(5400.0, 2.0, &f, 0);
        assert_eq!(cmd, ControlCommand::safe());
        assert!(diag.fallback);
    }
}
