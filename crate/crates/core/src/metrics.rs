//! Resiliency metrics and run traces.

use std::io::Write;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::SolveStatus;
use crate::mpc::MpcDiagnostics;
use crate::plant::{ControlCommand, StepAccounting, SystemConfig};

/// Degrees above the upper fridge limit tolerated before a step counts as
/// a violation.
pub const PRM_TOLERANCE_C: f64 = 2.0;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace has no step with secondary demand")]
    NoSecondaryDemand,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub timestamp: NaiveDateTime,
    /// Fridge temperature at the end of the step.
    pub t_fr: f64,
    /// Battery energy at the end of the step.
    pub e_bat: f64,
    pub cmd: ControlCommand,
    pub acc: StepAccounting,
    pub solver: Option<MpcDiagnostics>,
    /// Rule-Based projected mismatch, Wh.
    pub e_mis: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub controller: String,
    pub dt_hours: f64,
    pub initial_e_bat: f64,
    pub initial_t_fr: f64,
    pub steps: Vec<TraceStep>,
}

impl RunTrace {
    pub fn t_sim_hours(&self) -> f64 {
        self.steps.len() as f64 * self.dt_hours
    }

    /// Per-step CSV. Wall-clock solve time is only written when
    /// `with_timing` is set, so default traces are reproducible byte for byte.
    pub fn write_csv<W: Write>(&self, out: W, with_timing: bool) -> Result<(), MetricsError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "step",
            "timestamp",
            "t_fr",
            "e_bat",
            "u_fr",
            "u_s",
            "c",
            "d",
            "x_bat",
            "compressor_run",
            "e_pv_avail",
            "e_pv_used",
            "e_hl",
            "e_fr",
            "e_s_desired",
            "e_s_served",
            "e_c",
            "e_dc",
            "shed_secondary",
            "shed_fridge",
            "t_house",
            "solver_status",
            "nodes",
            "objective",
            "gamma",
            "warm_start",
            "e_mis",
        ];
        if with_timing {
            header.push("solve_time");
        }
        w.write_record(&header)?;
        let b = |v: bool| if v { "1".to_string() } else { "0".to_string() };
        for s in &self.steps {
            let a = &s.acc;
            let mut rec = vec![
                s.step.to_string(),
                s.timestamp.format("%Y-%m-%dT%H:%M").to_string(),
                s.t_fr.to_string(),
                s.e_bat.to_string(),
                b(s.cmd.u_fr),
                b(s.cmd.u_s),
                b(s.cmd.c),
                b(s.cmd.d),
                s.cmd.x_bat.to_string(),
                b(a.compressor_run),
                a.e_pv_avail.to_string(),
                a.e_pv_used.to_string(),
                a.e_hl.to_string(),
                a.e_fr.to_string(),
                a.e_s_desired.to_string(),
                a.e_s_served.to_string(),
                a.e_c.to_string(),
                a.e_dc.to_string(),
                b(a.shed_secondary),
                b(a.shed_fridge),
                a.t_house.to_string(),
            ];
            match &s.solver {
                Some(d) => rec.extend([
                    d.status.as_str().to_string(),
                    d.nodes.to_string(),
                    d.objective.to_string(),
                    d.gamma.to_string(),
                    b(d.warm_start_used),
                ]),
                None => rec.extend(std::iter::repeat_n(String::new(), 5)),
            }
            rec.push(s.e_mis.map(|v| v.to_string()).unwrap_or_default());
            if with_timing {
                rec.push(s.solver.map(|d| d.solve_time.to_string()).unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Hours per day the fridge stayed within its tolerable limit, judged at
/// the end of each step.
pub fn compute_prm(trace: &RunTrace, sys: &SystemConfig) -> Result<f64, MetricsError> {
    if trace.steps.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    Ok(24.0 * (1.0 - violation_hours(trace, sys) / trace.t_sim_hours()))
}

pub fn violation_hours(trace: &RunTrace, sys: &SystemConfig) -> f64 {
    let limit = sys.t_fr_max + PRM_TOLERANCE_C;
    trace.steps.iter().filter(|s| s.t_fr > limit).count() as f64 * trace.dt_hours
}

/// Percentage of steps with secondary demand in which all of it was served.
pub fn compute_srm(trace: &RunTrace) -> Result<f64, MetricsError> {
    let mut wanted = 0usize;
    let mut served = 0usize;
    for s in &trace.steps {
        if s.acc.e_s_desired > 0.0 {
            wanted += 1;
            if s.acc.e_s_served == s.acc.e_s_desired {
                served += 1;
            }
        }
    }
    if trace.steps.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    if wanted == 0 {
        return Err(MetricsError::NoSecondaryDemand);
    }
    Ok(100.0 * served as f64 / wanted as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResiliencyReport {
    pub controller: String,
    pub steps: usize,
    pub prm: f64,
    /// `None` when the run had no secondary demand.
    pub srm: Option<f64>,
    pub violation_hours: f64,
    pub unserved_secondary_wh: f64,
    pub fast_charge_hours_used: f64,
    pub solver_success_pct: f64,
    pub avg_solve_time: f64,
    pub max_solve_time: f64,
    pub fallback_steps: usize,
}

pub fn summarize(trace: &RunTrace, sys: &SystemConfig) -> Result<ResiliencyReport, MetricsError> {
    let prm = compute_prm(trace, sys)?;
    let srm = match compute_srm(trace) {
        Ok(v) => Some(v),
        Err(MetricsError::NoSecondaryDemand) => None,
        Err(e) => return Err(e),
    };
    let unserved = trace.steps.iter().map(|s| s.acc.e_s_desired - s.acc.e_s_served).sum();
    let fast = trace.steps.iter().filter(|s| s.cmd.x_bat == 2).count() as f64 * trace.dt_hours;
    let solver: Vec<&MpcDiagnostics> = trace.steps.iter().filter_map(|s| s.solver.as_ref()).collect();
    let (success, avg, max, fallback) = if solver.is_empty() {
        (100.0, 0.0, 0.0, 0)
    } else {
        let n = solver.len() as f64;
        let ok = solver.iter().filter(|d| d.status == SolveStatus::Optimal).count() as f64;
        (
            100.0 * ok / n,
            solver.iter().map(|d| d.solve_time).sum::<f64>() / n,
            solver.iter().map(|d| d.solve_time).fold(0.0, f64::max),
            solver.iter().filter(|d| d.fallback).count(),
        )
    };
    Ok(ResiliencyReport {
        controller: trace.controller.clone(),
        steps: trace.steps.len(),
        prm,
        srm,
        violation_hours: violation_hours(trace, sys),
        unserved_secondary_wh: unserved,
        fast_charge_hours_used: fast,
        solver_success_pct: success,
        avg_solve_time: avg,
        max_solve_time: max,
        fallback_steps: fallback,
    })
}

impl ResiliencyReport {
    pub const CSV_HEADER: [&'static str; 11] = [
        "controller",
        "steps",
        "prm",
        "srm",
        "violation_hours",
        "unserved_secondary_wh",
        "fast_charge_hours_used",
        "solver_success_pct",
        "avg_solve_time",
        "max_solve_time",
        "fallback_steps",
    ];

    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.controller.clone(),
            self.steps.to_string(),
            self.prm.to_string(),
            self.srm.map(|v| v.to_string()).unwrap_or_default(),
            self.violation_hours.to_string(),
            self.unserved_secondary_wh.to_string(),
            self.fast_charge_hours_used.to_string(),
            self.solver_success_pct.to_string(),
            self.avg_solve_time.to_string(),
            self.max_solve_time.to_string(),
            self.fallback_steps.to_string(),
        ]
    }

    /// `key=value` lines in header order.
    pub fn to_key_value(&self) -> String {
        Self::CSV_HEADER
            .iter()
            .zip(self.csv_fields())
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn to_json(&self) -> Result<String, MetricsError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
