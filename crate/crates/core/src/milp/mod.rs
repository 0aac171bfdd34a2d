//! Embedded solver for small mixed-integer linear programs.
//!
//! [`solve_lp`] solves the continuous relaxation with a bounded-variable
//! revised simplex; [`solve_milp`] runs branch-and-bound on the binary columns
//! on top of it. Both are deterministic: identical problems give identical
//! solutions.

mod branch;
mod problem;
mod simplex;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use branch::{warm_hint, Incumbent};
pub use problem::{Constraint, MilpProblem, ProblemError, Relation};
use simplex::{LpOutcome, Simplex};

/// Integrality tolerance on binary columns.
pub const INT_TOL: f64 = 1e-6;
/// Absolute optimality gap used for pruning.
pub const GAP_TOL: f64 = 1e-6;
/// Primal feasibility tolerance, scaled by the row 2-norm for rows.
pub const FEAS_TOL: f64 = simplex::FEAS_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node cap reached; `x` holds the incumbent if one was found.
    NodeLimit,
    /// Time cap reached or the LP engine gave up; `x` holds the incumbent if any.
    Stalled,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NodeLimit => "node_limit",
            SolveStatus::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverLimits {
    pub max_nodes: usize,
    pub time_limit: Duration,
}

impl Default for SolverLimits {
    fn default() -> Self {
        Self {
            max_nodes: 100_000,
            time_limit: Duration::from_secs(10),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Best point found; empty when there is none.
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub nodes_explored: usize,
    /// Wall-clock seconds.
    pub solve_time: f64,
    /// Whether a feasible warm hint seeded the incumbent.
    pub warm_start_used: bool,
}

impl MilpSolution {
    /// True when `x` holds a usable point (optimal or an incumbent from a
    /// truncated search).
    pub fn has_point(&self) -> bool {
        !self.x.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    /// Row duals `y` of the final basis, for `a_i x` rows as given.
    pub duals: Vec<f64>,
    /// Reduced costs `c - A^T y` of the structural columns.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

/// Solves the continuous relaxation of `p` (binaries relaxed to their bounds).
pub fn solve_lp(p: &MilpProblem) -> Result<LpSolution, ProblemError> {
    p.validate()?;
    let mut lp = Simplex::new(p);
    let outcome = lp.solve_primal();
    let status = match outcome {
        LpOutcome::Optimal => SolveStatus::Optimal,
        LpOutcome::Infeasible => SolveStatus::Infeasible,
        LpOutcome::Unbounded => SolveStatus::Unbounded,
        LpOutcome::IterationLimit => SolveStatus::Stalled,
    };
    let x = lp.structural_x();
    Ok(LpSolution {
        status,
        objective_value: if status == SolveStatus::Optimal {
            lp.objective()
        } else {
            f64::NAN
        },
        x,
        duals: lp.row_duals(),
        reduced_costs: lp.reduced_costs(),
        iterations: lp.iterations,
    })
}

/// Branch-and-bound with default limits and no warm hint.
pub fn solve_milp(p: &MilpProblem, limits: &SolverLimits) -> Result<MilpSolution, ProblemError> {
    branch::solve_milp(p, limits, None)
}

/// Branch-and-bound seeded with `hint` (see [`warm_hint`]).
pub fn solve_milp_with_hint(
    p: &MilpProblem,
    limits: &SolverLimits,
    hint: Option<&[f64]>,
) -> Result<MilpSolution, ProblemError> {
    branch::solve_milp(p, limits, hint)
}
