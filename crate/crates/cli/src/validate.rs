//! Randomised self-check of the embedded solver: branch-and-bound against
//! exhaustive enumeration of the binaries, and LP strong duality.

use std::time::Instant;

use pvguard_core::milp::{solve_lp, solve_milp, MilpProblem, Relation, SolveStatus, SolverLimits};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-6;

#[derive(Debug, Clone, Default)]
pub struct ValidationSummary {
    pub milp_total: usize,
    pub milp_pass: usize,
    pub lp_total: usize,
    pub lp_pass: usize,
    pub seconds: f64,
    pub failures: Vec<String>,
}

impl ValidationSummary {
    pub fn ok(&self) -> bool {
        self.milp_pass == self.milp_total && self.lp_pass == self.lp_total
    }
}

fn rows_around(rng: &mut ChaCha8Rng, p: &mut MilpProblem, x0: &[f64], rows: usize, density: f64) {
    let n = x0.len();
    for _ in 0..rows {
        let mut coefs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(density) {
                coefs.push((j, rng.gen_range(-5.0..5.0)));
            }
        }
        if coefs.is_empty() {
            coefs.push((rng.gen_range(0..n), rng.gen_range(0.5..5.0)));
        }
        let ax: f64 = coefs.iter().map(|&(j, v)| v * x0[j]).sum();
        match rng.gen_range(0..4) {
            0 | 1 => p.add_constraint(coefs, Relation::Le, ax + rng.gen_range(0.0..3.0)),
            2 => p.add_constraint(coefs, Relation::Ge, ax - rng.gen_range(0.0..3.0)),
            _ => p.add_constraint(coefs, Relation::Eq, ax),
        }
    }
}

/// Feasible by construction: rows are built around a sampled point.
pub fn random_milp(rng: &mut ChaCha8Rng, max_bin: usize, max_cont: usize) -> MilpProblem {
    let nb = rng.gen_range(1..=max_bin.max(1));
    let nc = rng.gen_range(0..=max_cont);
    let mut p = MilpProblem::new();
    let mut x0 = Vec::new();
    for i in 0..nb {
        p.add_binary(format!("b{i}"), 1.0, rng.gen_range(-10.0..10.0));
        x0.push(f64::from(u8::from(rng.gen_bool(0.5))));
    }
    for i in 0..nc {
        let lo: f64 = rng.gen_range(-5.0..5.0);
        let hi = lo + rng.gen_range(0.5..10.0);
        p.add_var(format!("c{i}"), lo, hi, rng.gen_range(-10.0..10.0));
        x0.push(rng.gen_range(lo..hi));
    }
    let rows = rng.gen_range(1..=12);
    rows_around(rng, &mut p, &x0, rows, 0.5);
    p
}

pub fn random_lp(rng: &mut ChaCha8Rng, max_vars: usize) -> MilpProblem {
    let n = rng.gen_range(1..=max_vars.max(1));
    let mut p = MilpProblem::new();
    let mut x0 = Vec::new();
    for i in 0..n {
        let lo: f64 = rng.gen_range(-10.0..10.0);
        let hi = lo + rng.gen_range(0.1..20.0);
        p.add_var(format!("x{i}"), lo, hi, rng.gen_range(-10.0..10.0));
        x0.push(rng.gen_range(lo..hi));
    }
    let rows = rng.gen_range(1..=15);
    rows_around(rng, &mut p, &x0, rows, 0.6);
    p
}

/// Best objective over all binary assignments, each solved as an LP.
pub fn enumerate(p: &MilpProblem) -> Result<Option<f64>, String> {
    let bins: Vec<usize> = (0..p.num_vars).filter(|&j| p.binary[j]).collect();
    if bins.len() > 20 {
        return Err(format!("{} binaries is too many to enumerate", bins.len()));
    }
    let mut best: Option<f64> = None;
    for mask in 0u32..(1u32 << bins.len()) {
        let mut q = p.clone();
        for (k, &j) in bins.iter().enumerate() {
            let v = f64::from((mask >> k) & 1);
            q.lower[j] = v;
            q.upper[j] = v;
            q.binary[j] = false;
        }
        let s = solve_lp(&q).map_err(|e| e.to_string())?;
        match s.status {
            SolveStatus::Optimal => best = Some(best.map_or(s.objective_value, |b| b.min(s.objective_value))),
            SolveStatus::Infeasible => {}
            other => return Err(format!("enumeration LP ended {}", other.as_str())),
        }
    }
    Ok(best)
}

/// `b'y` plus the bound terms of the reduced costs `c - A'y`.
pub fn dual_objective(p: &MilpProblem, y: &[f64]) -> f64 {
    let mut d = p.cost_vector();
    for (i, row) in p.constraints.iter().enumerate() {
        for &(j, v) in &row.coefs {
            d[j] -= v * y[i];
        }
    }
    let rows: f64 = p.constraints.iter().zip(y).map(|(r, yi)| r.rhs * yi).sum();
    let bounds: f64 = d
        .iter()
        .enumerate()
        .map(|(j, &dj)| {
            if dj > 0.0 {
                p.lower[j] * dj
            } else if dj < 0.0 {
                p.upper[j] * dj
            } else {
                0.0
            }
        })
        .sum();
    rows + bounds
}

pub fn run(
    seed: u64,
    milp_instances: usize,
    lp_instances: usize,
    max_bin: usize,
    max_cont: usize,
) -> ValidationSummary {
    let t0 = Instant::now();
    let mut out = ValidationSummary {
        milp_total: milp_instances,
        lp_total: lp_instances,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limits = SolverLimits::default();
    for i in 0..milp_instances {
        let p = random_milp(&mut rng, max_bin, max_cont);
        let verdict = solve_milp(&p, &limits).map_err(|e| e.to_string()).and_then(|s| {
            let want = enumerate(&p)?;
            match (s.status, want) {
                (SolveStatus::Optimal, Some(w)) if (s.objective_value - w).abs() <= TOL => Ok(()),
                (SolveStatus::Infeasible, None) => Ok(()),
                (st, w) => Err(format!(
                    "b&b {} {:.9} vs enumeration {:?}",
                    st.as_str(),
                    s.objective_value,
                    w
                )),
            }
        });
        match verdict {
            Ok(()) => out.milp_pass += 1,
            Err(e) => out.failures.push(format!("milp #{i}: {e}")),
        }
    }
    for i in 0..lp_instances {
        let p = random_lp(&mut rng, max_cont.max(1));
        let verdict = solve_lp(&p).map_err(|e| e.to_string()).and_then(|s| {
            if s.status != SolveStatus::Optimal {
                return Err(format!("status {}", s.status.as_str()));
            }
            let dual = dual_objective(&p, &s.duals);
            if (dual - s.objective_value).abs() <= TOL {
                Ok(())
            } else {
                Err(format!("primal {:.9} dual {:.9}", s.objective_value, dual))
            }
        });
        match verdict {
            Ok(()) => out.lp_pass += 1,
            Err(e) => out.failures.push(format!("lp #{i}: {e}")),
        }
    }
    out.seconds = t0.elapsed().as_secs_f64();
    out
}
