//! Shared oracles for the integration suites. Nothing here calls into the
//! branch-and-bound code; the enumeration oracle only uses the plain LP solve.
#![allow(dead_code)]

use pvguard_core::milp::{solve_lp, MilpProblem, Relation, SolveStatus};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random MILP with a known feasible point: boxed columns, `<=`, `>=` and `=`
/// rows built around a sampled interior assignment.
pub fn random_milp(rng: &mut ChaCha8Rng, max_bin: usize, max_cont: usize) -> MilpProblem {
    let nb = rng.gen_range(1..=max_bin);
    let nc = rng.gen_range(0..=max_cont);
    let mut p = MilpProblem::new();
    let mut x0 = Vec::new();
    for i in 0..nb {
        p.add_binary(format!("b{i}"), 1.0, rng.gen_range(-10.0..10.0));
        x0.push(if rng.gen_bool(0.5) { 1.0 } else { 0.0 });
    }
    for i in 0..nc {
        let lo: f64 = rng.gen_range(-5.0..5.0);
        let hi = lo + rng.gen_range(0.5..10.0);
        p.add_var(format!("c{i}"), lo, hi, rng.gen_range(-10.0..10.0));
        x0.push(rng.gen_range(lo..hi));
    }
    let n = nb + nc;
    let rows = rng.gen_range(1..=12);
    for _ in 0..rows {
        let mut coefs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.5) {
                coefs.push((j, rng.gen_range(-5.0..5.0)));
            }
        }
        if coefs.is_empty() {
            coefs.push((rng.gen_range(0..n), rng.gen_range(0.5..5.0)));
        }
        let ax: f64 = coefs.iter().map(|&(j, v)| v * x0[j]).sum();
        let u: f64 = rng.gen();
        let has_cont = coefs.iter().any(|&(j, _)| j >= nb);
        if u < 0.6 {
            p.add_constraint(coefs, Relation::Le, ax + rng.gen_range(0.0..3.0));
        } else if u < 0.85 || !has_cont {
            p.add_constraint(coefs, Relation::Ge, ax - rng.gen_range(0.0..3.0));
        } else {
            p.add_constraint(coefs, Relation::Eq, ax);
        }
    }
    p
}

/// Minimum over every binary assignment of the LP in the continuous columns.
/// Returns `None` if no assignment is feasible.
pub fn enumerate_binaries(p: &MilpProblem) -> Option<f64> {
    let bins: Vec<usize> = (0..p.num_vars).filter(|&j| p.binary[j]).collect();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1u32 << bins.len()) {
        let mut q = p.clone();
        for (k, &j) in bins.iter().enumerate() {
            let v = f64::from((mask >> k) & 1);
            q.lower[j] = v;
            q.upper[j] = v;
            q.binary[j] = false;
        }
        let s = solve_lp(&q).expect("valid problem");
        match s.status {
            SolveStatus::Optimal => {
                best = Some(best.map_or(s.objective_value, |b: f64| b.min(s.objective_value)));
            }
            SolveStatus::Infeasible => {}
            other => panic!("enumeration LP returned {other:?}"),
        }
    }
    best
}

/// Dual objective of the box-constrained LP built from the row duals alone:
/// `b'y + sum_j (l_j max(d_j, 0) - u_j max(-d_j, 0))` with `d = c - A'y`.
/// Returns `(dual_objective, worst_dual_infeasibility)`.
pub fn dual_objective(p: &MilpProblem, y: &[f64]) -> (f64, f64) {
    let c = p.cost_vector();
    let mut d = c.clone();
    for (i, row) in p.constraints.iter().enumerate() {
        for &(j, v) in &row.coefs {
            d[j] -= v * y[i];
        }
    }
    let mut obj = 0.0;
    let mut infeas: f64 = 0.0;
    for (i, row) in p.constraints.iter().enumerate() {
        obj += row.rhs * y[i];
        // sign conditions for a minimization with `a x + s = b`
        let bad = match row.relation {
            Relation::Le => y[i].max(0.0),
            Relation::Ge => (-y[i]).max(0.0),
            Relation::Eq => 0.0,
        };
        infeas = infeas.max(bad);
    }
    for j in 0..p.num_vars {
        let (l, u) = (p.lower[j], p.upper[j]);
        if d[j] > 0.0 {
            if l.is_finite() {
                obj += l * d[j];
            } else {
                infeas = infeas.max(d[j]);
            }
        } else if d[j] < 0.0 {
            if u.is_finite() {
                obj += u * d[j];
            } else {
                infeas = infeas.max(-d[j]);
            }
        }
    }
    (obj, infeas)
}

/// Random bounded feasible LP with up to `max_vars` continuous columns.
pub fn random_lp(rng: &mut ChaCha8Rng, max_vars: usize) -> MilpProblem {
    let n = rng.gen_range(1..=max_vars);
    let mut p = MilpProblem::new();
    let mut x0 = Vec::new();
    for i in 0..n {
        let lo: f64 = rng.gen_range(-10.0..10.0);
        let hi = lo + rng.gen_range(0.1..20.0);
        p.add_var(format!("x{i}"), lo, hi, rng.gen_range(-10.0..10.0));
        x0.push(rng.gen_range(lo..hi));
    }
    let rows = rng.gen_range(1..=15);
    for _ in 0..rows {
        let mut coefs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.6) {
                coefs.push((j, rng.gen_range(-5.0..5.0)));
            }
        }
        if coefs.is_empty() {
            coefs.push((0, 1.0));
        }
        let ax: f64 = coefs.iter().map(|&(j, v)| v * x0[j]).sum();
        match rng.gen_range(0..3) {
            0 => p.add_constraint(coefs, Relation::Le, ax + rng.gen_range(0.0..4.0)),
            1 => p.add_constraint(coefs, Relation::Ge, ax - rng.gen_range(0.0..4.0)),
            _ => p.add_constraint(coefs, Relation::Eq, ax),
        }
    }
    p
}
