//! Best-first branch-and-bound over binary columns with depth-first dives.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::Instant;

use super::problem::{MilpProblem, ProblemError};
use super::simplex::{Basis, LpOutcome, Simplex, Snapshot};
use super::{MilpSolution, SolveStatus, SolverLimits, GAP_TOL, INT_TOL};

/// A feasible point used to seed the incumbent.
#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub x: Vec<f64>,
    pub objective: f64,
}

struct Node {
    bound: f64,
    seq: u64,
    fixings: Vec<(u32, bool)>,
    basis: Rc<Basis>,
    /// `(column, fractional value, went up, parent bound)`.
    branched: Option<(usize, f64, bool, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Reversed so that `BinaryHeap` pops the smallest bound, oldest first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Rounds the binaries of `hint` and, if the remaining continuous LP is
/// feasible, returns the completed point. Infeasible hints yield `None`.
pub fn warm_hint(p: &MilpProblem, hint: &[f64]) -> Option<Incumbent> {
    if hint.len() != p.num_vars || p.validate().is_err() {
        return None;
    }
    let mut lp = Simplex::new(p);
    for j in 0..p.num_vars {
        if p.binary[j] {
            let v = hint[j].round().clamp(p.lower[j], p.upper[j]);
            if !v.is_finite() {
                return None;
            }
            lp.set_bounds(j, v, v);
        }
    }
    match lp.solve_primal() {
        LpOutcome::Optimal => {
            let mut x = lp.structural_x();
            snap_binaries(p, &mut x);
            Some(Incumbent {
                objective: p.objective_value(&x),
                x,
            })
        }
        _ => None,
    }
}

fn snap_binaries(p: &MilpProblem, x: &mut [f64]) {
    for j in 0..p.num_vars {
        if p.binary[j] {
            x[j] = x[j].round();
        }
    }
}

/// Pivot cap of one strong-branching probe.
const PROBE_PIVOTS: usize = 40;
/// Observations per direction before a pseudocost is trusted.
const RELIABLE: u32 = 1;
/// Stop probing after this many candidates without a better score.
const LOOKAHEAD: usize = 6;
const SCORE_EPS: f64 = 1e-6;

/// Per-column average objective gain per unit of rounding, down and up.
#[derive(Debug, Clone, Default)]
struct Pseudocost {
    sum: [f64; 2],
    count: [u32; 2],
}

impl Pseudocost {
    fn record(&mut self, up: bool, gain: f64, unit: f64) {
        if unit > INT_TOL && gain.is_finite() {
            let k = usize::from(up);
            self.sum[k] += gain.max(0.0) / unit;
            self.count[k] += 1;
        }
    }

    fn estimate(&self, up: bool, fallback: f64) -> f64 {
        let k = usize::from(up);
        if self.count[k] == 0 {
            fallback
        } else {
            self.sum[k] / f64::from(self.count[k])
        }
    }

    fn reliable(&self) -> bool {
        self.count[0] >= RELIABLE && self.count[1] >= RELIABLE
    }
}

struct Branching {
    col: usize,
    value: f64,
    /// Dive into the up child first.
    up_first: bool,
}

enum Choice {
    Integral,
    /// Both children are infeasible or cannot beat the incumbent.
    Prune,
    Branch(Branching),
}

fn fractional(p: &MilpProblem, x: &[f64]) -> Vec<(usize, f64)> {
    (0..p.num_vars)
        .filter(|&j| p.binary[j])
        .filter_map(|j| {
            let f = x[j] - x[j].floor();
            (f.min(1.0 - f) > INT_TOL).then_some((j, f))
        })
        .collect()
}

/// Strong-branching probe: objective gain of fixing `j` to `v`, infinite
/// when the child is infeasible or cannot beat `cutoff`. `None` when the
/// probe gave no usable bound.
fn probe(lp: &mut Simplex, snap: &Snapshot, j: usize, v: f64, lo: f64, hi: f64, obj: f64, cutoff: f64) -> Option<f64> {
    lp.set_bounds(j, v, v);
    let (out, bound) = lp.probe_dual(PROBE_PIVOTS);
    lp.set_bounds(j, lo, hi);
    lp.restore(snap);
    match (out, bound) {
        (LpOutcome::Infeasible, _) => Some(f64::INFINITY),
        (_, Some(b)) if b >= cutoff - GAP_TOL => Some(f64::INFINITY),
        (_, Some(b)) => Some((b - obj).max(0.0)),
        _ => None,
    }
}

/// Pseudocost branching with strong-branching initialisation of columns
/// whose pseudocosts are not yet reliable. Ties go to the lowest index.
fn choose(p: &MilpProblem, lp: &mut Simplex, x: &[f64], obj: f64, cutoff: f64, pc: &mut [Pseudocost]) -> Choice {
    let cands = fractional(p, x);
    if cands.is_empty() {
        return Choice::Integral;
    }
    let (mut tot, mut cnt) = ([0.0; 2], [0u32; 2]);
    for c in pc.iter() {
        for k in 0..2 {
            tot[k] += c.sum[k];
            cnt[k] += c.count[k];
        }
    }
    let avg = |k: usize| if cnt[k] == 0 { 1.0 } else { tot[k] / f64::from(cnt[k]) };
    let fallback = [avg(0), avg(1)];

    let snap = lp.snapshot();
    let mut best: Option<(f64, usize, f64, bool)> = None;
    let mut stale = 0usize;
    for &(j, f) in &cands {
        let (gd, gu) = if pc[j].reliable() || stale >= LOOKAHEAD {
            (
                f * pc[j].estimate(false, fallback[0]),
                (1.0 - f) * pc[j].estimate(true, fallback[1]),
            )
        } else {
            let (lo, hi) = (p.lower[j], p.upper[j]);
            let down = probe(lp, &snap, j, 0.0, lo, hi, obj, cutoff);
            let up = probe(lp, &snap, j, 1.0, lo, hi, obj, cutoff);
            if let Some(g) = down {
                pc[j].record(false, g, f);
            }
            if let Some(g) = up {
                pc[j].record(true, g, 1.0 - f);
            }
            let gd = down.unwrap_or_else(|| f * pc[j].estimate(false, fallback[0]));
            let gu = up.unwrap_or_else(|| (1.0 - f) * pc[j].estimate(true, fallback[1]));
            if gd.is_infinite() && gu.is_infinite() {
                return Choice::Prune;
            }
            (gd, gu)
        };
        let score = if gd.is_infinite() || gu.is_infinite() {
            f64::MAX
        } else {
            gd.max(SCORE_EPS) * gu.max(SCORE_EPS)
        };
        if best.is_none_or(|(s, ..)| score > s) {
            best = Some((score, j, x[j], gu < gd || (gu == gd && x[j] >= 0.5)));
            stale = 0;
        } else {
            stale += 1;
        }
    }
    let (_, col, value, up_first) = best.expect("candidates are non-empty");
    Choice::Branch(Branching { col, value, up_first })
}

/// Fixes binaries whose reduced cost alone closes the gap to the incumbent.
fn reduced_cost_fixings(
    p: &MilpProblem,
    lp: &mut Simplex,
    obj: f64,
    cutoff: f64,
    fixed: &[(u32, bool)],
) -> Vec<(u32, bool)> {
    let gap = cutoff - obj - GAP_TOL;
    if !gap.is_finite() || gap < 0.0 {
        return Vec::new();
    }
    let d = lp.reduced_costs();
    let mut out = Vec::new();
    for j in 0..p.num_vars {
        if !p.binary[j] || p.lower[j] == p.upper[j] || fixed.iter().any(|&(c, _)| c as usize == j) {
            continue;
        }
        match lp.nonbasic_side(j) {
            Some(false) if d[j] > gap => out.push((j as u32, false)),
            Some(true) if -d[j] > gap => out.push((j as u32, true)),
            _ => {}
        }
    }
    out
}

pub fn solve_milp(p: &MilpProblem, limits: &SolverLimits, hint: Option<&[f64]>) -> Result<MilpSolution, ProblemError> {
    p.validate()?;
    let start = Instant::now();
    let mut incumbent: Option<Incumbent> = hint.and_then(|h| warm_hint(p, h));
    let hinted = incumbent.is_some();

    let mut lp = Simplex::new(p);
    let finish = |status: SolveStatus, inc: Option<Incumbent>, nodes: usize, warm: bool| {
        let (x, objective_value) = match inc {
            Some(i) => (i.x, i.objective),
            None => (Vec::new(), f64::NAN),
        };
        MilpSolution {
            status,
            x,
            objective_value,
            nodes_explored: nodes,
            solve_time: start.elapsed().as_secs_f64(),
            warm_start_used: warm,
        }
    };

    let root = lp.solve_primal();
    let mut nodes = 1usize;
    match root {
        LpOutcome::Optimal => {}
        LpOutcome::Infeasible => return Ok(finish(SolveStatus::Infeasible, None, nodes, hinted)),
        LpOutcome::Unbounded => return Ok(finish(SolveStatus::Unbounded, None, nodes, hinted)),
        LpOutcome::IterationLimit => return Ok(finish(SolveStatus::Stalled, incumbent, nodes, hinted)),
    }

    let root_lo = p.lower.clone();
    let root_hi = p.upper.clone();
    let binaries: Vec<usize> = (0..p.num_vars).filter(|&j| p.binary[j]).collect();
    let mut pc = vec![Pseudocost::default(); p.num_vars];
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut lp_trouble = false;
    // The root LP is already solved; `current` carries the dive child, whose
    // parent basis is still loaded in `lp`.
    let mut current: Option<Node> = None;
    let mut solved_root = true;

    loop {
        let fixings: Vec<(u32, bool)>;
        let mut parent: Option<(usize, f64, bool, f64)> = None;
        if solved_root {
            solved_root = false;
            fixings = Vec::new();
        } else {
            let (node, warm) = match current.take() {
                Some(n) => (n, true),
                None => match heap.pop() {
                    None => break,
                    Some(n) => {
                        if let Some(inc) = &incumbent {
                            if n.bound >= inc.objective - GAP_TOL {
                                break;
                            }
                        }
                        (n, false)
                    }
                },
            };
            if nodes >= limits.max_nodes {
                return Ok(finish(SolveStatus::NodeLimit, incumbent, nodes, hinted));
            }
            if start.elapsed() >= limits.time_limit {
                return Ok(finish(SolveStatus::Stalled, incumbent, nodes, hinted));
            }
            for &j in &binaries {
                lp.set_bounds(j, root_lo[j], root_hi[j]);
            }
            for &(j, v) in &node.fixings {
                let v = if v { 1.0 } else { 0.0 };
                lp.set_bounds(j as usize, v, v);
            }
            if !warm {
                lp.load_basis(&node.basis);
            }
            nodes += 1;
            parent = node.branched;
            match lp.solve_dual() {
                LpOutcome::Optimal => {}
                LpOutcome::Infeasible => continue,
                LpOutcome::Unbounded | LpOutcome::IterationLimit => {
                    lp_trouble = true;
                    continue;
                }
            }
            fixings = node.fixings;
        }

        let obj = lp.objective();
        if let Some((col, frac, up, parent_obj)) = parent {
            pc[col].record(up, obj - parent_obj, if up { 1.0 - frac } else { frac });
        }
        let cutoff = incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective);
        if obj >= cutoff - GAP_TOL {
            continue;
        }
        let x = lp.structural_x();
        let mut fixings = fixings;
        fixings.extend(reduced_cost_fixings(p, &mut lp, obj, cutoff, &fixings));
        match choose(p, &mut lp, &x, obj, cutoff, &mut pc) {
            Choice::Prune => {}
            Choice::Integral => {
                let mut x = x;
                snap_binaries(p, &mut x);
                let objective = p.objective_value(&x);
                if incumbent.as_ref().is_none_or(|inc| objective < inc.objective) {
                    incumbent = Some(Incumbent { x, objective });
                }
            }
            Choice::Branch(Branching { col, value, up_first }) => {
                let basis = Rc::new(lp.basis());
                let frac = value - value.floor();
                let mut other = fixings.clone();
                other.push((col as u32, !up_first));
                seq += 1;
                heap.push(Node {
                    bound: obj,
                    seq,
                    fixings: other,
                    basis: Rc::clone(&basis),
                    branched: Some((col, frac, !up_first, obj)),
                });
                let mut dive = fixings;
                dive.push((col as u32, up_first));
                seq += 1;
                current = Some(Node {
                    bound: obj,
                    seq,
                    fixings: dive,
                    basis,
                    branched: Some((col, frac, up_first, obj)),
                });
            }
        }
    }

    let status = match (&incumbent, lp_trouble) {
        (Some(_), false) => SolveStatus::Optimal,
        (Some(_), true) => SolveStatus::Stalled,
        (None, false) => SolveStatus::Infeasible,
        (None, true) => SolveStatus::Stalled,
    };
    Ok(finish(status, incumbent, nodes, hinted))
}
