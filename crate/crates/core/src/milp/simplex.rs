//! Bounded-variable revised simplex.
//!
//! Every row `a_i x <rel> b_i` gets a slack `s_i` so that `a_i x + s_i = b_i`
//! with the relation moved into the slack bounds (`<=` gives `s >= 0`, `>=`
//! gives `s <= 0`, `=` fixes `s = 0`). Box constraints on the structural
//! columns are handled by the ratio tests, never as rows. The basis inverse is
//! kept explicitly (problems here have well under a hundred rows), updated by
//! elementary row operations and rebuilt from scratch every
//! [`REFACTOR_EVERY`] pivots.
//!
//! Two drivers share the machinery: a two-phase primal simplex (phase 1
//! minimizes the sum of bound violations of the basic variables) used for
//! cold solves, and a dual simplex used to re-optimize after bound changes in
//! branch-and-bound, where the parent's optimal basis stays dual feasible.

use super::problem::{MilpProblem, Relation};

pub(crate) const FEAS_TOL: f64 = 1e-7;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 50;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERACY_LIMIT: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable resting at zero.
    Free,
}

#[derive(Debug, Clone)]
pub(crate) struct Basis {
    basic: Vec<u32>,
    state: Vec<VarState>,
}

/// Full factorized state, for probing child problems without refactoring.
#[derive(Debug, Clone)]
pub(crate) struct Snapshot {
    basic: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,
    binv: Vec<f64>,
    since_refactor: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

#[derive(Debug)]
struct Singular;

pub(crate) struct Simplex {
    m: usize,
    n_struct: usize,
    n: usize,
    /// Column-major `m x n` constraint matrix including the slack identity.
    a: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    rhs: Vec<f64>,
    ftol: Vec<f64>,
    dtol: f64,
    basic: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,
    /// Row-major explicit basis inverse.
    binv: Vec<f64>,
    since_refactor: usize,
    /// Pivots over the lifetime of this engine.
    pub(crate) iterations: usize,
    /// Pivot budget of a single solve.
    max_iterations: usize,
    solve_start: usize,
    /// The last solve stopped inside the dual loop, so `objective()` is a
    /// valid lower bound even though the basis is not primal feasible.
    in_dual: bool,
    // scratch
    y: Vec<f64>,
    d: Vec<f64>,
    alpha: Vec<f64>,
}

impl Simplex {
    /// Builds the engine for the LP relaxation of `p` (integrality ignored).
    pub(crate) fn new(p: &MilpProblem) -> Self {
        let m = p.constraints.len();
        let n_struct = p.num_vars;
        let n = n_struct + m;
        let mut a = vec![0.0; m * n];
        let mut ftol = vec![FEAS_TOL; n];
        let mut lo = p.lower.clone();
        let mut hi = p.upper.clone();
        for (i, row) in p.constraints.iter().enumerate() {
            for &(j, v) in &row.coefs {
                a[j * m + i] += v;
            }
            a[(n_struct + i) * m + i] = 1.0;
            let (sl, sh) = match row.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lo.push(sl);
            hi.push(sh);
            let norm = row.coefs.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
            ftol[n_struct + i] = FEAS_TOL * norm.max(1.0);
        }
        let mut cost = p.cost_vector();
        cost.resize(n, 0.0);
        let cscale = cost.iter().fold(1.0_f64, |acc, c| acc.max(c.abs()));
        let rhs = p.constraints.iter().map(|r| r.rhs).collect();

        let mut s = Self {
            m,
            n_struct,
            n,
            a,
            cost,
            lo,
            hi,
            rhs,
            ftol,
            dtol: OPT_TOL * cscale,
            basic: Vec::new(),
            state: Vec::new(),
            x: vec![0.0; n],
            binv: Vec::new(),
            since_refactor: 0,
            iterations: 0,
            max_iterations: 50 * (m + n) + 1000,
            solve_start: 0,
            in_dual: false,
            y: vec![0.0; m],
            d: vec![0.0; n],
            alpha: vec![0.0; m],
        };
        s.slack_basis();
        s
    }

    fn slack_basis(&mut self) {
        self.basic = (self.n_struct..self.n).collect();
        self.state = vec![VarState::AtLower; self.n];
        for j in 0..self.n_struct {
            self.state[j] = self.resting_state(j);
        }
        for j in self.n_struct..self.n {
            self.state[j] = VarState::Basic;
        }
        self.binv = identity(self.m);
        self.since_refactor = 0;
        self.compute_primal();
    }

    /// Nonbasic position preferred for a column: the finite bound favoured by
    /// its cost, so that bounded columns start dual feasible.
    fn resting_state(&self, j: usize) -> VarState {
        let (l, h) = (self.lo[j], self.hi[j]);
        match (l.is_finite(), h.is_finite()) {
            (true, true) => {
                if self.cost[j] < 0.0 {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                }
            }
            (true, false) => VarState::AtLower,
            (false, true) => VarState::AtUpper,
            (false, false) => VarState::Free,
        }
    }

    pub(crate) fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lo[j] = lo;
        self.hi[j] = hi;
        self.normalize_state(j);
    }

    fn normalize_state(&mut self, j: usize) {
        let st = self.state[j];
        let (l, h) = (self.lo[j], self.hi[j]);
        self.state[j] = match st {
            VarState::Basic => VarState::Basic,
            VarState::AtLower if !l.is_finite() => self.resting_state(j),
            VarState::AtUpper if !h.is_finite() => self.resting_state(j),
            VarState::Free if l.is_finite() || h.is_finite() => self.resting_state(j),
            other => other,
        };
    }

    pub(crate) fn basis(&self) -> Basis {
        Basis {
            basic: self.basic.iter().map(|&b| b as u32).collect(),
            state: self.state.clone(),
        }
    }

    /// Installs a saved basis; falls back to the slack basis if it has become
    /// singular.
    pub(crate) fn load_basis(&mut self, b: &Basis) {
        self.basic = b.basic.iter().map(|&v| v as usize).collect();
        self.state = b.state.clone();
        for j in 0..self.n {
            self.normalize_state(j);
        }
        if self.refactor().is_err() {
            self.slack_basis();
        }
        self.compute_primal();
    }

    pub(crate) fn snapshot(&self) -> Snapshot {
        Snapshot {
            basic: self.basic.clone(),
            state: self.state.clone(),
            x: self.x.clone(),
            binv: self.binv.clone(),
            since_refactor: self.since_refactor,
        }
    }

    /// Restores a snapshot; bounds are left as they are.
    pub(crate) fn restore(&mut self, s: &Snapshot) {
        self.basic.clone_from(&s.basic);
        self.state.clone_from(&s.state);
        self.x.clone_from(&s.x);
        self.binv.clone_from(&s.binv);
        self.since_refactor = s.since_refactor;
        for j in 0..self.n {
            self.normalize_state(j);
        }
    }

    /// `Some(true)` if column `j` is nonbasic at its upper bound,
    /// `Some(false)` at its lower bound, `None` otherwise.
    pub(crate) fn nonbasic_side(&self, j: usize) -> Option<bool> {
        match self.state[j] {
            VarState::AtLower => Some(false),
            VarState::AtUpper => Some(true),
            _ => None,
        }
    }

    /// Dual simplex limited to `cap` pivots. Returns the outcome and a lower
    /// bound on the optimum when one is known (exact on `Optimal`).
    pub(crate) fn probe_dual(&mut self, cap: usize) -> (LpOutcome, Option<f64>) {
        let saved = self.max_iterations;
        self.max_iterations = cap;
        let out = self.solve_dual();
        self.max_iterations = saved;
        let bound = match out {
            LpOutcome::Optimal => Some(self.objective()),
            LpOutcome::IterationLimit if self.in_dual => Some(self.objective()),
            _ => None,
        };
        (out, bound)
    }

    #[inline]
    fn col(&self, j: usize) -> &[f64] {
        &self.a[j * self.m..(j + 1) * self.m]
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLower => self.lo[j],
            VarState::AtUpper => self.hi[j],
            VarState::Free => 0.0,
            VarState::Basic => self.x[j],
        }
    }

    fn compute_primal(&mut self) {
        let m = self.m;
        let mut r = self.rhs.clone();
        for j in 0..self.n {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let v = self.nonbasic_value(j);
            self.x[j] = v;
            if v != 0.0 {
                let c = &self.a[j * m..(j + 1) * m];
                for i in 0..m {
                    r[i] -= v * c[i];
                }
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let v: f64 = row.iter().zip(&r).map(|(a, b)| a * b).sum();
            self.x[self.basic[i]] = v;
        }
    }

    /// Duals `y = c_B B^-1` and reduced costs for all columns.
    fn compute_duals(&mut self, phase: Phase) {
        let m = self.m;
        self.y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            let cb = self.basic_cost(i, phase);
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for k in 0..m {
                    self.y[k] += cb * row[k];
                }
            }
        }
        for j in 0..self.n {
            if self.state[j] == VarState::Basic {
                self.d[j] = 0.0;
                continue;
            }
            let cj = match phase {
                Phase::One => 0.0,
                Phase::Two => self.cost[j],
            };
            let c = self.col(j);
            let dot: f64 = c.iter().zip(&self.y).map(|(a, b)| a * b).sum();
            self.d[j] = cj - dot;
        }
    }

    fn basic_cost(&self, i: usize, phase: Phase) -> f64 {
        let b = self.basic[i];
        match phase {
            Phase::Two => self.cost[b],
            Phase::One => {
                let v = self.x[b];
                if v < self.lo[b] - self.ftol[b] {
                    -1.0
                } else if v > self.hi[b] + self.ftol[b] {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn ftran(&mut self, j: usize) {
        let m = self.m;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let c = &self.a[j * m..(j + 1) * m];
            self.alpha[i] = row.iter().zip(c).map(|(a, b)| a * b).sum();
        }
    }

    /// Entry `r` of `B^-1 a_j`.
    fn row_entry(&self, r: usize, j: usize) -> f64 {
        let m = self.m;
        let row = &self.binv[r * m..(r + 1) * m];
        row.iter().zip(self.col(j)).map(|(a, b)| a * b).sum()
    }

    /// Replaces the basic variable of row `r` by column `q`; `self.alpha` must
    /// hold `B^-1 a_q`.
    fn pivot(&mut self, r: usize, q: usize, leaving_state: VarState) -> Result<(), Singular> {
        let m = self.m;
        let leaving = self.basic[r];
        self.state[leaving] = leaving_state;
        self.basic[r] = q;
        self.state[q] = VarState::Basic;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            return self.refactor();
        }
        let piv = self.alpha[r];
        {
            let row_r = &mut self.binv[r * m..(r + 1) * m];
            for v in row_r.iter_mut() {
                *v /= piv;
            }
        }
        let pivot_row: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = self.alpha[i];
            if f != 0.0 {
                let row = &mut self.binv[i * m..(i + 1) * m];
                for k in 0..m {
                    row[k] -= f * pivot_row[k];
                }
            }
        }
        Ok(())
    }

    /// Rebuilds `B^-1` by Gauss-Jordan elimination with partial pivoting.
    fn refactor(&mut self) -> Result<(), Singular> {
        let m = self.m;
        let mut bmat = vec![0.0; m * m];
        for (k, &j) in self.basic.iter().enumerate() {
            let c = &self.a[j * m..(j + 1) * m];
            for i in 0..m {
                bmat[i * m + k] = c[i];
            }
        }
        let mut inv = identity(m);
        for k in 0..m {
            let (mut p, mut best) = (k, bmat[k * m + k].abs());
            for i in k + 1..m {
                let v = bmat[i * m + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best < 1e-11 {
                return Err(Singular);
            }
            if p != k {
                for c in 0..m {
                    bmat.swap(k * m + c, p * m + c);
                    inv.swap(k * m + c, p * m + c);
                }
            }
            let piv = bmat[k * m + k];
            for c in 0..m {
                bmat[k * m + c] /= piv;
                inv[k * m + c] /= piv;
            }
            for i in 0..m {
                if i == k {
                    continue;
                }
                let f = bmat[i * m + k];
                if f != 0.0 {
                    for c in 0..m {
                        bmat[i * m + c] -= f * bmat[k * m + c];
                        inv[i * m + c] -= f * inv[k * m + c];
                    }
                }
            }
        }
        self.binv = inv;
        self.since_refactor = 0;
        Ok(())
    }

    fn pivot_or_reset(&mut self, r: usize, q: usize, leaving_state: VarState) {
        if self.pivot(r, q, leaving_state).is_err() {
            self.slack_basis();
        }
        self.compute_primal();
    }

    fn infeasible_rows(&self) -> bool {
        self.basic
            .iter()
            .any(|&b| self.x[b] < self.lo[b] - self.ftol[b] || self.x[b] > self.hi[b] + self.ftol[b])
    }

    fn out_of_budget(&self) -> bool {
        self.iterations - self.solve_start >= self.max_iterations
    }

    /// Two-phase primal simplex from the current basis.
    pub(crate) fn solve_primal(&mut self) -> LpOutcome {
        self.solve_start = self.iterations;
        self.primal()
    }

    fn primal(&mut self) -> LpOutcome {
        self.in_dual = false;
        self.compute_primal();
        let mut phase = if self.infeasible_rows() { Phase::One } else { Phase::Two };
        let mut degenerate = 0usize;
        loop {
            if self.out_of_budget() {
                return LpOutcome::IterationLimit;
            }
            if phase == Phase::One && !self.infeasible_rows() {
                phase = Phase::Two;
                degenerate = 0;
            }
            let bland = degenerate >= DEGENERACY_LIMIT;
            self.compute_duals(phase);
            let dtol = match phase {
                Phase::One => OPT_TOL,
                Phase::Two => self.dtol,
            };
            let Some((q, dir)) = self.price(dtol, bland) else {
                return match phase {
                    Phase::One => LpOutcome::Infeasible,
                    Phase::Two => LpOutcome::Optimal,
                };
            };
            self.iterations += 1;
            self.ftran(q);
            match self.primal_ratio(q, dir, phase, bland) {
                Step::Unbounded => {
                    if phase == Phase::Two {
                        return LpOutcome::Unbounded;
                    }
                    // A phase-1 ray cannot exist when the chosen column improves
                    // the infeasibility; treat it as numerical trouble.
                    self.slack_basis();
                    if self.iterations - self.solve_start > self.max_iterations / 2 {
                        return LpOutcome::IterationLimit;
                    }
                }
                Step::Flip(t) => {
                    degenerate = if t <= 1e-12 { degenerate + 1 } else { 0 };
                    self.state[q] = match self.state[q] {
                        VarState::AtLower => VarState::AtUpper,
                        _ => VarState::AtLower,
                    };
                    self.compute_primal();
                }
                Step::Pivot { row, t, leave } => {
                    degenerate = if t <= 1e-12 { degenerate + 1 } else { 0 };
                    self.pivot_or_reset(row, q, leave);
                }
            }
        }
    }

    /// Chooses the entering column, returning it with its direction of motion.
    fn price(&self, dtol: f64, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n {
            let dir = match self.state[j] {
                VarState::Basic => continue,
                _ if self.lo[j] == self.hi[j] => continue,
                VarState::AtLower if self.d[j] < -dtol => 1.0,
                VarState::AtUpper if self.d[j] > dtol => -1.0,
                VarState::Free if self.d[j].abs() > dtol => -self.d[j].signum(),
                _ => continue,
            };
            let score = self.d[j].abs();
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn primal_ratio(&self, q: usize, dir: f64, phase: Phase, bland: bool) -> Step {
        let flip = self.hi[q] - self.lo[q];
        // Harris pass 1: largest step keeping every basic within its relaxed bound.
        let mut relaxed = f64::INFINITY;
        let mut cands: Vec<(usize, f64, VarState)> = Vec::new();
        for i in 0..self.m {
            let al = self.alpha[i];
            if al.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -dir * al;
            let b = self.basic[i];
            let (v, l, h, tol) = (self.x[b], self.lo[b], self.hi[b], self.ftol[b]);
            let below = v < l - tol;
            let above = v > h + tol;
            let target = if rate < 0.0 {
                if phase == Phase::One && above {
                    Some((h, VarState::AtUpper))
                } else if phase == Phase::One && below {
                    None
                } else if l.is_finite() {
                    Some((l, VarState::AtLower))
                } else {
                    None
                }
            } else if phase == Phase::One && below {
                Some((l, VarState::AtLower))
            } else if phase == Phase::One && above {
                None
            } else if h.is_finite() {
                Some((h, VarState::AtUpper))
            } else {
                None
            };
            let Some((bound, leave)) = target else { continue };
            let exact = ((bound - v) / rate).max(0.0);
            let loose = ((bound - v + rate.signum() * tol) / rate).max(0.0);
            relaxed = relaxed.min(loose);
            cands.push((i, exact, leave));
        }
        if cands.is_empty() {
            return if flip.is_finite() {
                Step::Flip(flip)
            } else {
                Step::Unbounded
            };
        }
        let chosen = if bland {
            let tmin = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            cands
                .iter()
                .filter(|c| c.1 <= tmin + 1e-12)
                .min_by_key(|c| self.basic[c.0])
                .copied()
        } else {
            cands
                .iter()
                .filter(|c| c.1 <= relaxed)
                .max_by(|a, b| {
                    self.alpha[a.0]
                        .abs()
                        .partial_cmp(&self.alpha[b.0].abs())
                        .unwrap()
                        .then(b.0.cmp(&a.0))
                })
                .copied()
        };
        let (row, t, leave) = chosen.expect("candidate set is non-empty");
        if flip.is_finite() && flip <= t {
            Step::Flip(flip)
        } else {
            Step::Pivot { row, t, leave }
        }
    }

    /// Dual simplex from the current basis. If the basis is not dual feasible,
    /// or the dual iteration runs into trouble, finishes with the primal.
    pub(crate) fn solve_dual(&mut self) -> LpOutcome {
        self.solve_start = self.iterations;
        self.compute_primal();
        self.compute_duals(Phase::Two);
        if !self.restore_dual_feasibility() {
            return self.primal();
        }
        let mut degenerate = 0usize;
        self.in_dual = true;
        loop {
            if self.out_of_budget() {
                return LpOutcome::IterationLimit;
            }
            let bland = degenerate >= DEGENERACY_LIMIT;
            let Some((r, to_lower)) = self.choose_leaving(bland) else {
                break;
            };
            let b = self.basic[r];
            // x_b = beta - sum alpha_rj x_j. Moving x_b to its violated bound
            // needs delta(x_b) = -alpha_rj * delta(x_j) of the right sign.
            let need_increase = to_lower;
            let mut relaxed = f64::INFINITY;
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for j in 0..self.n {
                let st = self.state[j];
                if st == VarState::Basic || self.lo[j] == self.hi[j] {
                    continue;
                }
                let arj = self.row_entry(r, j);
                if arj.abs() <= PIVOT_TOL {
                    continue;
                }
                // sign of delta(x_j) required
                let dj_sign = if need_increase { -arj.signum() } else { arj.signum() };
                let ok = match st {
                    VarState::AtLower => dj_sign > 0.0,
                    VarState::AtUpper => dj_sign < 0.0,
                    VarState::Free => true,
                    VarState::Basic => false,
                };
                if !ok {
                    continue;
                }
                let dj = self.d[j].abs();
                let exact = dj / arj.abs();
                let loose = (dj + self.dtol) / arj.abs();
                relaxed = relaxed.min(loose);
                cands.push((j, exact, arj));
            }
            if cands.is_empty() {
                return LpOutcome::Infeasible;
            }
            let q = if bland {
                let tmin = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
                cands.iter().find(|c| c.1 <= tmin + 1e-12).unwrap().0
            } else {
                cands
                    .iter()
                    .filter(|c| c.1 <= relaxed)
                    .max_by(|a, b| a.2.abs().partial_cmp(&b.2.abs()).unwrap().then(b.0.cmp(&a.0)))
                    .unwrap()
                    .0
            };
            let tmin = cands.iter().find(|c| c.0 == q).unwrap().1;
            degenerate = if tmin <= 1e-12 { degenerate + 1 } else { 0 };
            self.iterations += 1;
            self.ftran(q);
            let leave = if to_lower || self.lo[b] == self.hi[b] {
                VarState::AtLower
            } else {
                VarState::AtUpper
            };
            self.pivot_or_reset(r, q, leave);
            self.compute_duals(Phase::Two);
            if !self.restore_dual_feasibility() {
                return self.primal();
            }
        }
        // Primal feasible; confirm optimality (drift can leave small dual
        // infeasibilities behind).
        self.primal()
    }

    /// Flips boxed nonbasic columns whose reduced cost has the wrong sign.
    /// Returns false if some unboxed column is dual infeasible.
    fn restore_dual_feasibility(&mut self) -> bool {
        let mut flipped = false;
        for j in 0..self.n {
            if self.lo[j] == self.hi[j] {
                continue;
            }
            match self.state[j] {
                VarState::AtLower if self.d[j] < -self.dtol => {
                    if self.hi[j].is_finite() {
                        self.state[j] = VarState::AtUpper;
                        flipped = true;
                    } else {
                        return false;
                    }
                }
                VarState::AtUpper if self.d[j] > self.dtol => {
                    if self.lo[j].is_finite() {
                        self.state[j] = VarState::AtLower;
                        flipped = true;
                    } else {
                        return false;
                    }
                }
                VarState::Free if self.d[j].abs() > self.dtol => return false,
                _ => {}
            }
        }
        if flipped {
            self.compute_primal();
        }
        true
    }

    fn choose_leaving(&self, bland: bool) -> Option<(usize, bool)> {
        let mut best: Option<(usize, bool, f64)> = None;
        for i in 0..self.m {
            let b = self.basic[i];
            let (v, l, h, tol) = (self.x[b], self.lo[b], self.hi[b], self.ftol[b]);
            let (viol, to_lower) = if v < l - tol {
                (l - v, true)
            } else if v > h + tol {
                (v - h, false)
            } else {
                continue;
            };
            let better = match best {
                None => true,
                Some((bi, _, bv)) => {
                    if bland {
                        b < self.basic[bi]
                    } else {
                        viol / tol.max(1e-300) > bv
                    }
                }
            };
            if better {
                best = Some((i, to_lower, viol / tol.max(1e-300)));
            }
        }
        best.map(|(i, l, _)| (i, l))
    }

    pub(crate) fn structural_x(&self) -> Vec<f64> {
        self.x[..self.n_struct].to_vec()
    }

    pub(crate) fn objective(&self) -> f64 {
        (0..self.n_struct).map(|j| self.cost[j] * self.x[j]).sum()
    }

    /// Row duals of the current basis (phase-2 costs).
    pub(crate) fn row_duals(&mut self) -> Vec<f64> {
        self.compute_duals(Phase::Two);
        self.y.clone()
    }

    pub(crate) fn reduced_costs(&mut self) -> Vec<f64> {
        self.compute_duals(Phase::Two);
        self.d[..self.n_struct].to_vec()
    }
}

enum Step {
    Unbounded,
    Flip(f64),
    Pivot { row: usize, t: f64, leave: VarState },
}

fn identity(m: usize) -> Vec<f64> {
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    v
}
