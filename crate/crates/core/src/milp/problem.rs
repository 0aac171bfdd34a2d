use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sense of a linear row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One sparse linear row `sum(coef * x[col]) <rel> rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coefs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("column index {col} out of range (num_vars = {num_vars})")]
    ColumnOutOfRange { col: usize, num_vars: usize },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("variable {0} has lower bound above upper bound")]
    EmptyBounds(usize),
    #[error("binary variable {0} has bounds outside [0, 1]")]
    BinaryBounds(usize),
    #[error("vector length {got} does not match num_vars {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Minimization problem over bounded variables, some of them binary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpProblem {
    pub num_vars: usize,
    /// Sparse objective, `(column, coefficient)`.
    pub objective: Vec<(usize, f64)>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub binary: Vec<bool>,
    /// Optional column names, used only by the text dump.
    #[serde(default)]
    pub names: Vec<String>,
}

impl MilpProblem {
    pub fn new() -> Self {
        Self {
            num_vars: 0,
            objective: Vec::new(),
            constraints: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            binary: Vec::new(),
            names: Vec::new(),
        }
    }

    /// Adds a continuous column and returns its index.
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        let col = self.num_vars;
        self.num_vars += 1;
        self.lower.push(lower);
        self.upper.push(upper);
        self.binary.push(false);
        self.names.push(name.into());
        if cost != 0.0 {
            self.objective.push((col, cost));
        }
        col
    }

    /// Adds a binary column with bounds `[0, upper]`, `upper` being 0 or 1.
    pub fn add_binary(&mut self, name: impl Into<String>, upper: f64, cost: f64) -> usize {
        let col = self.add_var(name, 0.0, upper, cost);
        self.binary[col] = true;
        col
    }

    pub fn add_constraint(&mut self, coefs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { coefs, relation, rhs });
    }

    pub fn num_binaries(&self) -> usize {
        self.binary.iter().filter(|b| **b).count()
    }

    /// Dense objective vector.
    pub fn cost_vector(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.num_vars];
        for &(j, v) in &self.objective {
            c[j] += v;
        }
        c
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, v)| v * x[j]).sum()
    }

    /// Checks index ranges, finiteness and bound consistency.
    pub fn validate(&self) -> Result<(), ProblemError> {
        let n = self.num_vars;
        for (what, len) in [
            ("lower", self.lower.len()),
            ("upper", self.upper.len()),
            ("binary", self.binary.len()),
        ] {
            if len != n {
                let _ = what;
                return Err(ProblemError::LengthMismatch { expected: n, got: len });
            }
        }
        for &(j, v) in &self.objective {
            if j >= n {
                return Err(ProblemError::ColumnOutOfRange { col: j, num_vars: n });
            }
            if !v.is_finite() {
                return Err(ProblemError::NonFinite(format!("objective column {j}")));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(ProblemError::NonFinite(format!("rhs of row {i}")));
            }
            for &(j, v) in &row.coefs {
                if j >= n {
                    return Err(ProblemError::ColumnOutOfRange { col: j, num_vars: n });
                }
                if !v.is_finite() {
                    return Err(ProblemError::NonFinite(format!("row {i} column {j}")));
                }
            }
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() {
                return Err(ProblemError::NonFinite(format!("bounds of column {j}")));
            }
            if lo > hi {
                return Err(ProblemError::EmptyBounds(j));
            }
            if self.binary[j] && (lo < 0.0 || hi > 1.0) {
                return Err(ProblemError::BinaryBounds(j));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`, each row scaled by
    /// `max(1, |row|_2)`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.constraints {
            let lhs: f64 = row.coefs.iter().map(|&(j, v)| v * x[j]).sum();
            let norm = row.coefs.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt().max(1.0);
            let viol = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol / norm);
        }
        for j in 0..self.num_vars {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }

    fn col_name(&self, j: usize) -> String {
        match self.names.get(j) {
            Some(n) if !n.is_empty() => n.replace(|c: char| c.is_whitespace(), "_"),
            _ => format!("x{j}"),
        }
    }

    /// Renders the problem in CPLEX-LP-like text for cross-checking with
    /// external solvers.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::new();
        let term = |out: &mut String, first: bool, v: f64, name: &str| {
            if first {
                let _ = write!(out, " {v} {name}");
            } else if v < 0.0 {
                let _ = write!(out, " - {} {name}", -v);
            } else {
                let _ = write!(out, " + {v} {name}");
            }
        };
        out.push_str("Minimize\n obj:");
        if self.objective.is_empty() {
            out.push_str(" 0");
        }
        for (i, &(j, v)) in self.objective.iter().enumerate() {
            term(&mut out, i == 0, v, &self.col_name(j));
        }
        out.push_str("\nSubject To\n");
        for (r, row) in self.constraints.iter().enumerate() {
            let _ = write!(out, " c{r}:");
            if row.coefs.is_empty() {
                out.push_str(" 0 x0");
            }
            for (i, &(j, v)) in row.coefs.iter().enumerate() {
                term(&mut out, i == 0, v, &self.col_name(j));
            }
            let rel = match row.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(out, " {rel} {}", row.rhs);
        }
        out.push_str("Bounds\n");
        let fmt_bound = |v: f64| {
            if v == f64::INFINITY {
                "+inf".to_string()
            } else if v == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                v.to_string()
            }
        };
        for j in 0..self.num_vars {
            let _ = writeln!(
                out,
                " {} <= {} <= {}",
                fmt_bound(self.lower[j]),
                self.col_name(j),
                fmt_bound(self.upper[j])
            );
        }
        let bins: Vec<String> = (0..self.num_vars)
            .filter(|&j| self.binary[j])
            .map(|j| self.col_name(j))
            .collect();
        if !bins.is_empty() {
            out.push_str("Binaries\n");
            for chunk in bins.chunks(8) {
                let _ = writeln!(out, " {}", chunk.join(" "));
            }
        }
        out.push_str("End\n");
        out
    }
}

impl Default for MilpProblem {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_catches_bad_binary_bounds() {
        let mut p = MilpProblem::new();
        let x = p.add_var("x", 0.0, 2.0, 1.0);
        p.binary[x] = true;
        assert_eq!(p.validate(), Err(ProblemError::BinaryBounds(0)));
    }

    #[test]
    fn validate_catches_column_out_of_range() {
        let mut p = MilpProblem::new();
        p.add_var("x", 0.0, 1.0, 0.0);
        p.add_constraint(vec![(3, 1.0)], Relation::Le, 1.0);
        assert!(matches!(
            p.validate(),
            Err(ProblemError::ColumnOutOfRange { col: 3, .. })
        ));
    }

    #[test]
    fn validate_rejects_nan() {
        let mut p = MilpProblem::new();
        p.add_var("x", 0.0, 1.0, f64::NAN);
        assert!(matches!(p.validate(), Err(ProblemError::NonFinite(_))));
    }

    #[test]
    fn lp_dump_lists_every_section() {
        let mut p = MilpProblem::new();
        let x = p.add_var("x", 0.0, f64::INFINITY, -1.0);
        let y = p.add_binary("y", 1.0, 2.0);
        p.add_constraint(vec![(x, 1.0), (y, -3.0)], Relation::Le, 4.0);
        let s = p.to_lp_string();
        assert!(s.starts_with("Minimize\n obj: -1 x + 2 y"));
        assert!(s.contains(" c0: 1 x - 3 y <= 4"));
        assert!(s.contains(" 0 <= x <= +inf"));
        assert!(s.contains("Binaries\n y\n"));
        assert!(s.ends_with("End\n"));
    }

    #[test]
    fn max_violation_scales_by_row_norm() {
        let mut p = MilpProblem::new();
        let x = p.add_var("x", 0.0, 10.0, 0.0);
        let y = p.add_var("y", 0.0, 10.0, 0.0);
        p.add_constraint(vec![(x, 3.0), (y, 4.0)], Relation::Le, 0.0);
        let v = p.max_violation(&[1.0, 1.0]);
        assert!((v - 7.0 / 5.0).abs() < 1e-12);
    }
}
