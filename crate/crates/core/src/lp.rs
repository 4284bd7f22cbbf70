//! Dense two-phase primal simplex with Bland's rule.
//!
//! This backs every certification program in the crate: interior and
//! redundancy checks, recession-cone feasibility, face witnesses and
//! bounding boxes. Problems are tiny (tens of variables), so a plain
//! tableau with anti-cycling pivoting is the right tool; variables are
//! free and get split into positive parts internally.

use crate::tol::{LP_FEAS_TOL, LP_PIVOT_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// One row `coeffs · x  (relation)  rhs` over free variables.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Constraint {
            coeffs,
            relation,
            rhs,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpSolution {
    Optimal { objective: f64, point: Vec<f64> },
    Unbounded,
    Infeasible,
}

impl LpSolution {
    pub fn optimal(&self) -> Option<(f64, &[f64])> {
        match self {
            LpSolution::Optimal { objective, point } => Some((*objective, point)),
            _ => None,
        }
    }
}

/// Maximize `objective · x` over free `x` subject to `constraints`.
pub fn maximize(objective: &[f64], constraints: &[Constraint]) -> LpSolution {
    Tableau::build(objective, constraints).solve()
}

/// Minimize `objective · x` over free `x` subject to `constraints`.
pub fn minimize(objective: &[f64], constraints: &[Constraint]) -> LpSolution {
    let negated: Vec<f64> = objective.iter().map(|c| -c).collect();
    match maximize(&negated, constraints) {
        LpSolution::Optimal { objective, point } => LpSolution::Optimal {
            objective: -objective,
            point,
        },
        other => other,
    }
}

struct Tableau {
    /// m constraint rows, each of length `ncols + 1` (rhs last).
    rows: Vec<Vec<f64>>,
    /// Objective row, same length; entry j is the reduced cost
    /// (optimal when all >= -tol), last entry the current value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    nv: usize,
    ncols: usize,
    art_start: usize,
    cost: Vec<f64>,
}

impl Tableau {
    fn build(objective: &[f64], constraints: &[Constraint]) -> Tableau {
        let nv = objective.len();
        let m = constraints.len();

        // Normalize rows to rhs >= 0.
        let mut rows_norm: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(m);
        for c in constraints {
            assert_eq!(c.coeffs.len(), nv, "constraint arity mismatch");
            if c.rhs < 0.0 {
                let coeffs: Vec<f64> = c.coeffs.iter().map(|a| -a).collect();
                let rel = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                rows_norm.push((coeffs, rel, -c.rhs));
            } else {
                rows_norm.push((c.coeffs.clone(), c.relation, c.rhs));
            }
        }

        let n_slack = rows_norm
            .iter()
            .filter(|(_, r, _)| *r != Relation::Eq)
            .count();
        let n_art = rows_norm
            .iter()
            .filter(|(_, r, _)| *r != Relation::Le)
            .count();
        let struct_cols = 2 * nv;
        let ncols = struct_cols + n_slack + n_art;
        let art_start = struct_cols + n_slack;

        let mut rows = vec![vec![0.0; ncols + 1]; m];
        let mut basis = vec![usize::MAX; m];
        let mut slack_idx = struct_cols;
        let mut art_idx = art_start;

        for (i, (coeffs, rel, rhs)) in rows_norm.iter().enumerate() {
            for (j, &a) in coeffs.iter().enumerate() {
                rows[i][j] = a;
                rows[i][nv + j] = -a;
            }
            rows[i][ncols] = *rhs;
            match rel {
                Relation::Le => {
                    rows[i][slack_idx] = 1.0;
                    basis[i] = slack_idx;
                    slack_idx += 1;
                }
                Relation::Ge => {
                    rows[i][slack_idx] = -1.0;
                    slack_idx += 1;
                    rows[i][art_idx] = 1.0;
                    basis[i] = art_idx;
                    art_idx += 1;
                }
                Relation::Eq => {
                    rows[i][art_idx] = 1.0;
                    basis[i] = art_idx;
                    art_idx += 1;
                }
            }
        }

        // Phase-2 cost vector over all columns (split variables).
        let mut cost = vec![0.0; ncols];
        for j in 0..nv {
            cost[j] = objective[j];
            cost[nv + j] = -objective[j];
        }

        Tableau {
            rows,
            obj: vec![0.0; ncols + 1],
            basis,
            nv,
            ncols,
            art_start,
            cost,
        }
    }

    /// Rebuild the objective row for the given cost vector so that all
    /// basic columns have zero reduced cost.
    fn install_objective(&mut self, cost: &[f64]) {
        for j in 0..self.ncols {
            self.obj[j] = -cost[j];
        }
        self.obj[self.ncols] = 0.0;
        for i in 0..self.rows.len() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..=self.ncols {
                    self.obj[j] += cb * self.rows[i][j];
                }
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let f = self.rows[i][col];
            if f != 0.0 {
                for j in 0..=self.ncols {
                    self.rows[i][j] -= f * self.rows[row][j];
                }
            }
        }
        let f = self.obj[col];
        if f != 0.0 {
            for j in 0..=self.ncols {
                self.obj[j] -= f * self.rows[row][j];
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule iteration over the allowed columns. Returns false if
    /// the problem is unbounded in this phase.
    fn iterate(&mut self, allow: impl Fn(usize) -> bool) -> bool {
        loop {
            // Entering: smallest-index column with improving reduced cost.
            let entering = (0..self.ncols).find(|&j| allow(j) && self.obj[j] < -LP_PIVOT_TOL);
            let e = match entering {
                Some(e) => e,
                None => return true,
            };
            // Leaving: minimal ratio, ties broken by smallest basic index.
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][e];
                if a > LP_PIVOT_TOL {
                    let ratio = self.rows[i][self.ncols] / a;
                    best = match best {
                        None => Some((ratio, self.basis[i], i)),
                        Some((r, _, _)) if ratio < r - LP_PIVOT_TOL => {
                            Some((ratio, self.basis[i], i))
                        }
                        Some((r, b, _))
                            if (ratio - r).abs() <= LP_PIVOT_TOL && self.basis[i] < b =>
                        {
                            Some((ratio, self.basis[i], i))
                        }
                        other => other,
                    };
                }
            }
            match best {
                Some((_, _, row)) => self.pivot(row, e),
                None => return false,
            }
        }
    }

    fn solve(mut self) -> LpSolution {
        let has_art = self.art_start < self.ncols;
        if has_art {
            // Phase 1: maximize -(sum of artificials).
            let mut phase1 = vec![0.0; self.ncols];
            for j in self.art_start..self.ncols {
                phase1[j] = -1.0;
            }
            self.install_objective(&phase1);
            self.iterate(|_| true);
            let art_sum = -self.obj[self.ncols];
            if art_sum > LP_FEAS_TOL {
                return LpSolution::Infeasible;
            }
            // Drive remaining artificials out of the basis when possible.
            for i in 0..self.rows.len() {
                if self.basis[i] >= self.art_start {
                    if let Some(j) =
                        (0..self.art_start).find(|&j| self.rows[i][j].abs() > LP_PIVOT_TOL)
                    {
                        self.pivot(i, j);
                    }
                }
            }
        }

        let cost = self.cost.clone();
        self.install_objective(&cost);
        let art_start = self.art_start;
        if !self.iterate(|j| j < art_start) {
            return LpSolution::Unbounded;
        }

        let mut x = vec![0.0; self.nv];
        for (i, &b) in self.basis.iter().enumerate() {
            let val = self.rows[i][self.ncols];
            if b < self.nv {
                x[b] += val;
            } else if b < 2 * self.nv {
                x[b - self.nv] -= val;
            }
        }
        let objective = x
            .iter()
            .enumerate()
            .map(|(j, v)| self.cost[j] * v)
            .sum::<f64>();
        LpSolution::Optimal {
            objective,
            point: x,
        }
    }
}
