//! Dense two-phase primal simplex over any [`Scalar`].
//!
//! Sized for the equilibrium LPs in this crate (a few hundred columns at
//! most). Bland's rule is used throughout so degenerate problems, which the
//! CCE polytope always is (every right-hand side but one is zero), terminate.
//! With rational scalars the result is exact.

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    LessEq,
    Equal,
    GreaterEq,
}

#[derive(Clone, Debug)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

/// `maximize objective·x subject to constraints, x ≥ 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
}

#[derive(Clone, Debug)]
pub struct LpSolution<T> {
    pub x: Vec<T>,
    pub objective: T,
    /// Some nonbasic column has zero reduced cost at the optimum, so the
    /// optimizer may not be unique.
    pub alternative_optima: bool,
    pub pivots: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("pivot limit of {0} reached")]
    PivotLimit(usize),
    #[error("constraint {row} has {got} coefficients, expected {expected}")]
    Shape { row: usize, expected: usize, got: usize },
}

const PIVOT_LIMIT: usize = 100_000;

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    /// Reduced costs `c_j - z_j`; the last entry holds `-z`.
    cost: Vec<T>,
    basis: Vec<usize>,
    width: usize,
    pivots: usize,
}

impl<T: Scalar> Tableau<T> {
    fn rhs(&self, row: usize) -> &T {
        &self.rows[row][self.width]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col].clone();
        for v in self.rows[row].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let pivot_row = self.rows[row].clone();
        for (r, other) in self.rows.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = other[col].clone();
            if f.is_zero() {
                continue;
            }
            for (v, pv) in other.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
        }
        let f = self.cost[col].clone();
        if !f.is_zero() {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Sets the cost row from scratch for objective `c` (length `width`).
    fn price(&mut self, c: &[T]) {
        let mut cost: Vec<T> = c.to_vec();
        cost.push(T::zero());
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = c[b].clone();
            if cb.is_zero() {
                continue;
            }
            for (v, t) in cost.iter_mut().zip(&self.rows[r]) {
                *v = v.clone() - cb.clone() * t.clone();
            }
        }
        self.cost = cost;
    }

    /// Maximizes the priced objective over columns with `allowed[j]`.
    fn optimize(&mut self, allowed: &[bool]) -> Result<(), LpError> {
        let tol = T::tolerance();
        loop {
            if self.pivots > PIVOT_LIMIT {
                return Err(LpError::PivotLimit(PIVOT_LIMIT));
            }
            let Some(col) = (0..self.width).find(|&j| allowed[j] && self.cost[j] > tol) else {
                return Ok(());
            };
            let mut best: Option<(usize, T)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][col];
                if *a <= tol {
                    continue;
                }
                let ratio = self.rhs(r).clone() / a.clone();
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => {
                        if ratio < bratio || (ratio == bratio && self.basis[r] < self.basis[br]) {
                            Some((r, ratio))
                        } else {
                            Some((br, bratio))
                        }
                    }
                };
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return Err(LpError::Unbounded),
            }
        }
    }
}

impl<T: Scalar> LinearProgram<T> {
    pub fn solve(&self) -> Result<LpSolution<T>, LpError> {
        let n = self.objective.len();
        let tol = T::tolerance();
        for (row, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::Shape { row, expected: n, got: c.coeffs.len() });
            }
        }
        // Normalize to nonnegative right-hand sides.
        let rows: Vec<(Vec<T>, Relation, T)> = self
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < T::zero() {
                    let flipped = match c.relation {
                        Relation::LessEq => Relation::GreaterEq,
                        Relation::GreaterEq => Relation::LessEq,
                        Relation::Equal => Relation::Equal,
                    };
                    (c.coeffs.iter().map(|v| -v.clone()).collect(), flipped, -c.rhs.clone())
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs.clone())
                }
            })
            .collect();
        let m = rows.len();
        let slack_count = rows.iter().filter(|r| r.1 != Relation::Equal).count();
        let art_count = rows.iter().filter(|r| r.1 != Relation::LessEq).count();
        let width = n + slack_count + art_count;
        let art_start = n + slack_count;

        let mut table = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut next_slack, mut next_art) = (n, art_start);
        for (coeffs, rel, rhs) in rows {
            let mut line = coeffs;
            line.resize(width + 1, T::zero());
            line[width] = rhs;
            match rel {
                Relation::LessEq => {
                    line[next_slack] = T::one();
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::GreaterEq => {
                    line[next_slack] = -T::one();
                    next_slack += 1;
                    line[next_art] = T::one();
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Equal => {
                    line[next_art] = T::one();
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            table.push(line);
        }
        let mut tab = Tableau { rows: table, cost: Vec::new(), basis, width, pivots: 0 };

        if art_count > 0 {
            let phase1: Vec<T> = (0..width).map(|j| if j >= art_start { -T::one() } else { T::zero() }).collect();
            tab.price(&phase1);
            tab.optimize(&vec![true; width])?;
            // cost[width] holds -z, and z = -Σ artificials.
            if tab.cost[width].clone() > tol {
                return Err(LpError::Infeasible);
            }
            for r in 0..m {
                if tab.basis[r] < art_start {
                    continue;
                }
                if let Some(col) = (0..art_start).find(|&j| tab.rows[r][j].abs() > tol) {
                    tab.pivot(r, col);
                }
                // Otherwise the row is redundant; its artificial stays basic at zero.
            }
        }

        let mut phase2: Vec<T> = self.objective.clone();
        phase2.resize(width, T::zero());
        tab.price(&phase2);
        let allowed: Vec<bool> = (0..width).map(|j| j < art_start).collect();
        tab.optimize(&allowed)?;

        let mut x = vec![T::zero(); n];
        for (r, &b) in tab.basis.iter().enumerate() {
            if b < n {
                x[b] = tab.rhs(r).clone();
            }
        }
        let objective = self
            .objective
            .iter()
            .zip(&x)
            .fold(T::zero(), |acc, (c, v)| acc + c.clone() * v.clone());
        let alternative_optima = (0..art_start)
            .filter(|j| !tab.basis.contains(j))
            .any(|j| tab.cost[j].abs() <= tol);
        Ok(LpSolution { x, objective, alternative_optima, pivots: tab.pivots })
    }
}
