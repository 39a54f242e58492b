//! Dense two-phase simplex over exact rationals.
//!
//! All variables are nonnegative. Bland's rule is used for both entering and
//! leaving choices, so the method terminates and is deterministic.

use num_traits::{One, Signed, Zero};

use crate::rational::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<Rat>,
    pub relation: Relation,
    pub rhs: Rat,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: Rat, x: Vec<Rat> },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<Rat>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self { num_vars, objective: vec![Rat::zero(); num_vars], constraints: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn set_objective(&mut self, objective: Vec<Rat>) {
        assert_eq!(objective.len(), self.num_vars);
        self.objective = objective;
    }

    pub fn add(&mut self, coeffs: Vec<Rat>, relation: Relation, rhs: Rat) {
        assert_eq!(coeffs.len(), self.num_vars);
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    /// Maximizes the objective over `{x >= 0}` intersected with the constraints.
    pub fn maximize(&self) -> LpOutcome {
        Tableau::build(self).solve(&self.objective)
    }

    /// Any feasible point, or `None`.
    pub fn feasible_point(&self) -> Option<Vec<Rat>> {
        let mut probe = self.clone();
        probe.objective = vec![Rat::zero(); self.num_vars];
        match probe.maximize() {
            LpOutcome::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }
}

struct Tableau {
    rows: Vec<Vec<Rat>>,
    basis: Vec<usize>,
    num_vars: usize,
    artificial_start: usize,
    width: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars;
        let mut slack_count = 0;
        let mut art_count = 0;
        for c in &lp.constraints {
            let rel = normalized_relation(c);
            match rel {
                Relation::Le => slack_count += 1,
                Relation::Ge => {
                    slack_count += 1;
                    art_count += 1;
                }
                Relation::Eq => art_count += 1,
            }
        }
        let artificial_start = n + slack_count;
        let width = artificial_start + art_count;
        let mut rows = Vec::with_capacity(lp.constraints.len());
        let mut basis = Vec::with_capacity(lp.constraints.len());
        let (mut next_slack, mut next_art) = (n, artificial_start);
        for c in &lp.constraints {
            let flip = c.rhs.is_negative();
            let sign = if flip { -Rat::one() } else { Rat::one() };
            let mut row = vec![Rat::zero(); width + 1];
            for (j, a) in c.coeffs.iter().enumerate() {
                row[j] = a * &sign;
            }
            row[width] = &c.rhs * &sign;
            match normalized_relation(c) {
                Relation::Le => {
                    row[next_slack] = Rat::one();
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -Rat::one();
                    next_slack += 1;
                    row[next_art] = Rat::one();
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = Rat::one();
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
        }
        Self { rows, basis, num_vars: n, artificial_start, width }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Primal simplex maximizing `cost` restricted to columns `< allowed`.
    /// Returns false when unbounded.
    fn optimize(&mut self, cost: &[Rat], allowed: usize) -> bool {
        loop {
            // reduced cost r_j = c_j - c_B . column_j
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let mut r = cost[j].clone();
                for (row, &b) in self.rows.iter().zip(&self.basis) {
                    if !row[j].is_zero() && !cost[b].is_zero() {
                        r -= &cost[b] * &row[j];
                    }
                }
                r.is_positive()
            });
            let Some(e) = entering else { return true };
            let mut best: Option<(usize, Rat)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[e].is_positive() {
                    let ratio = &row[self.width] / &row[e];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = best else { return false };
            self.pivot(r, e);
        }
    }

    fn solve(mut self, objective: &[Rat]) -> LpOutcome {
        if self.artificial_start < self.width {
            let mut phase1 = vec![Rat::zero(); self.width];
            for c in phase1.iter_mut().skip(self.artificial_start) {
                *c = -Rat::one();
            }
            self.optimize(&phase1, self.width);
            let infeasible = self
                .rows
                .iter()
                .zip(&self.basis)
                .any(|(row, &b)| b >= self.artificial_start && !row[self.width].is_zero());
            if infeasible {
                return LpOutcome::Infeasible;
            }
            // drive remaining zero-level artificials out of the basis
            let mut i = 0;
            while i < self.rows.len() {
                if self.basis[i] >= self.artificial_start {
                    if let Some(c) = (0..self.artificial_start).find(|&c| !self.rows[i][c].is_zero()) {
                        self.pivot(i, c);
                        i += 1;
                    } else {
                        self.rows.remove(i);
                        self.basis.remove(i);
                    }
                } else {
                    i += 1;
                }
            }
        }
        let mut cost = vec![Rat::zero(); self.width];
        cost[..self.num_vars].clone_from_slice(objective);
        if !self.optimize(&cost, self.artificial_start) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![Rat::zero(); self.num_vars];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < self.num_vars {
                x[b] = row[self.width].clone();
            }
        }
        let value = x.iter().zip(objective).fold(Rat::zero(), |acc, (a, b)| acc + a * b);
        LpOutcome::Optimal { value, x }
    }
}

fn normalized_relation(c: &Constraint) -> Relation {
    if c.rhs.is_negative() {
        match c.relation {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Eq => Relation::Eq,
        }
    } else {
        c.relation
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![int(3), int(5)]);
        lp.add(vec![int(1), int(0)], Relation::Le, int(4));
        lp.add(vec![int(0), int(2)], Relation::Le, int(12));
        lp.add(vec![int(3), int(2)], Relation::Le, int(18));
        assert_eq!(lp.maximize(), LpOutcome::Optimal { value: int(36), x: vec![int(2), int(6)] });
    }

    #[test]
    fn equalities_and_fractions() {
        // max x - y, x + y = 1, x - 2y >= -1/2: optimum x = 1, y = 0
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![int(1), int(-1)]);
        lp.add(vec![int(1), int(1)], Relation::Eq, int(1));
        lp.add(vec![int(1), int(-2)], Relation::Ge, rat(-1, 2));
        match lp.maximize() {
            LpOutcome::Optimal { value, x } => {
                assert_eq!(value, int(1));
                assert_eq!(x, vec![int(1), int(0)]);
            }
            other => panic!("{other:?}"),
        }
        // max y under the same constraints: y <= 1/2
        let mut lp2 = LinearProgram::new(2);
        lp2.set_objective(vec![int(0), int(1)]);
        lp2.add(vec![int(1), int(1)], Relation::Eq, int(1));
        lp2.add(vec![int(1), int(-2)], Relation::Ge, rat(-1, 2));
        match lp2.maximize() {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, rat(1, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add(vec![int(1)], Relation::Le, int(1));
        lp.add(vec![int(1)], Relation::Ge, int(2));
        assert_eq!(lp.maximize(), LpOutcome::Infeasible);
        assert!(lp.feasible_point().is_none());

        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![int(1), int(0)]);
        lp.add(vec![int(1), int(-1)], Relation::Le, int(1));
        assert_eq!(lp.maximize(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![int(1), int(1)]);
        lp.add(vec![int(1), int(1)], Relation::Eq, int(2));
        lp.add(vec![int(2), int(2)], Relation::Eq, int(4));
        match lp.maximize() {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, int(2)),
            other => panic!("{other:?}"),
        }
    }
}
