//! Exact two-phase simplex over the kernel scalar.
//!
//! Free variables are split into nonnegative pairs, slacks turn the system
//! into equalities, and infeasible starts go through a phase-1 artificial
//! objective. Pivot selection is most-negative reduced cost with a permanent
//! switch to Bland's rule once pivots degenerate, so the solver is both fast
//! on typical inputs and guaranteed to terminate.

use std::cmp::Ordering;

use crate::scalar::{dot, scmp, Scalar};

use super::HPolytope;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome<S> {
    Optimal { value: S, witness: Vec<S> },
    Unbounded,
    Infeasible,
}

/// Maximum consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_LIMIT: u32 = 64;

struct Tableau<S> {
    ncols: usize,
    rows: Vec<Vec<S>>,
    rhs: Vec<S>,
    basis: Vec<usize>,
    reduced: Vec<S>,
    degenerate: u32,
    bland: bool,
}

enum Step {
    Optimal,
    Unbounded,
    Pivoted,
}

impl<S: Scalar> Tableau<S> {
    /// Rebuild the reduced-cost row `z_j - c_j` for a fresh objective
    /// (maximization) against the current basis.
    fn price(&mut self, cost: &[S]) {
        debug_assert_eq!(cost.len(), self.ncols);
        let mut reduced: Vec<S> = cost.iter().map(|c| -c.clone()).collect();
        for (r, row) in self.rows.iter().enumerate() {
            let cb = &cost[self.basis[r]];
            if cb.is_zero() {
                continue;
            }
            for (j, a) in row.iter().enumerate() {
                if !a.is_zero() {
                    reduced[j] += cb.clone() * a.clone();
                }
            }
        }
        self.reduced = reduced;
        self.degenerate = 0;
        self.bland = false;
    }

    fn entering(&self) -> Option<usize> {
        if self.bland {
            return (0..self.ncols).find(|&j| self.reduced[j].is_negative());
        }
        let mut best: Option<usize> = None;
        for j in 0..self.ncols {
            if self.reduced[j].is_negative() {
                match best {
                    None => best = Some(j),
                    Some(b) => {
                        if scmp(&self.reduced[j], &self.reduced[b]) == Ordering::Less {
                            best = Some(j);
                        }
                    }
                }
            }
        }
        best
    }

    fn leaving(&self, e: usize) -> Option<usize> {
        let mut best: Option<(usize, S)> = None;
        for r in 0..self.rows.len() {
            let a = &self.rows[r][e];
            if !a.is_positive() {
                continue;
            }
            let ratio = self.rhs[r].clone() / a.clone();
            match &best {
                None => best = Some((r, ratio)),
                Some((br, bratio)) => match scmp(&ratio, bratio) {
                    Ordering::Less => best = Some((r, ratio)),
                    Ordering::Equal => {
                        // Bland tie-break: smallest basis variable leaves.
                        if self.basis[r] < self.basis[*br] {
                            best = Some((r, ratio));
                        }
                    }
                    Ordering::Greater => {}
                },
            }
        }
        best.map(|(r, _)| r)
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let pivot = self.rows[r][e].clone();
        debug_assert!(!pivot.is_zero());
        if !pivot.is_one() {
            for v in &mut self.rows[r] {
                *v = v.clone() / pivot.clone();
            }
            self.rhs[r] = self.rhs[r].clone() / pivot.clone();
        }
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for r2 in 0..self.rows.len() {
            if r2 == r {
                continue;
            }
            let f = self.rows[r2][e].clone();
            if f.is_zero() {
                continue;
            }
            for (v, p) in self.rows[r2].iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *v = v.clone() - f.clone() * p.clone();
                }
            }
            self.rhs[r2] = self.rhs[r2].clone() - f * prhs.clone();
        }
        let f = self.reduced[e].clone();
        if !f.is_zero() {
            for (v, p) in self.reduced.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *v = v.clone() - f.clone() * p.clone();
                }
            }
        }
        self.basis[r] = e;
    }

    fn step(&mut self) -> Step {
        let Some(e) = self.entering() else { return Step::Optimal };
        let Some(r) = self.leaving(e) else { return Step::Unbounded };
        if self.rhs[r].is_zero() {
            self.degenerate += 1;
            if self.degenerate > DEGENERATE_LIMIT {
                self.bland = true;
            }
        } else {
            self.degenerate = 0;
        }
        self.pivot(r, e);
        Step::Pivoted
    }

    fn run(&mut self) -> bool {
        loop {
            match self.step() {
                Step::Optimal => return true,
                Step::Unbounded => return false,
                Step::Pivoted => {}
            }
        }
    }

    /// Current value of structural column `j`.
    fn value_of(&self, j: usize) -> S {
        for (r, &b) in self.basis.iter().enumerate() {
            if b == j {
                return self.rhs[r].clone();
            }
        }
        S::zero()
    }
}

struct Problem<S> {
    tableau: Tableau<S>,
    feasible: bool,
}

/// Phase 1: build a basic feasible tableau for the closed system
/// `{rows} ∪ {x free}` or report infeasibility.
fn phase_one<S: Scalar>(dim: usize, rows: &[(Vec<S>, S)]) -> Problem<S> {
    let m = rows.len();
    let nstruct = 2 * dim + m;
    let mut needs_artificial = Vec::new();
    let mut mat: Vec<Vec<S>> = Vec::with_capacity(m);
    let mut rhs: Vec<S> = Vec::with_capacity(m);
    for (i, (coeffs, bound)) in rows.iter().enumerate() {
        let negate = bound.is_negative();
        let mut row = vec![S::zero(); nstruct];
        for (j, a) in coeffs.iter().enumerate() {
            let a = if negate { -a.clone() } else { a.clone() };
            row[j] = a.clone();
            row[dim + j] = -a;
        }
        row[2 * dim + i] = if negate { -S::one() } else { S::one() };
        mat.push(row);
        rhs.push(if negate { -bound.clone() } else { bound.clone() });
        if negate {
            needs_artificial.push(i);
        }
    }
    let ncols = nstruct + needs_artificial.len();
    let mut basis = Vec::with_capacity(m);
    {
        let mut next_art = nstruct;
        for i in 0..m {
            if needs_artificial.contains(&i) {
                mat[i].resize(ncols, S::zero());
                mat[i][next_art] = S::one();
                basis.push(next_art);
                next_art += 1;
            } else {
                mat[i].resize(ncols, S::zero());
                basis.push(2 * dim + i);
            }
        }
    }
    let mut tableau = Tableau {
        ncols,
        rows: mat,
        rhs,
        basis,
        reduced: Vec::new(),
        degenerate: 0,
        bland: false,
    };
    if needs_artificial.is_empty() {
        tableau.reduced = vec![S::zero(); ncols];
        return Problem { tableau, feasible: true };
    }
    // Maximize -(sum of artificials).
    let mut cost = vec![S::zero(); ncols];
    for c in cost.iter_mut().skip(nstruct) {
        *c = -S::one();
    }
    tableau.price(&cost);
    let ok = tableau.run();
    debug_assert!(ok, "phase-1 objective is bounded");
    let infeasible = tableau
        .basis
        .iter()
        .enumerate()
        .any(|(r, &b)| b >= nstruct && tableau.rhs[r].is_positive());
    if infeasible {
        return Problem { tableau, feasible: false };
    }
    // Drive zero-level artificials out of the basis, dropping rows that are
    // redundant combinations of the others.
    let mut r = 0;
    while r < tableau.rows.len() {
        if tableau.basis[r] >= nstruct {
            if let Some(e) = (0..nstruct).find(|&j| !tableau.rows[r][j].is_zero()) {
                tableau.pivot(r, e);
            } else {
                tableau.rows.remove(r);
                tableau.rhs.remove(r);
                tableau.basis.remove(r);
                continue;
            }
        }
        r += 1;
    }
    // Truncate artificial columns.
    for row in &mut tableau.rows {
        row.truncate(nstruct);
    }
    tableau.ncols = nstruct;
    Problem { tableau, feasible: true }
}

fn closed_rows<S: Scalar>(p: &HPolytope<S>) -> Vec<(Vec<S>, S)> {
    p.constraints()
        .iter()
        .map(|c| (c.coeffs.clone(), c.bound.clone()))
        .collect()
}

fn solve<S: Scalar>(dim: usize, rows: &[(Vec<S>, S)], objective: &[S], sense: Sense) -> LpOutcome<S> {
    let flip = sense == Sense::Min;
    let mut problem = phase_one(dim, rows);
    if !problem.feasible {
        return LpOutcome::Infeasible;
    }
    let t = &mut problem.tableau;
    let mut cost = vec![S::zero(); t.ncols];
    for (j, c) in objective.iter().enumerate() {
        let c = if flip { -c.clone() } else { c.clone() };
        cost[j] = c.clone();
        cost[dim + j] = -c;
    }
    t.price(&cost);
    if !t.run() {
        return LpOutcome::Unbounded;
    }
    let witness: Vec<S> = (0..dim)
        .map(|j| t.value_of(j) - t.value_of(dim + j))
        .collect();
    let value = dot(objective, &witness);
    LpOutcome::Optimal { value, witness }
}

/// Exact LP over the closed relaxation of `p` (strict rows treated as `≤`).
pub(crate) fn optimize<S: Scalar>(p: &HPolytope<S>, objective: &[S], sense: Sense) -> LpOutcome<S> {
    solve(p.dim(), &closed_rows(p), objective, sense)
}

/// A point of the closed relaxation, if one exists.
pub(crate) fn feasible_point<S: Scalar>(p: &HPolytope<S>) -> Option<Vec<S>> {
    let mut problem = phase_one(p.dim(), &closed_rows(p));
    if !problem.feasible {
        return None;
    }
    let t = &mut problem.tableau;
    Some((0..p.dim()).map(|j| t.value_of(j) - t.value_of(p.dim() + j)).collect())
}

/// Whether strict rows can be satisfied with positive slack: maximize a
/// shared slack `ε ≤ 1` added to every strict row; nonempty iff max ε > 0.
pub(crate) fn strictly_feasible<S: Scalar>(p: &HPolytope<S>) -> bool {
    let dim = p.dim() + 1;
    let eps = p.dim();
    let mut rows: Vec<(Vec<S>, S)> = Vec::with_capacity(p.num_constraints() + 1);
    for c in p.constraints() {
        let mut coeffs = c.coeffs.clone();
        coeffs.push(if c.strict { S::one() } else { S::zero() });
        rows.push((coeffs, c.bound.clone()));
    }
    let mut cap = vec![S::zero(); dim];
    cap[eps] = S::one();
    rows.push((cap.clone(), S::one()));
    match solve(dim, &rows, &cap, Sense::Max) {
        LpOutcome::Optimal { value, .. } => value.is_positive(),
        LpOutcome::Unbounded => unreachable!("slack is capped"),
        LpOutcome::Infeasible => false,
    }
}
