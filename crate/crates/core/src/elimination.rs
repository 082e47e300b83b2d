//! Quantifier elimination over linear constraint systems.
//!
//! Existential projection of H-polytopes: Gauß substitution where an
//! equation pins the variable, Fourier-Motzkin pairing otherwise. FM can
//! square the constraint count per eliminated variable; the FM⁺ mode runs an
//! LP redundancy sweep after every single-variable elimination to keep
//! intermediate systems small. Both modes compute the same set.

use thiserror::Error;

use crate::polytope::{HPolytope, LinearConstraint};
use crate::scalar::Scalar;

/// Elimination strategy for multi-variable projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EliminationMode {
    Fm,
    /// Redundancy removal after every single-variable elimination.
    #[default]
    FmPlus,
}

/// Size accounting across one `eliminate_all` run. `max_intermediate_constraints`
/// is the maximum row count over the systems produced after each
/// single-variable step (after the mode's cleanup), not the input size.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EliminationStats {
    pub max_intermediate_constraints: usize,
    pub eliminations_performed: usize,
}

impl EliminationStats {
    pub fn merge(&mut self, other: &EliminationStats) {
        self.max_intermediate_constraints = self
            .max_intermediate_constraints
            .max(other.max_intermediate_constraints);
        self.eliminations_performed += other.eliminations_performed;
    }

    fn record(&mut self, rows: usize) {
        self.max_intermediate_constraints = self.max_intermediate_constraints.max(rows);
        self.eliminations_performed += 1;
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("no equation pins variable {var}; fall back to Fourier-Motzkin")]
pub struct GaussUnavailable {
    pub var: usize,
}

fn drop_dim<S: Scalar>(coeffs: &[S], var: usize) -> Vec<S> {
    let mut out = Vec::with_capacity(coeffs.len() - 1);
    out.extend_from_slice(&coeffs[..var]);
    out.extend_from_slice(&coeffs[var + 1..]);
    out
}

/// Find a non-strict pair `a·x ≤ b`, `-a·x ≤ -b` with a nonzero coefficient
/// on `var`; rows are normalized, so the pair test is literal negation.
fn find_equation<S: Scalar>(p: &HPolytope<S>, var: usize) -> Option<(usize, usize)> {
    let rows = p.constraints();
    for (i, ri) in rows.iter().enumerate() {
        if ri.strict || ri.coeffs[var].is_zero() {
            continue;
        }
        for (j, rj) in rows.iter().enumerate().skip(i + 1) {
            if rj.strict {
                continue;
            }
            if ri.bound != -rj.bound.clone() {
                continue;
            }
            if ri
                .coeffs
                .iter()
                .zip(&rj.coeffs)
                .all(|(a, b)| *a == -b.clone())
            {
                return Some((i, j));
            }
        }
    }
    None
}

/// Substitute the equation on `var` into every other row and drop the
/// variable's dimension. The result is the exact existential projection.
pub fn eliminate_gauss<S: Scalar>(
    p: &HPolytope<S>,
    var: usize,
) -> Result<HPolytope<S>, GaussUnavailable> {
    assert!(var < p.dim(), "variable index out of range");
    if p.is_marked_empty() {
        return Ok(HPolytope::empty(p.dim() - 1));
    }
    let (i, j) = find_equation(p, var).ok_or(GaussUnavailable { var })?;
    let eq = &p.constraints()[i];
    let pivot = eq.coeffs[var].clone();
    let mut out = Vec::with_capacity(p.num_constraints().saturating_sub(2));
    for (k, row) in p.constraints().iter().enumerate() {
        if k == i || k == j {
            continue;
        }
        let f = row.coeffs[var].clone();
        if f.is_zero() {
            out.push(LinearConstraint {
                coeffs: drop_dim(&row.coeffs, var),
                bound: row.bound.clone(),
                strict: row.strict,
            });
            continue;
        }
        let scale = f / pivot.clone();
        let coeffs: Vec<S> = row
            .coeffs
            .iter()
            .zip(&eq.coeffs)
            .map(|(r, e)| r.clone() - scale.clone() * e.clone())
            .collect();
        debug_assert!(coeffs[var].is_zero());
        out.push(LinearConstraint {
            coeffs: drop_dim(&coeffs, var),
            bound: row.bound.clone() - scale * eq.bound.clone(),
            strict: row.strict,
        });
    }
    Ok(HPolytope::from_rows_unchecked(p.dim() - 1, out))
}

/// Fourier-Motzkin step: every lower bound on `var` is paired with every
/// upper bound (`n/2` of each yields `(n/2)²` rows before cleanup); rows not
/// mentioning `var` pass through. Combined rows are strict iff either parent
/// is strict.
pub fn eliminate_fm<S: Scalar>(p: &HPolytope<S>, var: usize) -> HPolytope<S> {
    assert!(var < p.dim(), "variable index out of range");
    if p.is_marked_empty() {
        return HPolytope::empty(p.dim() - 1);
    }
    let mut lowers: Vec<&LinearConstraint<S>> = Vec::new();
    let mut uppers: Vec<&LinearConstraint<S>> = Vec::new();
    let mut out: Vec<LinearConstraint<S>> = Vec::new();
    for row in p.constraints() {
        let c = &row.coeffs[var];
        if c.is_zero() {
            out.push(LinearConstraint {
                coeffs: drop_dim(&row.coeffs, var),
                bound: row.bound.clone(),
                strict: row.strict,
            });
        } else if c.is_negative() {
            lowers.push(row);
        } else {
            uppers.push(row);
        }
    }
    for lo in &lowers {
        for up in &uppers {
            let wl = up.coeffs[var].clone();
            let wu = -lo.coeffs[var].clone();
            let coeffs: Vec<S> = lo
                .coeffs
                .iter()
                .zip(&up.coeffs)
                .map(|(a, b)| wl.clone() * a.clone() + wu.clone() * b.clone())
                .collect();
            debug_assert!(coeffs[var].is_zero());
            out.push(LinearConstraint {
                coeffs: drop_dim(&coeffs, var),
                bound: wl.clone() * lo.bound.clone() + wu * up.bound.clone(),
                strict: lo.strict || up.strict,
            });
        }
    }
    HPolytope::from_rows_unchecked(p.dim() - 1, out)
}

/// One single-variable step: Gauß if an equation pins the variable, FM
/// otherwise; redundancy removal afterwards in [`EliminationMode::FmPlus`].
fn eliminate_one<S: Scalar>(p: &HPolytope<S>, var: usize, mode: EliminationMode) -> HPolytope<S> {
    let next = match eliminate_gauss(p, var) {
        Ok(q) => q,
        Err(_) => eliminate_fm(p, var),
    };
    match mode {
        EliminationMode::Fm => next,
        EliminationMode::FmPlus => next.remove_redundant(),
    }
}

/// Eliminate `vars` in ascending dimension order.
pub fn eliminate_all<S: Scalar>(
    p: &HPolytope<S>,
    vars: &[usize],
    mode: EliminationMode,
) -> (HPolytope<S>, EliminationStats) {
    let mut sorted: Vec<usize> = vars.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    eliminate_in_order(p, &sorted, mode)
}

/// Eliminate `vars` in the given order (indices refer to the input system).
pub fn eliminate_in_order<S: Scalar>(
    p: &HPolytope<S>,
    vars: &[usize],
    mode: EliminationMode,
) -> (HPolytope<S>, EliminationStats) {
    let mut stats = EliminationStats::default();
    let result = eliminate_trace(p, vars, mode, |step| stats.record(step.num_constraints()));
    (result, stats)
}

/// Like [`eliminate_in_order`], reporting every intermediate system to the
/// observer (after the mode's cleanup for that step).
pub fn eliminate_trace<S: Scalar>(
    p: &HPolytope<S>,
    vars: &[usize],
    mode: EliminationMode,
    mut observe: impl FnMut(&HPolytope<S>),
) -> HPolytope<S> {
    assert!(vars.iter().all(|&v| v < p.dim()), "variable index out of range");
    let mut remaining: Vec<usize> = (0..p.dim()).collect();
    let mut current = p.clone();
    for &var in vars {
        let pos = remaining
            .iter()
            .position(|&d| d == var)
            .expect("variable eliminated twice");
        current = eliminate_one(&current, pos, mode);
        remaining.remove(pos);
        observe(&current);
        if current.is_marked_empty() {
            // Contradiction: the projection stays empty for every remaining
            // variable; short-circuit at the final dimension count.
            return HPolytope::empty(p.dim() - vars.len());
        }
    }
    current
}

/// Project onto `keep` (strictly increasing): eliminate everything else.
/// The result's dimension `i` is the input dimension `keep[i]`.
pub fn project_onto<S: Scalar>(
    p: &HPolytope<S>,
    keep: &[usize],
    mode: EliminationMode,
) -> (HPolytope<S>, EliminationStats) {
    debug_assert!(keep.windows(2).all(|w| w[0] < w[1]));
    let drop: Vec<usize> = (0..p.dim()).filter(|d| !keep.contains(d)).collect();
    eliminate_all(p, &drop, mode)
}

/// Eliminate `dims` but keep their slots, unconstrained, so the ambient
/// dimension and indexing are preserved.
pub fn forget_dims<S: Scalar>(
    p: &HPolytope<S>,
    dims: &[usize],
    mode: EliminationMode,
) -> (HPolytope<S>, EliminationStats) {
    let keep: Vec<usize> = (0..p.dim()).filter(|d| !dims.contains(d)).collect();
    let (projected, stats) = eliminate_all(p, dims, mode);
    (projected.embed(p.dim(), &keep), stats)
}
