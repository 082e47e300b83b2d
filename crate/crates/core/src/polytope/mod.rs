//! Exact convex polytope kernel.
//!
//! State sets are halfspace systems `{x | Ax ≤ b}` over a [`Scalar`] field,
//! with per-row strictness flags (`<` instead of `≤`). Queries (emptiness,
//! redundancy, bounding boxes) run through an exact simplex solver;
//! representation conversion runs through a double-description cone
//! enumeration. All values are immutable after construction and all
//! operations are pure.

mod dd;
mod lp;

pub use lp::{LpOutcome, Sense};

use std::cmp::Ordering;

use thiserror::Error;

use crate::scalar::{dot, lex_cmp, scmp, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operation requires a nonempty polytope")]
    EmptySet,
}

/// One halfspace `coeffs · x ≤ bound` (or `<` when `strict`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint<S> {
    pub coeffs: Vec<S>,
    pub bound: S,
    pub strict: bool,
}

impl<S: Scalar> LinearConstraint<S> {
    pub fn new(coeffs: Vec<S>, bound: S) -> Self {
        Self { coeffs, bound, strict: false }
    }

    pub fn new_strict(coeffs: Vec<S>, bound: S) -> Self {
        Self { coeffs, bound, strict: true }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, point: &[S]) -> S {
        dot(&self.coeffs, point)
    }

    /// Exact satisfaction, honoring strictness.
    pub fn satisfied_by(&self, point: &[S]) -> bool {
        let v = self.eval(point);
        match scmp(&v, &self.bound) {
            Ordering::Less => true,
            Ordering::Equal => !self.strict,
            Ordering::Greater => false,
        }
    }

    pub fn is_zero_row(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Zero-coefficient row that always holds: `0 ≤ b` with `b ≥ 0` (`> 0` if strict).
    fn is_tautology(&self) -> bool {
        self.is_zero_row()
            && if self.strict { self.bound.is_positive() } else { !self.bound.is_negative() }
    }

    /// Zero-coefficient row that never holds.
    fn is_contradiction(&self) -> bool {
        self.is_zero_row() && !self.is_tautology()
    }

    /// Scale so the first nonzero coefficient is `±1`; positive factor only,
    /// so the represented halfspace is unchanged. Enables duplicate collapse.
    fn normalize(&mut self) {
        if let Some(lead) = self.coeffs.iter().find(|c| !c.is_zero()) {
            let f = lead.abs();
            if f.is_one() {
                return;
            }
            for c in &mut self.coeffs {
                *c = c.clone() / f.clone();
            }
            self.bound = self.bound.clone() / f;
        }
    }

    fn cmp_for_dedup(&self, other: &Self) -> Ordering {
        lex_cmp(&self.coeffs, &other.coeffs)
            .then_with(|| scmp(&self.bound, &other.bound))
            // strict < means a smaller set; order strict first among equals
            .then_with(|| other.strict.cmp(&self.strict))
    }
}

/// H-polytope: finite conjunction of halfspaces over a fixed ambient dimension.
///
/// Construction canonicalizes: rows are normalized, tautologies dropped,
/// duplicates and dominated same-normal rows collapsed, and any
/// contradiction collapses the whole system to a canonical empty marker
/// (the single row `0 ≤ -1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HPolytope<S> {
    dim: usize,
    constraints: Vec<LinearConstraint<S>>,
}

/// V-polytope: `conv(vertices) ⊕ cone(rays)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VPolytope<S> {
    pub dim: usize,
    pub vertices: Vec<Vec<S>>,
    pub rays: Vec<Vec<S>>,
}

/// Componentwise interval hull; `None` encodes an unbounded side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundingBox<S> {
    pub intervals: Vec<(Option<S>, Option<S>)>,
}

impl<S: Scalar> BoundingBox<S> {
    pub fn dim(&self) -> usize {
        self.intervals.len()
    }
}

impl<S: Scalar> HPolytope<S> {
    /// Build from rows, canonicalizing. Rows of the wrong width are an error.
    pub fn from_rows(
        dim: usize,
        rows: Vec<LinearConstraint<S>>,
    ) -> Result<Self, GeometryError> {
        for r in &rows {
            if r.dim() != dim {
                return Err(GeometryError::DimensionMismatch { expected: dim, got: r.dim() });
            }
        }
        Ok(Self::from_rows_unchecked(dim, rows))
    }

    pub(crate) fn from_rows_unchecked(dim: usize, mut rows: Vec<LinearConstraint<S>>) -> Self {
        for r in &mut rows {
            r.normalize();
        }
        if rows.iter().any(|r| r.is_contradiction()) {
            return Self::empty(dim);
        }
        rows.retain(|r| !r.is_tautology());
        rows.sort_by(|a, b| a.cmp_for_dedup(b));
        // Same normal vector: the smallest bound dominates; at equal bounds
        // the strict row dominates. After sorting, that is the first of each
        // group.
        rows.dedup_by(|b, a| a.coeffs == b.coeffs);
        Self { dim, constraints: rows }
    }

    /// Whole space.
    pub fn universe(dim: usize) -> Self {
        Self { dim, constraints: Vec::new() }
    }

    /// Canonical empty set: the single marker row `0 ≤ -1`.
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            constraints: vec![LinearConstraint::new(vec![S::zero(); dim], -S::one())],
        }
    }

    /// Axis-aligned box; `None` sides are unconstrained.
    pub fn from_box(bounds: &[(Option<S>, Option<S>)]) -> Self {
        let dim = bounds.len();
        let mut rows = Vec::new();
        for (i, (lo, hi)) in bounds.iter().enumerate() {
            if let Some(lo) = lo {
                let mut c = vec![S::zero(); dim];
                c[i] = -S::one();
                rows.push(LinearConstraint::new(c, -lo.clone()));
            }
            if let Some(hi) = hi {
                let mut c = vec![S::zero(); dim];
                c[i] = S::one();
                rows.push(LinearConstraint::new(c, hi.clone()));
            }
        }
        Self::from_rows_unchecked(dim, rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[LinearConstraint<S>] {
        &self.constraints
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn has_strict_rows(&self) -> bool {
        self.constraints.iter().any(|c| c.strict)
    }

    /// Empty by the syntactic marker alone (no LP). See [`HPolytope::is_empty`].
    pub fn is_marked_empty(&self) -> bool {
        self.constraints.iter().any(|c| c.is_contradiction())
    }

    /// Constraint union; represents set intersection.
    pub fn intersect(&self, other: &Self) -> Result<Self, GeometryError> {
        if self.dim != other.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut rows = self.constraints.clone();
        rows.extend(other.constraints.iter().cloned());
        Ok(Self::from_rows_unchecked(self.dim, rows))
    }

    /// Same set, extra rows.
    pub fn with_rows(&self, extra: Vec<LinearConstraint<S>>) -> Result<Self, GeometryError> {
        for r in &extra {
            if r.dim() != self.dim {
                return Err(GeometryError::DimensionMismatch {
                    expected: self.dim,
                    got: r.dim(),
                });
            }
        }
        let mut rows = self.constraints.clone();
        rows.extend(extra);
        Ok(Self::from_rows_unchecked(self.dim, rows))
    }

    /// Cylindrical embedding into a larger space: old dimension `i` becomes
    /// dimension `map[i]`; unmapped dimensions are unconstrained.
    pub fn embed(&self, new_dim: usize, map: &[usize]) -> Self {
        assert_eq!(map.len(), self.dim, "embedding map must cover every dimension");
        debug_assert!(map.iter().all(|&t| t < new_dim));
        let rows = self
            .constraints
            .iter()
            .map(|r| {
                let mut coeffs = vec![S::zero(); new_dim];
                for (i, c) in r.coeffs.iter().enumerate() {
                    coeffs[map[i]] = c.clone();
                }
                LinearConstraint { coeffs, bound: r.bound.clone(), strict: r.strict }
            })
            .collect();
        Self::from_rows_unchecked(new_dim, rows)
    }

    /// Exact membership, strictness honored.
    pub fn contains_exact(&self, point: &[S]) -> Result<bool, GeometryError> {
        if point.len() != self.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        Ok(self.constraints.iter().all(|c| c.satisfied_by(point)))
    }

    /// Exact LP over the closed relaxation (strict rows treated as `≤`).
    pub fn lp_optimize(
        &self,
        objective: &[S],
        sense: Sense,
    ) -> Result<LpOutcome<S>, GeometryError> {
        if objective.len() != self.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                got: objective.len(),
            });
        }
        Ok(lp::optimize(self, objective, sense))
    }

    /// Exact emptiness, honoring strict rows.
    ///
    /// Two phases: feasibility of the closure, then — when strict rows are
    /// present — maximization of a slack `ε` shared by all strict rows.
    /// The strict system is nonempty iff the maximal slack is positive.
    pub fn is_empty(&self) -> bool {
        if self.is_marked_empty() {
            return true;
        }
        match lp::feasible_point(self) {
            None => true,
            Some(_) if !self.has_strict_rows() => false,
            Some(_) => !lp::strictly_feasible(self),
        }
    }

    /// Drop every constraint implied by the others. The represented set is
    /// unchanged; each survivor strictly tightens the system.
    pub fn remove_redundant(&self) -> Self {
        if self.is_empty() {
            return Self::empty(self.dim);
        }
        let mut kept: Vec<LinearConstraint<S>> = self.constraints.clone();
        let mut i = 0;
        while i < kept.len() {
            if kept.len() == 1 {
                break;
            }
            let candidate = kept[i].clone();
            // Relax the candidate's bound by 1 instead of deleting it; this
            // keeps the test LP bounded whenever the polytope is bounded and
            // decides the same question (the polytope is nonempty here).
            let mut probe: Vec<LinearConstraint<S>> = Vec::with_capacity(kept.len());
            for (j, row) in kept.iter().enumerate() {
                if j == i {
                    let mut relaxed = row.clone();
                    relaxed.bound += S::one();
                    relaxed.strict = false;
                    probe.push(relaxed);
                } else {
                    probe.push(row.clone());
                }
            }
            let probe = Self { dim: self.dim, constraints: probe };
            let redundant = match lp::optimize(&probe, &candidate.coeffs, Sense::Max) {
                LpOutcome::Optimal { value, .. } => match scmp(&value, &candidate.bound) {
                    Ordering::Less => true,
                    // A strict row still cuts the boundary face off.
                    Ordering::Equal => !candidate.strict,
                    Ordering::Greater => false,
                },
                LpOutcome::Unbounded => false,
                LpOutcome::Infeasible => true,
            };
            if redundant {
                kept.remove(i);
            } else {
                i += 1;
            }
        }
        Self { dim: self.dim, constraints: kept }
    }

    /// Exact per-dimension interval hull. Errors on an empty polytope.
    /// Every finite side is attained by an LP witness.
    pub fn bounding_box(&self) -> Result<BoundingBox<S>, GeometryError> {
        if self.is_empty() {
            return Err(GeometryError::EmptySet);
        }
        let mut intervals = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let mut obj = vec![S::zero(); self.dim];
            obj[i] = S::one();
            let lo = match lp::optimize(self, &obj, Sense::Min) {
                LpOutcome::Optimal { value, .. } => Some(value),
                LpOutcome::Unbounded => None,
                LpOutcome::Infeasible => unreachable!("nonempty polytope"),
            };
            let hi = match lp::optimize(self, &obj, Sense::Max) {
                LpOutcome::Optimal { value, .. } => Some(value),
                LpOutcome::Unbounded => None,
                LpOutcome::Infeasible => unreachable!("nonempty polytope"),
            };
            intervals.push((lo, hi));
        }
        Ok(BoundingBox { intervals })
    }

    /// Float membership with tolerance 0: constraints are converted to `f64`
    /// (round to nearest) and evaluated directly, strictness honored.
    pub fn contains_point(&self, point: &[f64]) -> Result<bool, GeometryError> {
        if point.len() != self.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        Ok(self.constraints.iter().all(|c| {
            let lhs: f64 = c
                .coeffs
                .iter()
                .zip(point)
                .map(|(a, x)| a.to_f64().unwrap_or(f64::NAN) * x)
                .sum();
            let b = c.bound.to_f64().unwrap_or(f64::NAN);
            if c.strict {
                lhs < b
            } else {
                lhs <= b
            }
        }))
    }

    /// Vertex/ray representation of the closure. Errors when the closure is
    /// empty. Bounded inputs yield an empty ray list.
    pub fn to_vrep(&self) -> Result<VPolytope<S>, GeometryError> {
        dd::vertex_enumeration(self)
    }

    /// `self ⊆ other`, decided by maximizing every constraint of `other`
    /// over `self` (closures; exact). `self` must be nonempty.
    pub fn subset_of(&self, other: &Self) -> Result<bool, GeometryError> {
        if self.dim != other.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        for row in &other.constraints {
            match lp::optimize(self, &row.coeffs, Sense::Max) {
                LpOutcome::Optimal { value, .. } => {
                    if scmp(&value, &row.bound) == Ordering::Greater {
                        return Ok(false);
                    }
                }
                LpOutcome::Unbounded => return Ok(false),
                LpOutcome::Infeasible => return Ok(true),
            }
        }
        Ok(true)
    }

    /// Set equality of closures via mutual containment.
    pub fn set_equals(&self, other: &Self) -> Result<bool, GeometryError> {
        match (self.is_empty(), other.is_empty()) {
            (true, true) => return Ok(true),
            (true, false) | (false, true) => return Ok(false),
            _ => {}
        }
        Ok(self.subset_of(other)? && other.subset_of(self)?)
    }
}

impl<S: Scalar> VPolytope<S> {
    pub fn from_points(dim: usize, vertices: Vec<Vec<S>>) -> Self {
        Self { dim, vertices, rays: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Facet representation; the empty V-polytope maps to the canonical
    /// empty H-polytope.
    pub fn to_hrep(&self) -> HPolytope<S> {
        dd::facet_enumeration(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio, Rat};

    fn row(coeffs: &[i64], bound: i64) -> LinearConstraint<Rat> {
        LinearConstraint::new(coeffs.iter().map(|&c| int(c)).collect(), int(bound))
    }

    fn unit_square() -> HPolytope<Rat> {
        HPolytope::from_box(&[
            (Some(int(0)), Some(int(1))),
            (Some(int(0)), Some(int(1))),
        ])
    }

    #[test]
    fn canonicalization_collapses_duplicates_and_dominated_rows() {
        let p = HPolytope::from_rows(
            1,
            vec![row(&[1], 1), row(&[2], 4), row(&[1], 1), row(&[-1], 0)],
        )
        .unwrap();
        // x <= 1 dominates x <= 2 (normalized from 2x <= 4); duplicate dropped.
        assert_eq!(p.num_constraints(), 2);
    }

    #[test]
    fn contradiction_collapses_to_marked_empty() {
        let p = HPolytope::from_rows(2, vec![row(&[0, 0], -3), row(&[1, 0], 5)]).unwrap();
        assert!(p.is_marked_empty());
        assert_eq!(p.num_constraints(), 1);
    }

    #[test]
    fn intersect_is_constraint_union() {
        let a = HPolytope::from_rows(1, vec![row(&[1], 1)]).unwrap();
        let b = HPolytope::from_rows(1, vec![row(&[-1], 0)]).unwrap();
        let c = a.intersect(&b).unwrap();
        assert_eq!(c.num_constraints(), 2);
        assert!(c.contains_exact(&[ratio(1, 2)]).unwrap());
        assert!(!c.contains_exact(&[int(2)]).unwrap());
    }

    #[test]
    fn intersect_dimension_mismatch() {
        let a = HPolytope::<Rat>::universe(1);
        let b = HPolytope::<Rat>::universe(2);
        assert!(matches!(a.intersect(&b), Err(GeometryError::DimensionMismatch { .. })));
    }

    #[test]
    fn membership_honors_strictness() {
        let open: HPolytope<Rat> =
            HPolytope::from_rows(1, vec![LinearConstraint::new_strict(vec![int(1)], int(1))])
                .unwrap();
        assert!(!open.contains_exact(&[int(1)]).unwrap());
        assert!(open.contains_exact(&[int(0)]).unwrap());
        assert!(!open.contains_point(&[1.0]).unwrap());
        assert!(open.contains_point(&[0.999]).unwrap());
    }

    #[test]
    fn float_membership_unit_square() {
        let sq = unit_square();
        assert!(sq.contains_point(&[0.5, 0.5]).unwrap());
        assert!(!sq.contains_point(&[1.5, 0.5]).unwrap());
    }

    #[test]
    fn embed_places_dims() {
        let p = HPolytope::from_rows(1, vec![row(&[1], 1)]).unwrap();
        let e = p.embed(3, &[2]);
        assert_eq!(e.dim(), 3);
        assert!(e.contains_exact(&[int(9), int(9), int(0)]).unwrap());
        assert!(!e.contains_exact(&[int(0), int(0), int(2)]).unwrap());
    }

    #[test]
    fn redundancy_removal_drops_implied_diagonal() {
        // {x <= 1, y <= 1, x + y <= 3}: the diagonal is implied.
        let p = HPolytope::from_rows(
            2,
            vec![row(&[1, 0], 1), row(&[0, 1], 1), row(&[1, 1], 3)],
        )
        .unwrap();
        let slim = p.remove_redundant();
        assert_eq!(slim.num_constraints(), 2);
        assert!(slim.set_equals(&p).unwrap());
        // All four box facets survive.
        let sq = unit_square().remove_redundant();
        assert_eq!(sq.num_constraints(), 4);
        // Dominated bound: {x <= 1, x <= 2, x >= 0}.
        let dom = HPolytope::from_rows(1, vec![row(&[1], 1), row(&[1], 2), row(&[-1], 0)])
            .unwrap()
            .remove_redundant();
        assert_eq!(dom.num_constraints(), 2);
    }

    #[test]
    fn square_cut_is_a_triangle() {
        let cut = HPolytope::from_rows(2, vec![row(&[1, 1], 1)]).unwrap();
        let tri = unit_square().intersect(&cut).unwrap();
        let v = tri.to_vrep().unwrap();
        assert_eq!(v.vertices.len(), 3);
        let boxes_apart = HPolytope::from_box(&[(Some(int::<Rat>(5)), Some(int(6)))]);
        let other = HPolytope::from_box(&[(Some(int::<Rat>(0)), Some(int(1)))]);
        assert!(boxes_apart.intersect(&other).unwrap().is_empty());
    }

    #[test]
    fn bounding_box_of_triangle_and_ray() {
        let tri = HPolytope::from_rows(
            2,
            vec![row(&[-1, 0], 0), row(&[0, -1], 0), row(&[1, 1], 1)],
        )
        .unwrap();
        let bb = tri.bounding_box().unwrap();
        assert_eq!(bb.intervals, vec![
            (Some(int(0)), Some(int(1))),
            (Some(int(0)), Some(int(1))),
        ]);
        let ray = HPolytope::from_rows(1, vec![row(&[-1], 0)]).unwrap();
        let bb = ray.bounding_box().unwrap();
        assert_eq!(bb.intervals, vec![(Some(int(0)), None)]);
        assert!(HPolytope::<Rat>::empty(2).bounding_box().is_err());
    }

    // The kernel is generic over the scalar: a float instantiation works for
    // well-conditioned inputs even though the pipeline never uses one.
    #[test]
    fn kernel_instantiates_at_f64() {
        let p: HPolytope<f64> = HPolytope::from_rows(
            2,
            vec![
                LinearConstraint::new(vec![1.0, 0.0], 1.0),
                LinearConstraint::new(vec![-1.0, 0.0], 0.0),
                LinearConstraint::new(vec![0.0, 1.0], 2.0),
                LinearConstraint::new(vec![0.0, -1.0], 0.0),
            ],
        )
        .unwrap();
        match p.lp_optimize(&[1.0, 1.0], Sense::Max).unwrap() {
            LpOutcome::Optimal { value, witness } => {
                assert_eq!(value, 3.0);
                assert_eq!(witness, vec![1.0, 2.0]);
            }
            other => panic!("unexpected {other:?}"),
        }
        let v = p.to_vrep().unwrap();
        assert_eq!(v.vertices.len(), 4);
    }
}
