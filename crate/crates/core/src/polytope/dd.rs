//! Representation conversion via double description on homogenized cones.
//!
//! Both directions reduce to enumerating the extreme rays of a polyhedral
//! cone `{x | a_i · x ≤ 0}`: vertex enumeration homogenizes `Ax ≤ b` with an
//! extra coordinate, facet enumeration runs the same machinery on the polar
//! cone of the generators. Lineality is carried explicitly so degenerate and
//! unbounded inputs stay exact.

use crate::scalar::{dot, lex_cmp, Scalar};

use super::{GeometryError, HPolytope, LinearConstraint, VPolytope};

#[derive(Clone, PartialEq, Eq)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn new(n: usize) -> Self {
        Self { words: vec![0; n.div_ceil(64)] }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn is_subset_of(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}

pub(crate) struct ConeGenerators<S> {
    pub lineality: Vec<Vec<S>>,
    pub rays: Vec<Vec<S>>,
}

/// Positive rescale so the first nonzero coordinate is `±1`.
fn normalize_ray<S: Scalar>(v: &mut [S]) {
    if let Some(lead) = v.iter().find(|c| !c.is_zero()) {
        let f = lead.abs();
        if !f.is_one() {
            for c in v.iter_mut() {
                *c = c.clone() / f.clone();
            }
        }
    }
}

/// Any rescale so the first nonzero coordinate is `1` (lines have no
/// preferred direction).
fn normalize_line<S: Scalar>(v: &mut [S]) {
    if let Some(lead) = v.iter().find(|c| !c.is_zero()) {
        let f = lead.clone();
        if !f.is_one() {
            for c in v.iter_mut() {
                *c = c.clone() / f.clone();
            }
        }
    }
}

fn dedup_vectors<S: Scalar>(vs: &mut Vec<Vec<S>>) {
    vs.sort_by(|a, b| lex_cmp(a, b));
    vs.dedup();
}

/// Extreme rays and lineality basis of `{x | row · x ≤ 0 for all rows}`.
pub(crate) fn cone_generators<S: Scalar>(dim: usize, rows: &[Vec<S>]) -> ConeGenerators<S> {
    let mut lineality: Vec<Vec<S>> = (0..dim)
        .map(|i| {
            let mut e = vec![S::zero(); dim];
            e[i] = S::one();
            e
        })
        .collect();
    let mut rays: Vec<Vec<S>> = Vec::new();
    let mut processed: Vec<Vec<S>> = Vec::new();

    for a in rows {
        if a.iter().all(|c| c.is_zero()) {
            continue;
        }
        if let Some(k) = lineality.iter().position(|l| !dot(a, l).is_zero()) {
            // The constraint cuts the lineality space: one line becomes the
            // ray pointing into the feasible side, everything else is
            // projected onto the constraint hyperplane along it.
            let l0 = lineality.remove(k);
            let c = dot(a, &l0);
            let mut r0: Vec<S> = l0.iter().map(|v| -(v.clone() / c.clone())).collect();
            for l in &mut lineality {
                let s = dot(a, l);
                if !s.is_zero() {
                    for (li, ri) in l.iter_mut().zip(&r0) {
                        *li = li.clone() + s.clone() * ri.clone();
                    }
                }
            }
            for r in &mut rays {
                let s = dot(a, r);
                if !s.is_zero() {
                    for (vi, ri) in r.iter_mut().zip(&r0) {
                        *vi = vi.clone() + s.clone() * ri.clone();
                    }
                }
                normalize_ray(r);
            }
            normalize_ray(&mut r0);
            rays.push(r0);
            for l in &mut lineality {
                normalize_line(l);
            }
            dedup_vectors(&mut rays);
        } else {
            let values: Vec<S> = rays.iter().map(|r| dot(a, r)).collect();
            let pos: Vec<usize> =
                (0..rays.len()).filter(|&i| values[i].is_positive()).collect();
            if pos.is_empty() {
                processed.push(a.clone());
                continue;
            }
            let neg: Vec<usize> =
                (0..rays.len()).filter(|&i| values[i].is_negative()).collect();
            // Active sets over previously processed rows, for the
            // combinatorial adjacency test.
            let acts: Vec<BitSet> = rays
                .iter()
                .map(|r| {
                    let mut b = BitSet::new(processed.len());
                    for (i, row) in processed.iter().enumerate() {
                        if dot(row, r).is_zero() {
                            b.set(i);
                        }
                    }
                    b
                })
                .collect();
            let mut next: Vec<Vec<S>> = (0..rays.len())
                .filter(|i| !values[*i].is_positive())
                .map(|i| rays[i].clone())
                .collect();
            for &p in &pos {
                'pairs: for &n in &neg {
                    // p and n are adjacent iff no third ray is active on
                    // every row where both are active.
                    let mut common = acts[p].clone();
                    for (w, o) in common.words.iter_mut().zip(&acts[n].words) {
                        *w &= o;
                    }
                    for (i, act) in acts.iter().enumerate() {
                        if i != p && i != n && common.is_subset_of(act) {
                            continue 'pairs;
                        }
                    }
                    let vp = values[p].clone();
                    let vn = values[n].clone();
                    let mut combo: Vec<S> = rays[p]
                        .iter()
                        .zip(&rays[n])
                        .map(|(rp, rn)| vp.clone() * rn.clone() - vn.clone() * rp.clone())
                        .collect();
                    normalize_ray(&mut combo);
                    next.push(combo);
                }
            }
            dedup_vectors(&mut next);
            rays = next;
        }
        processed.push(a.clone());
    }
    ConeGenerators { lineality, rays }
}

/// Vertex/ray representation of the closure of `p`.
pub(crate) fn vertex_enumeration<S: Scalar>(
    p: &HPolytope<S>,
) -> Result<VPolytope<S>, GeometryError> {
    if p.is_marked_empty() {
        return Err(GeometryError::EmptySet);
    }
    let d = p.dim();
    let hdim = d + 1;
    // Homogenize: x satisfies Ax <= b iff (x, 1) is in the cone
    // {(y, t) | Ay - bt <= 0, t >= 0}. The t-row goes first so the
    // lineality basis is guaranteed orthogonal to it.
    let mut rows: Vec<Vec<S>> = Vec::with_capacity(p.num_constraints() + 1);
    let mut t_row = vec![S::zero(); hdim];
    t_row[d] = -S::one();
    rows.push(t_row);
    for c in p.constraints() {
        let mut row = c.coeffs.clone();
        row.push(-c.bound.clone());
        rows.push(row);
    }
    let gens = cone_generators(hdim, &rows);
    let mut vertices: Vec<Vec<S>> = Vec::new();
    let mut rays: Vec<Vec<S>> = Vec::new();
    for g in gens.rays {
        let t = g[d].clone();
        if t.is_positive() {
            vertices.push(g[..d].iter().map(|v| v.clone() / t.clone()).collect());
        } else if g[..d].iter().any(|v| !v.is_zero()) {
            debug_assert!(t.is_zero());
            rays.push(g[..d].to_vec());
        }
    }
    for l in gens.lineality {
        debug_assert!(l[d].is_zero());
        let fwd: Vec<S> = l[..d].to_vec();
        if fwd.iter().any(|v| !v.is_zero()) {
            rays.push(fwd.iter().map(|v| -v.clone()).collect());
            rays.push(fwd);
        }
    }
    if vertices.is_empty() {
        return Err(GeometryError::EmptySet);
    }
    dedup_vectors(&mut vertices);
    dedup_vectors(&mut rays);
    Ok(VPolytope { dim: d, vertices, rays })
}

/// Facet representation of `conv(vertices) ⊕ cone(rays)`.
pub(crate) fn facet_enumeration<S: Scalar>(v: &VPolytope<S>) -> HPolytope<S> {
    if v.vertices.is_empty() {
        return HPolytope::empty(v.dim);
    }
    let d = v.dim;
    let hdim = d + 1;
    // Valid inequalities a·x <= b correspond to vectors (a, -b) in the polar
    // of the homogenization cone generated by (vertex, 1) and (ray, 0).
    let mut rows: Vec<Vec<S>> = Vec::with_capacity(v.vertices.len() + v.rays.len());
    for x in &v.vertices {
        debug_assert_eq!(x.len(), d);
        let mut row = x.clone();
        row.push(S::one());
        rows.push(row);
    }
    for y in &v.rays {
        debug_assert_eq!(y.len(), d);
        let mut row = y.clone();
        row.push(S::zero());
        rows.push(row);
    }
    let gens = cone_generators(hdim, &rows);
    let mut out: Vec<LinearConstraint<S>> = Vec::new();
    for z in gens.rays {
        let coeffs = z[..d].to_vec();
        if coeffs.iter().all(|c| c.is_zero()) {
            continue;
        }
        let bound = -z[d].clone();
        out.push(LinearConstraint::new(coeffs, bound));
    }
    for z in gens.lineality {
        let coeffs: Vec<S> = z[..d].to_vec();
        if coeffs.iter().all(|c| c.is_zero()) {
            continue;
        }
        let bound = -z[d].clone();
        out.push(LinearConstraint::new(
            coeffs.iter().map(|c| -c.clone()).collect(),
            -bound.clone(),
        ));
        out.push(LinearConstraint::new(coeffs, bound));
    }
    HPolytope::from_rows_unchecked(d, out)
}
