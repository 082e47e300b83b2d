//! Shared fixture generators for the integration suites.
#![allow(dead_code)]

use rand::prelude::*;
use rand::rngs::StdRng;

use rcreach_core::polytope::{HPolytope, LinearConstraint, VPolytope};
use rcreach_core::scalar::{int, ratio, Rat};
use rcreach_core::QPolytope;

pub fn row(coeffs: &[Rat], bound: Rat) -> LinearConstraint<Rat> {
    LinearConstraint::new(coeffs.to_vec(), bound)
}

/// Random small rational in halves: k/2 with k in [2*lo, 2*hi].
pub fn rat_half(rng: &mut StdRng, lo: i64, hi: i64) -> Rat {
    ratio(rng.gen_range(2 * lo..=2 * hi), 2)
}

/// A random nonempty bounded polytope (box plus cuts through the center)
/// and a random nonempty proper subset of dimensions to keep.
pub fn random_instance(rng: &mut StdRng) -> (QPolytope, Vec<usize>) {
    let dim = rng.gen_range(2..=5usize);
    let mut rows = Vec::new();
    let mut center: Vec<Rat> = Vec::with_capacity(dim);
    for i in 0..dim {
        let lo = rat_half(rng, -4, 0);
        let hi = lo.clone() + rat_half(rng, 1, 5);
        center.push((lo.clone() + hi.clone()) / int::<Rat>(2));
        let mut l = vec![int::<Rat>(0); dim];
        l[i] = int(-1);
        rows.push(row(&l, -lo));
        let mut h = vec![int::<Rat>(0); dim];
        h[i] = int(1);
        rows.push(row(&h, hi));
    }
    let cuts = rng.gen_range(0..=(12 - 2 * dim).min(6));
    for _ in 0..cuts {
        let mut coeffs: Vec<Rat> = (0..dim).map(|_| int(rng.gen_range(-3..=3i64))).collect();
        if coeffs.iter().all(|c| c == &int::<Rat>(0)) {
            coeffs[0] = int(1);
        }
        let at_center: Rat = coeffs
            .iter()
            .zip(&center)
            .map(|(a, c)| a.clone() * c.clone())
            .sum();
        rows.push(row(&coeffs, at_center + rat_half(rng, 0, 3)));
    }
    let keep_count = rng.gen_range(1..dim);
    let mut dims: Vec<usize> = (0..dim).collect();
    dims.shuffle(rng);
    let mut keep: Vec<usize> = dims[..keep_count].to_vec();
    keep.sort_unstable();
    (HPolytope::from_rows(dim, rows).unwrap(), keep)
}

/// Independent projection oracle: enumerate vertices, drop coordinates,
/// take the hull of the projected points.
pub fn brute_force_projection(p: &QPolytope, keep: &[usize]) -> QPolytope {
    let v = p.to_vrep().expect("instance is nonempty");
    assert!(v.rays.is_empty(), "instances are bounded");
    let pts: Vec<Vec<Rat>> = v
        .vertices
        .iter()
        .map(|vert| keep.iter().map(|&i| vert[i].clone()).collect())
        .collect();
    VPolytope::from_points(keep.len(), pts).to_hrep()
}
