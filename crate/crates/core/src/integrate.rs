//! Adaptive Monte Carlo integration of the joint clock density over the
//! forward-projected region.
//!
//! Classic Vegas importance sampling: each dimension carries a
//! piecewise-constant grid that is refined toward the observed weight after
//! every iteration, damped by `alpha`. The integrand is the joint density
//! times the union indicator over the region members (a point in several
//! members counts once). Sampling positions come from a counter-addressable
//! ChaCha stream keyed by `(seed, iteration, sample index)`, and partial
//! sums combine in fixed chunk order, so results are bit-identical for a
//! fixed seed no matter how many worker threads run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reach::ForwardRegion;
use crate::stochastics::{joint_density, BoundPair, DistributionSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("invalid Vegas configuration: {0}")]
    InvalidConfig(String),
    #[error("sampling interval for dimension {dim} is empty ({lo} >= {hi})")]
    EmptyInterval { dim: usize, lo: f64, hi: f64 },
    #[error("dimension mismatch: region has {region}, got {got} {what}")]
    DimensionMismatch { region: usize, got: usize, what: &'static str },
}

/// Vegas parameters. `samples` is the total budget across all iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VegasConfig {
    pub samples: u64,
    pub iterations: u32,
    pub bins: usize,
    pub seed: u64,
    /// Grid-refinement damping.
    pub alpha: f64,
    /// Leading iterations excluded from the combined estimate.
    pub warmup: u32,
}

impl Default for VegasConfig {
    fn default() -> Self {
        Self { samples: 1_000_000, iterations: 10, bins: 50, seed: 0, alpha: 1.5, warmup: 2 }
    }
}

impl VegasConfig {
    pub fn with_samples_and_seed(samples: u64, seed: u64) -> Self {
        Self { samples, seed, ..Self::default() }
    }

    fn validate(&self) -> Result<(), IntegrateError> {
        if self.bins < 2 {
            return Err(IntegrateError::InvalidConfig(format!(
                "need at least 2 bins per dimension, got {}",
                self.bins
            )));
        }
        if self.iterations == 0 {
            return Err(IntegrateError::InvalidConfig("need at least one iteration".into()));
        }
        if self.samples < self.iterations as u64 * self.bins as u64 {
            return Err(IntegrateError::InvalidConfig(format!(
                "samples ({}) must be at least iterations x bins ({})",
                self.samples,
                self.iterations as u64 * self.bins as u64
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(IntegrateError::InvalidConfig(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Probability estimate with statistical and truncation errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationResult {
    pub p_max: f64,
    pub e_stat: f64,
    /// Truncation error from bounding lifted dimensions at `t_int`;
    /// filled in by the pipeline, zero out of [`vegas_integrate`] itself.
    pub e_inf: f64,
    /// Fraction of all samples that landed inside the region.
    pub in_region_fraction: f64,
    pub iterations: Vec<IterationEstimate>,
    pub samples_used: u64,
}

impl IntegrationResult {
    fn empty() -> Self {
        Self {
            p_max: 0.0,
            e_stat: 0.0,
            e_inf: 0.0,
            in_region_fraction: 0.0,
            iterations: Vec::new(),
            samples_used: 0,
        }
    }
}

/// Region member converted to floats once, bounds rounded outward by one
/// ulp so the float indicator never excludes points of the exact set.
struct FloatMember {
    rows: Vec<(Vec<f64>, f64, bool)>,
}

impl FloatMember {
    fn contains(&self, pt: &[f64]) -> bool {
        self.rows.iter().all(|(coeffs, bound, strict)| {
            let lhs: f64 = coeffs.iter().zip(pt).map(|(a, x)| a * x).sum();
            if *strict {
                lhs < *bound
            } else {
                lhs <= *bound
            }
        })
    }
}

fn float_members(region: &ForwardRegion) -> Vec<FloatMember> {
    use num_traits::ToPrimitive;
    region
        .members
        .iter()
        .map(|m| FloatMember {
            rows: m
                .poly
                .constraints()
                .iter()
                .map(|c| {
                    let coeffs: Vec<f64> =
                        c.coeffs.iter().map(|a| a.to_f64().unwrap_or(f64::NAN)).collect();
                    let bound = c.bound.to_f64().unwrap_or(f64::NAN).next_up();
                    (coeffs, bound, c.strict)
                })
                .collect(),
        })
        .collect()
}

/// One per-dimension importance grid over `[lo, hi]`.
#[derive(Clone)]
struct AxisGrid {
    edges: Vec<f64>,
}

impl AxisGrid {
    fn uniform(lo: f64, hi: f64, bins: usize) -> Self {
        let edges = (0..=bins)
            .map(|i| lo + (hi - lo) * i as f64 / bins as f64)
            .collect();
        Self { edges }
    }

    fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    /// Map a uniform `y` in [0,1) to a bin, a point, and the sampling
    /// weight (bin width times bin count).
    fn map(&self, y: f64) -> (usize, f64, f64) {
        let k = self.bins();
        let scaled = y * k as f64;
        let bin = (scaled as usize).min(k - 1);
        let frac = scaled - bin as f64;
        let lo = self.edges[bin];
        let width = self.edges[bin + 1] - lo;
        (bin, lo + frac * width, width * k as f64)
    }

    /// Rebin so accumulated importance spreads evenly, with smoothing and
    /// `alpha` damping.
    fn refine(&mut self, importance: &[f64], alpha: f64) {
        let k = self.bins();
        debug_assert_eq!(importance.len(), k);
        let total: f64 = importance.iter().sum();
        if total <= 0.0 || k < 2 {
            return;
        }
        let mut smoothed = importance.to_vec();
        if k > 2 {
            smoothed[0] = (7.0 * importance[0] + importance[1]) / 8.0;
            smoothed[k - 1] = (importance[k - 2] + 7.0 * importance[k - 1]) / 8.0;
            for i in 1..k - 1 {
                smoothed[i] =
                    (importance[i - 1] + 6.0 * importance[i] + importance[i + 1]) / 8.0;
            }
        }
        let avg = smoothed.iter().sum::<f64>() / k as f64;
        if avg <= 0.0 {
            return;
        }
        let mut compressed = vec![0.0; k];
        for (c, &s) in compressed.iter_mut().zip(&smoothed) {
            if s > 0.0 {
                let r = s / avg;
                let v = if (r - 1.0).abs() < 1e-12 { 1.0 } else { ((r - 1.0) / r.ln()).powf(alpha) };
                *c = if v.is_finite() { v } else { 1.0 };
            }
        }
        let total_c: f64 = compressed.iter().sum();
        if total_c <= 0.0 {
            return;
        }
        let per_bin = total_c / k as f64;
        let mut new_edges = vec![0.0; k + 1];
        new_edges[0] = self.edges[0];
        new_edges[k] = self.edges[k];
        let mut acc = 0.0;
        let mut old = 0usize;
        for (i, edge) in new_edges.iter_mut().enumerate().take(k).skip(1) {
            let want = i as f64 * per_bin;
            while acc + compressed[old] < want && old + 1 < k {
                acc += compressed[old];
                old += 1;
            }
            let inside = ((want - acc) / compressed[old]).clamp(0.0, 1.0);
            *edge = self.edges[old] + inside * (self.edges[old + 1] - self.edges[old]);
        }
        // Guard against collapsed bins from zero-importance stretches.
        for i in 1..=k {
            if new_edges[i] < new_edges[i - 1] {
                new_edges[i] = new_edges[i - 1];
            }
        }
        self.edges = new_edges;
    }
}

struct ChunkAccum {
    sum: f64,
    sum_sq: f64,
    hits: u64,
    importance: Vec<Vec<f64>>,
}

const CHUNK: u64 = 8192;

/// Estimate `∫ 1_region(s) · G(s) ds` over the per-dimension box by
/// adaptive importance sampling. Deterministic for a fixed seed and
/// configuration, independent of the rayon worker count.
pub fn vegas_integrate(
    region: &ForwardRegion,
    dists: &[DistributionSpec],
    bounds: &[BoundPair],
    cfg: &VegasConfig,
) -> Result<IntegrationResult, IntegrateError> {
    cfg.validate()?;
    let dim = region.dim;
    if dists.len() != dim {
        return Err(IntegrateError::DimensionMismatch {
            region: dim,
            got: dists.len(),
            what: "distributions",
        });
    }
    if bounds.len() != dim {
        return Err(IntegrateError::DimensionMismatch {
            region: dim,
            got: bounds.len(),
            what: "bound pairs",
        });
    }
    if region.members.is_empty() || dim == 0 {
        return Ok(IntegrationResult::empty());
    }
    for (i, b) in bounds.iter().enumerate() {
        if !(b.lo < b.hi) {
            return Err(IntegrateError::EmptyInterval { dim: i, lo: b.lo, hi: b.hi });
        }
    }

    let members = float_members(region);
    let mut grids: Vec<AxisGrid> = bounds
        .iter()
        .map(|b| AxisGrid::uniform(b.lo, b.hi, cfg.bins))
        .collect();

    let per_iter = cfg.samples / cfg.iterations as u64;
    let remainder = cfg.samples - per_iter * cfg.iterations as u64;
    let mut iterations = Vec::with_capacity(cfg.iterations as usize);
    let mut total_hits = 0u64;
    let mut total_samples = 0u64;

    for it in 0..cfg.iterations {
        let n = per_iter + if it + 1 == cfg.iterations { remainder } else { 0 };
        if n == 0 {
            continue;
        }
        let chunks = n.div_ceil(CHUNK);
        let grids_ref = &grids;
        let members_ref = &members;
        let accums: Vec<ChunkAccum> = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let start = chunk * CHUNK;
                let end = (start + CHUNK).min(n);
                let mut acc = ChunkAccum {
                    sum: 0.0,
                    sum_sq: 0.0,
                    hits: 0,
                    importance: vec![vec![0.0; cfg.bins]; dim],
                };
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(it as u64 + 1);
                let mut point = vec![0.0f64; dim];
                let mut bins = vec![0usize; dim];
                for idx in start..end {
                    // Each sample owns a fixed slice of the stream: one u64
                    // (two 32-bit words) per dimension.
                    rng.set_word_pos(idx as u128 * 2 * dim as u128);
                    let mut weight = 1.0f64;
                    for d in 0..dim {
                        let y: f64 = rng.gen();
                        let (bin, x, w) = grids_ref[d].map(y);
                        point[d] = x;
                        bins[d] = bin;
                        weight *= w;
                    }
                    let inside = members_ref.iter().any(|m| m.contains(&point));
                    let fw = if inside {
                        acc.hits += 1;
                        joint_density(dists, &point) * weight
                    } else {
                        0.0
                    };
                    acc.sum += fw;
                    acc.sum_sq += fw * fw;
                    if fw != 0.0 {
                        let sq = fw * fw;
                        for d in 0..dim {
                            acc.importance[d][bins[d]] += sq;
                        }
                    }
                }
                acc
            })
            .collect();

        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut hits = 0u64;
        let mut importance = vec![vec![0.0; cfg.bins]; dim];
        for acc in accums {
            sum += acc.sum;
            sum_sq += acc.sum_sq;
            hits += acc.hits;
            for (tot, part) in importance.iter_mut().zip(&acc.importance) {
                for (t, p) in tot.iter_mut().zip(part) {
                    *t += p;
                }
            }
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var_mean = ((sum_sq / nf - mean * mean) / (nf - 1.0)).max(0.0);
        iterations.push(IterationEstimate {
            value: mean,
            std_error: var_mean.sqrt(),
            samples: n,
        });
        total_hits += hits;
        total_samples += n;
        if it + 1 < cfg.iterations {
            for (grid, imp) in grids.iter_mut().zip(&importance) {
                grid.refine(imp, cfg.alpha);
            }
        }
    }

    let kept: &[IterationEstimate] = if iterations.len() > cfg.warmup as usize {
        &iterations[cfg.warmup as usize..]
    } else {
        &iterations
    };
    let mut wsum = 0.0;
    let mut wvalue = 0.0;
    for est in kept {
        let var = (est.std_error * est.std_error).max(f64::MIN_POSITIVE);
        wsum += 1.0 / var;
        wvalue += est.value / var;
    }
    let estimate = if wsum > 0.0 { wvalue / wsum } else { 0.0 };
    let e_stat = if wsum > 0.0 { (1.0 / wsum).sqrt() } else { 0.0 };
    Ok(IntegrationResult {
        p_max: estimate.clamp(0.0, 1.0),
        e_stat,
        e_inf: 0.0,
        in_region_fraction: total_hits as f64 / total_samples.max(1) as f64,
        iterations,
        samples_used: total_samples,
    })
}

/// Truncation error from cutting lifted dimensions at `t_int`:
/// `1 - ∏ mass([0, t_int])` over the lifted dimensions (unlifted
/// dimensions contribute factor 1). An overapproximation: dependencies
/// between the random variables are ignored.
pub fn truncation_error(dists: &[DistributionSpec], lifted: &[bool], t_int: f64) -> f64 {
    debug_assert_eq!(dists.len(), lifted.len());
    let mut product = 1.0f64;
    for (d, &l) in dists.iter().zip(lifted) {
        if l {
            product *= d.interval_mass(0.0, t_int);
        }
    }
    1.0 - product
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::LinearConstraint;
    use crate::reach::{ForwardRegion, RegionMember};
    use crate::scalar::int;
    use crate::QPolytope;

    fn unit_box_region(members: Vec<QPolytope>) -> ForwardRegion {
        let dim = members[0].dim();
        ForwardRegion {
            dim,
            members: members.into_iter().map(|poly| RegionMember { node: 0, poly }).collect(),
            lifted: vec![false; dim],
        }
    }

    fn triangle() -> QPolytope {
        QPolytope::from_rows(
            2,
            vec![
                LinearConstraint::new(vec![int(1), int(1)], int(1)),
                LinearConstraint::new(vec![int(-1), int(0)], int(0)),
                LinearConstraint::new(vec![int(0), int(-1)], int(0)),
            ],
        )
        .unwrap()
    }

    fn uniform01() -> DistributionSpec {
        DistributionSpec::Uniform { a: 0.0, b: 1.0 }
    }

    fn unit_bounds(dim: usize) -> Vec<BoundPair> {
        vec![BoundPair { lo: 0.0, hi: 1.0 }; dim]
    }

    #[test]
    fn triangle_integral_is_half() {
        let region = unit_box_region(vec![triangle()]);
        let cfg = VegasConfig::with_samples_and_seed(200_000, 0);
        let r = vegas_integrate(&region, &[uniform01(), uniform01()], &unit_bounds(2), &cfg)
            .unwrap();
        assert!((r.p_max - 0.5).abs() <= 3.0 * r.e_stat, "p={} e={}", r.p_max, r.e_stat);
        assert!(r.e_stat < 0.01);
    }

    #[test]
    fn full_box_with_exponentials_is_one() {
        let hi = 37.43;
        let full = QPolytope::from_box(&[
            (Some(int(0)), Some(crate::scalar::ratio(3743, 100))),
            (Some(int(0)), Some(crate::scalar::ratio(3743, 100))),
        ]);
        let region = unit_box_region(vec![full]);
        let d = DistributionSpec::Exponential { lambda: 1.0 };
        let cfg = VegasConfig::with_samples_and_seed(100_000, 0);
        let r = vegas_integrate(
            &region,
            &[d.clone(), d],
            &[BoundPair { lo: 0.0, hi }, BoundPair { lo: 0.0, hi }],
            &cfg,
        )
        .unwrap();
        assert!((r.p_max - 1.0).abs() <= 3.0 * r.e_stat.max(1e-6), "p={}", r.p_max);
    }

    #[test]
    fn empty_region_is_zero() {
        let region = ForwardRegion { dim: 2, members: vec![], lifted: vec![false, false] };
        let cfg = VegasConfig::default();
        let r = vegas_integrate(
            &region,
            &[uniform01(), uniform01()],
            &unit_bounds(2),
            &cfg,
        )
        .unwrap();
        assert_eq!(r.p_max, 0.0);
        assert_eq!(r.e_stat, 0.0);
    }

    #[test]
    fn duplicated_member_counts_once() {
        let cfg = VegasConfig::with_samples_and_seed(50_000, 7);
        let single = unit_box_region(vec![triangle()]);
        let double = unit_box_region(vec![triangle(), triangle()]);
        let dists = [uniform01(), uniform01()];
        let a = vegas_integrate(&single, &dists, &unit_bounds(2), &cfg).unwrap();
        let b = vegas_integrate(&double, &dists, &unit_bounds(2), &cfg).unwrap();
        assert_eq!(a.p_max.to_bits(), b.p_max.to_bits());
        assert_eq!(a.e_stat.to_bits(), b.e_stat.to_bits());
    }

    #[test]
    fn seed_determinism_across_worker_counts() {
        let region = unit_box_region(vec![triangle()]);
        let dists = [uniform01(), uniform01()];
        let cfg = VegasConfig::with_samples_and_seed(60_000, 42);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| vegas_integrate(&region, &dists, &unit_bounds(2), &cfg).unwrap())
        };
        let one = run(1);
        let eight = run(8);
        assert_eq!(one.p_max.to_bits(), eight.p_max.to_bits());
        assert_eq!(one.e_stat.to_bits(), eight.e_stat.to_bits());
        assert_eq!(one.iterations.len(), eight.iterations.len());
        for (a, b) in one.iterations.iter().zip(&eight.iterations) {
            assert_eq!(a.value.to_bits(), b.value.to_bits());
            assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        }
    }

    #[test]
    fn quadrupling_samples_roughly_halves_error() {
        let region = unit_box_region(vec![triangle()]);
        let dists = [uniform01(), uniform01()];
        let small = vegas_integrate(
            &region,
            &dists,
            &unit_bounds(2),
            &VegasConfig::with_samples_and_seed(100_000, 3),
        )
        .unwrap();
        let large = vegas_integrate(
            &region,
            &dists,
            &unit_bounds(2),
            &VegasConfig::with_samples_and_seed(400_000, 3),
        )
        .unwrap();
        let ratio = small.e_stat / large.e_stat;
        assert!((1.6..=2.6).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn truncation_error_cases() {
        let exp1 = DistributionSpec::Exponential { lambda: 1.0 };
        assert_eq!(truncation_error(&[exp1.clone()], &[false], 2.0), 0.0);
        let e = truncation_error(&[exp1.clone()], &[true], 2.0);
        assert!((e - (-2.0f64).exp()).abs() < 1e-12);
        let tiny = truncation_error(&[exp1], &[true], 37.43);
        assert!(tiny < 1e-15);
    }

    #[test]
    fn config_validation() {
        let region = unit_box_region(vec![triangle()]);
        let dists = [uniform01(), uniform01()];
        let bad = VegasConfig { samples: 100, iterations: 10, bins: 50, ..Default::default() };
        assert!(matches!(
            vegas_integrate(&region, &dists, &unit_bounds(2), &bad),
            Err(IntegrateError::InvalidConfig(_))
        ));
        let cfg = VegasConfig::default();
        assert!(matches!(
            vegas_integrate(
                &region,
                &dists,
                &[BoundPair { lo: 0.5, hi: 0.5 }, BoundPair { lo: 0.0, hi: 1.0 }],
                &cfg
            ),
            Err(IntegrateError::EmptyInterval { dim: 0, .. })
        ));
    }
}
