//! End-to-end analysis: unroll, build reach trees, project goal sets onto
//! the sample space, tighten integration bounds, integrate.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{unroll, Rac, UnrolledRac, Violation};
use crate::elimination::{EliminationMode, EliminationStats};
use crate::integrate::{
    truncation_error, vegas_integrate, IntegrateError, IntegrationResult, IterationEstimate,
    VegasConfig,
};
use crate::model::{render_violations, AnalysisSettings};
use crate::reach::{
    assemble_forward_region, build_reach_tree, ForwardRegion, GoalSpec, ReachError, ReachTree,
};
use crate::scalar::Rat;
use crate::stochastics::{BoundPair, StochError, DEFAULT_TAU};
use num_traits::{Signed, ToPrimitive};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("model validation failed:\n{}", render_violations(.0))]
    InvalidModel(Vec<Violation>),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Stochastics(#[from] StochError),
}

/// Resolved analysis parameters.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub tmax: Rat,
    pub jumps: u32,
    pub t_int: Rat,
    pub samples: u64,
    pub seed: u64,
    pub fm_mode: EliminationMode,
    pub adapt_bounds: bool,
    /// Discarded-tail threshold for bound tightening.
    pub tau: f64,
    pub vegas: VegasConfig,
}

impl AnalysisConfig {
    pub fn new(tmax: Rat, jumps: u32) -> Self {
        let samples = 1_000_000;
        let seed = 0;
        Self {
            tmax,
            jumps,
            t_int: Rat::from_integer(100.into()),
            samples,
            seed,
            fm_mode: EliminationMode::FmPlus,
            adapt_bounds: true,
            tau: DEFAULT_TAU,
            vegas: VegasConfig::with_samples_and_seed(samples, seed),
        }
    }

    /// Resolve file settings (with defaults) into a configuration.
    pub fn from_settings(s: &AnalysisSettings) -> Result<Self, PipelineError> {
        let tmax = s
            .tmax
            .clone()
            .ok_or_else(|| PipelineError::Config("missing tmax (analysis.tmax or --tmax)".into()))?;
        let jumps = s
            .jumps
            .ok_or_else(|| PipelineError::Config("missing jump bound (analysis.jumps or --jumps)".into()))?;
        let mut cfg = Self::new(tmax, jumps);
        if let Some(t) = &s.tint {
            cfg.t_int = t.clone();
        }
        if let Some(n) = s.samples {
            cfg.samples = n;
        }
        if let Some(seed) = s.seed {
            cfg.seed = seed;
        }
        if let Some(mode) = s.fm_mode {
            cfg.fm_mode = mode;
        }
        if let Some(adapt) = s.adapt_bounds {
            cfg.adapt_bounds = adapt;
        }
        cfg.vegas = VegasConfig::with_samples_and_seed(cfg.samples, cfg.seed);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.tmax.is_negative() {
            return Err(PipelineError::Config(format!("tmax must be nonnegative, got {}", self.tmax)));
        }
        if self.t_int < self.tmax {
            return Err(PipelineError::Config(format!(
                "tint ({}) must be at least tmax ({})",
                self.t_int, self.tmax
            )));
        }
        if !self.t_int.is_positive() {
            return Err(PipelineError::Config("tint must be positive".into()));
        }
        if self.samples < 1000 {
            return Err(PipelineError::Config(format!(
                "at least 1000 samples required, got {}",
                self.samples
            )));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(PipelineError::Config(format!("tau must lie in (0,1), got {}", self.tau)));
        }
        Ok(())
    }

    pub fn t_int_f64(&self) -> f64 {
        self.t_int.to_f64().expect("t_int fits f64")
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub unroll_s: f64,
    pub reach_s: f64,
    pub project_s: f64,
    pub bounds_s: f64,
    pub integrate_s: f64,
    pub total_s: f64,
}

/// Per-dimension integration bounds as reported.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsRow {
    pub dim: String,
    pub distribution: String,
    pub unadapted: BoundPair,
    /// Tightened interval; equals `unadapted` when adaptation is off or the
    /// support collapses inside `[0, t_int]`.
    pub adapted: BoundPair,
    /// What the sampler actually used: adapted bounds clipped to the
    /// forward region's bounding box.
    pub sampling: Option<BoundPair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Full analysis report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub p_max: f64,
    pub e_stat: f64,
    pub e_inf: f64,
    pub nodes: usize,
    pub goal_nodes: Vec<usize>,
    pub region_members: usize,
    pub in_region_fraction: f64,
    pub samples_used: u64,
    pub iterations: Vec<IterationEstimate>,
    pub elimination: EliminationStats,
    pub bounds: Vec<BoundsRow>,
    pub times: PhaseTimes,
    pub warnings: Vec<String>,
}

/// Reach forest plus bookkeeping shared by the analyze and tree commands.
pub struct ForestResult {
    pub unrolled: UnrolledRac,
    pub trees: Vec<ReachTree>,
    pub stats: EliminationStats,
    pub warnings: Vec<String>,
}

impl ForestResult {
    pub fn total_nodes(&self) -> usize {
        self.trees.iter().map(|t| t.nodes.len()).sum()
    }

    /// Global index base of each tree (trees are concatenated in root order).
    pub fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.trees.len());
        let mut acc = 0;
        for t in &self.trees {
            offsets.push(acc);
            acc += t.nodes.len();
        }
        offsets
    }
}

fn validated(model: &Rac) -> Result<Vec<String>, PipelineError> {
    let violations = model.validate();
    if Rac::has_errors(&violations) {
        return Err(PipelineError::InvalidModel(violations));
    }
    Ok(violations.iter().map(|v| v.to_string()).collect())
}

/// Unroll and build one reach tree per location with initial states.
pub fn build_forest(model: &Rac, cfg: &AnalysisConfig) -> Result<ForestResult, PipelineError> {
    let mut warnings = validated(model)?;
    let unrolled = unroll(model, cfg.jumps);
    let mut trees = Vec::new();
    let mut stats = EliminationStats::default();
    for (orig, _) in unrolled.roots.clone() {
        let name = model.locations[orig].name.clone();
        let tree = build_reach_tree(&unrolled, &name, &cfg.tmax, cfg.jumps, cfg.fm_mode)?;
        stats.merge(&tree.stats);
        warnings.extend(tree.warnings.iter().cloned());
        trees.push(tree);
    }
    if trees.is_empty() {
        return Err(PipelineError::Config("model has no initial location".into()));
    }
    Ok(ForestResult { unrolled, trees, stats, warnings })
}

/// Goal nodes across the forest, in global numbering.
pub fn forest_goal_indices(forest: &ForestResult, goal: &GoalSpec) -> Vec<usize> {
    let offsets = forest.offsets();
    let mut out = Vec::new();
    for (tree, &offset) in forest.trees.iter().zip(&offsets) {
        for (i, _) in crate::reach::goal_nodes(tree, &forest.unrolled, goal) {
            out.push(offset + i);
        }
    }
    out
}

/// Union of the per-tree forward regions, members renumbered globally.
fn forest_region(
    forest: &ForestResult,
    goal: &GoalSpec,
    t_int: &Rat,
    mode: EliminationMode,
) -> (ForwardRegion, EliminationStats) {
    let u = &forest.unrolled;
    let offsets = forest.offsets();
    let mut members = Vec::new();
    let mut lifted = vec![false; u.d_r_u()];
    let mut stats = EliminationStats::default();
    for (tree, &offset) in forest.trees.iter().zip(&offsets) {
        let (region, s) = assemble_forward_region(tree, u, goal, t_int, mode);
        stats.merge(&s);
        for mut m in region.members {
            m.node += offset;
            members.push(m);
        }
        for (acc, l) in lifted.iter_mut().zip(&region.lifted) {
            *acc |= l;
        }
    }
    (ForwardRegion { dim: u.d_r_u(), members, lifted }, stats)
}

/// Per-dimension bound table (no reach information): unadapted `[0, t_int]`
/// and the tightened interval per clock copy.
pub fn adapted_bounds(u: &UnrolledRac, cfg: &AnalysisConfig) -> Vec<BoundsRow> {
    let t_int = cfg.t_int_f64();
    (0..u.d_r_u())
        .map(|k| {
            let dist = u.copy_dist(k);
            let unadapted = BoundPair { lo: 0.0, hi: t_int };
            let (adapted, note) = if cfg.adapt_bounds {
                match dist.tighten_bounds(t_int, cfg.tau) {
                    Ok(b) => (b, None),
                    Err(e) => (unadapted, Some(e.to_string())),
                }
            } else {
                (unadapted, None)
            };
            BoundsRow {
                dim: u.copy_name(k),
                distribution: dist.describe(),
                unadapted,
                adapted,
                sampling: None,
                note,
            }
        })
        .collect()
}

/// The full forward pipeline: reach forest, goal projection, bound
/// tightening, Vegas integration, truncation error.
pub fn estimate_pipeline(
    model: &Rac,
    goal: &GoalSpec,
    cfg: &AnalysisConfig,
) -> Result<RunReport, PipelineError> {
    cfg.validate()?;
    let t0 = Instant::now();
    let forest = build_forest(model, cfg)?;
    let u = &forest.unrolled;
    let reach_done = Instant::now();

    let goal_nodes = forest_goal_indices(&forest, goal);
    let (region, project_stats) = forest_region(&forest, goal, &cfg.t_int, cfg.fm_mode);
    let mut stats = forest.stats;
    stats.merge(&project_stats);
    let mut warnings = forest.warnings.clone();
    let project_done = Instant::now();

    let t_int = cfg.t_int_f64();
    let dists: Vec<_> = (0..u.d_r_u()).map(|k| u.copy_dist(k).clone()).collect();
    let mut bounds = adapted_bounds(u, cfg);
    // Clip each dimension to the region's bounding range: outside it the
    // indicator is identically zero, so sampling there is pure waste.
    let mut sampling: Vec<BoundPair> = Vec::with_capacity(region.dim);
    let mut degenerate_sampling = false;
    if !region.members.is_empty() {
        let mut lo = vec![f64::INFINITY; region.dim];
        let mut hi = vec![f64::NEG_INFINITY; region.dim];
        for m in &region.members {
            let bb = m.poly.bounding_box().expect("region members are nonempty");
            for (k, (l, h)) in bb.intervals.iter().enumerate() {
                let l = l.as_ref().and_then(|v| v.to_f64()).unwrap_or(0.0);
                let h = h.as_ref().and_then(|v| v.to_f64()).unwrap_or(t_int);
                lo[k] = lo[k].min(l);
                hi[k] = hi[k].max(h);
            }
        }
        for (k, row) in bounds.iter_mut().enumerate() {
            let s = BoundPair {
                lo: row.adapted.lo.max(lo[k]).max(0.0),
                hi: row.adapted.hi.min(hi[k]).min(t_int),
            };
            if !(s.lo < s.hi) {
                degenerate_sampling = true;
                warnings.push(format!(
                    "dimension {}: region mass lies outside the adapted bounds; \
                     the estimate is 0 up to the discarded tails",
                    row.dim
                ));
            }
            row.sampling = Some(s);
            sampling.push(s);
        }
    }
    let bounds_done = Instant::now();

    let mut result = if region.members.is_empty() || degenerate_sampling {
        IntegrationResult {
            p_max: 0.0,
            e_stat: 0.0,
            e_inf: 0.0,
            in_region_fraction: 0.0,
            iterations: Vec::new(),
            samples_used: 0,
        }
    } else {
        vegas_integrate(&region, &dists, &sampling, &cfg.vegas)?
    };
    result.e_inf = truncation_error(&dists, &region.lifted, t_int);
    let integrate_done = Instant::now();

    Ok(RunReport {
        p_max: result.p_max,
        e_stat: result.e_stat,
        e_inf: result.e_inf,
        nodes: forest.total_nodes(),
        goal_nodes,
        region_members: region.members.len(),
        in_region_fraction: result.in_region_fraction,
        samples_used: result.samples_used,
        iterations: result.iterations,
        elimination: stats,
        bounds,
        times: PhaseTimes {
            unroll_s: 0.0,
            reach_s: reach_done.duration_since(t0).as_secs_f64(),
            project_s: project_done.duration_since(reach_done).as_secs_f64(),
            bounds_s: bounds_done.duration_since(project_done).as_secs_f64(),
            integrate_s: integrate_done.duration_since(bounds_done).as_secs_f64(),
            total_s: integrate_done.duration_since(t0).as_secs_f64(),
        },
        warnings,
    })
}
