//! Forward reachability on unrolled automata.
//!
//! Symbolic states pair a tree location with an exact polytope over the
//! continuous variables, the global timer, and the per-copy stopwatches.
//! Time and jump successors are computed by adjoining primed dimensions and
//! projecting with quantifier elimination; the reach tree closes every node
//! under time elapse and is bounded by the time horizon and the jump depth
//! of the unrolling.
//!
//! The forward phase deliberately tracks no expiration samples: a stochastic
//! jump simply freezes its stopwatch (the frozen value *is* the sample), and
//! for clocks that have not expired the demand `sample ≥ stopwatch` is
//! reintroduced when a goal set is projected onto the stochastic dimensions.

use rayon::prelude::*;
use thiserror::Error;

use crate::automaton::{Reset, UnrolledRac};
use crate::elimination::{self, EliminationMode, EliminationStats};
use crate::polytope::{GeometryError, HPolytope, LinearConstraint};
use crate::scalar::Rat;
use crate::{QConstraint, QPolytope};

#[derive(Debug, Error)]
pub enum ReachError {
    #[error("location `{0}` not found")]
    UnknownLocation(String),
    #[error("location `{0}` has no initial states")]
    NoInitialStates(String),
    #[error("jump bound {requested} does not match the unrolling depth {unrolled}")]
    JumpBoundMismatch { requested: u32, unrolled: u32 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A tree location together with the reachable valuations there.
#[derive(Debug, Clone)]
pub struct SymbolicState {
    /// Index into the unrolled location tree.
    pub loc: usize,
    pub poly: QPolytope,
}

#[derive(Debug, Clone)]
pub struct ReachNode {
    pub state: SymbolicState,
    pub depth: usize,
    /// `(parent node, unrolled jump)` for non-roots.
    pub parent: Option<(usize, usize)>,
    /// Per clock copy: whether its stochastic jump was taken on the path here.
    pub expired: Vec<bool>,
}

/// Bounded forward reach tree. Node indices are assigned in breadth-first
/// order, so parents always precede children.
#[derive(Debug, Clone)]
pub struct ReachTree {
    pub nodes: Vec<ReachNode>,
    /// `(parent, unrolled jump, child)`.
    pub edges: Vec<(usize, usize, usize)>,
    pub root: usize,
    pub stats: EliminationStats,
    pub warnings: Vec<String>,
}

/// Goal states: a set of original location names and a polyhedral valuation
/// constraint over the continuous variables (unconstrained on timer,
/// stopwatch and sample dimensions).
#[derive(Debug, Clone)]
pub struct GoalSpec {
    pub locations: Vec<String>,
    pub constraints: Vec<QConstraint>,
}

#[derive(Debug, Clone)]
pub struct RegionMember {
    /// Reach-tree node this member was projected from.
    pub node: usize,
    pub poly: QPolytope,
}

/// Union of goal-node projections onto the sample dimensions; membership is
/// membership in any member.
#[derive(Debug, Clone)]
pub struct ForwardRegion {
    pub dim: usize,
    pub members: Vec<RegionMember>,
    /// Per sample dimension: lifted in at least one goal node (did not
    /// expire there), hence truncated at `t_int`.
    pub lifted: Vec<bool>,
}

fn interval_rows(
    lo: &Option<Rat>,
    hi: &Option<Rat>,
    dim: usize,
    at: usize,
    rows: &mut Vec<QConstraint>,
) {
    if let Some(lo) = lo {
        let mut c = vec![Rat::from_integer(0.into()); dim];
        c[at] = -Rat::from_integer(1.into());
        rows.push(LinearConstraint::new(c, -lo.clone()));
    }
    if let Some(hi) = hi {
        let mut c = vec![Rat::from_integer(0.into()); dim];
        c[at] = Rat::from_integer(1.into());
        rows.push(LinearConstraint::new(c, hi.clone()));
    }
}

fn rat(i: i64) -> Rat {
    Rat::from_integer(i.into())
}

/// Close a symbolic state under time elapse, bounded by `tmax` on the
/// global timer. The input is contained in the result (time 0).
pub fn time_successor(
    s: &SymbolicState,
    u: &UnrolledRac,
    tmax: &Rat,
    mode: EliminationMode,
) -> (SymbolicState, EliminationStats) {
    let d = u.dim();
    debug_assert_eq!(s.poly.dim(), d);
    let ext = 2 * d + 1; // x, x', t
    let t = 2 * d;
    let loc = &u.locs[s.loc];
    let orig = &u.model.locations[loc.orig];
    let mut rows: Vec<QConstraint> = Vec::new();

    let identity: Vec<usize> = (0..d).collect();
    rows.extend(s.poly.embed(ext, &identity).constraints().to_vec());

    // Rate relation per continuous variable: a·t <= x' - x <= b·t.
    for (v, flow) in orig.flow.iter().enumerate() {
        if let Some(b) = &flow.hi {
            let mut c = vec![rat(0); ext];
            c[d + v] = rat(1);
            c[v] = rat(-1);
            c[t] = -b.clone();
            rows.push(LinearConstraint::new(c, rat(0)));
        }
        if let Some(a) = &flow.lo {
            let mut c = vec![rat(0); ext];
            c[v] = rat(1);
            c[d + v] = rat(-1);
            c[t] = a.clone();
            rows.push(LinearConstraint::new(c, rat(0)));
        }
    }
    // Global timer: T' = T + t, capped at tmax.
    let timer = u.timer_dim();
    for sign in [1i64, -1] {
        let mut c = vec![rat(0); ext];
        c[d + timer] = rat(sign);
        c[timer] = rat(-sign);
        c[t] = rat(-sign);
        rows.push(LinearConstraint::new(c, rat(0)));
    }
    {
        let mut c = vec![rat(0); ext];
        c[d + timer] = rat(1);
        rows.push(LinearConstraint::new(c, tmax.clone()));
    }
    // Stopwatches advance with slope 0 or 1.
    let slopes = u.stopwatch_slopes(s.loc);
    for (k, active) in slopes.iter().enumerate() {
        let sw = u.stopwatch_dim(k);
        for sign in [1i64, -1] {
            let mut c = vec![rat(0); ext];
            c[d + sw] = rat(sign);
            c[sw] = rat(-sign);
            if *active {
                c[t] = rat(-sign);
            }
            rows.push(LinearConstraint::new(c, rat(0)));
        }
    }
    // Primed valuation stays in the invariant; time is nonnegative.
    for (v, iv) in orig.invariant.iter().enumerate() {
        interval_rows(&iv.lo, &iv.hi, ext, d + v, &mut rows);
    }
    {
        let mut c = vec![rat(0); ext];
        c[t] = rat(-1);
        rows.push(LinearConstraint::new(c, rat(0)));
    }

    let system = HPolytope::from_rows_unchecked(ext, rows);
    let keep: Vec<usize> = (d..2 * d).collect();
    let (projected, stats) = elimination::project_onto(&system, &keep, mode);
    (SymbolicState { loc: s.loc, poly: projected.remove_redundant() }, stats)
}

/// Take one unrolled jump: guard intersection, interval resets (projection
/// plus re-adjoined bounds), identity elsewhere, target invariant. The
/// timer and all stopwatches pass through unchanged; a stochastic jump
/// leaves its consumed copy frozen at the jump time.
pub fn jump_successor(
    s: &SymbolicState,
    ujump: usize,
    u: &UnrolledRac,
    mode: EliminationMode,
) -> Result<(SymbolicState, EliminationStats), ReachError> {
    let jump = &u.jumps[ujump];
    if jump.source != s.loc {
        return Err(ReachError::UnknownLocation(format!(
            "jump #{ujump} does not leave tree location {}",
            s.loc
        )));
    }
    let d = u.dim();
    let orig = &u.model.jumps[jump.orig];
    let target = &u.model.locations[u.locs[jump.target].orig];
    let mut rows: Vec<QConstraint> = s.poly.constraints().to_vec();
    for (v, g) in orig.guard.iter().enumerate() {
        interval_rows(&g.lo, &g.hi, d, v, &mut rows);
    }
    let guarded = HPolytope::from_rows_unchecked(d, rows);

    let reset_dims: Vec<usize> = orig
        .reset
        .iter()
        .enumerate()
        .filter_map(|(v, r)| matches!(r, Reset::To(_)).then_some(v))
        .collect();
    let (mut result, stats) = if reset_dims.is_empty() {
        (guarded, EliminationStats::default())
    } else {
        elimination::forget_dims(&guarded, &reset_dims, mode)
    };
    let mut extra: Vec<QConstraint> = Vec::new();
    for (v, r) in orig.reset.iter().enumerate() {
        if let Reset::To(iv) = r {
            interval_rows(&iv.lo, &iv.hi, d, v, &mut extra);
        }
    }
    for (v, iv) in target.invariant.iter().enumerate() {
        interval_rows(&iv.lo, &iv.hi, d, v, &mut extra);
    }
    result = result.with_rows(extra)?;
    Ok((SymbolicState { loc: jump.target, poly: result }, stats))
}

/// Build the bounded reach tree from `init_loc`: the root is the time
/// closure of the initial set (timer and stopwatches at zero), children are
/// time-closed jump successors, empty successors are pruned, and nodes at
/// the jump bound are leaves. Indices are breadth-first and deterministic.
pub fn build_reach_tree(
    u: &UnrolledRac,
    init_loc: &str,
    tmax: &Rat,
    jmp: u32,
    mode: EliminationMode,
) -> Result<ReachTree, ReachError> {
    if jmp != u.jmp {
        return Err(ReachError::JumpBoundMismatch { requested: jmp, unrolled: u.jmp });
    }
    let orig = u
        .model
        .location_index(init_loc)
        .ok_or_else(|| ReachError::UnknownLocation(init_loc.into()))?;
    let root_unode = u
        .root_for(orig)
        .ok_or_else(|| ReachError::NoInitialStates(init_loc.into()))?;
    let init_rect = u.model.locations[orig]
        .init
        .as_ref()
        .ok_or_else(|| ReachError::NoInitialStates(init_loc.into()))?;

    let d = u.dim();
    let mut rows: Vec<QConstraint> = Vec::new();
    for (v, iv) in init_rect.iter().enumerate() {
        interval_rows(&iv.lo, &iv.hi, d, v, &mut rows);
    }
    let zero = Some(rat(0));
    interval_rows(&zero, &zero, d, u.timer_dim(), &mut rows);
    for k in 0..u.d_r_u() {
        interval_rows(&zero, &zero, d, u.stopwatch_dim(k), &mut rows);
    }
    let init_poly = HPolytope::from_rows_unchecked(d, rows);

    let mut stats = EliminationStats::default();
    let (root_state, s0) = time_successor(
        &SymbolicState { loc: root_unode, poly: init_poly },
        u,
        tmax,
        mode,
    );
    stats.merge(&s0);

    let mut nodes = vec![ReachNode {
        state: root_state,
        depth: 0,
        parent: None,
        expired: vec![false; u.d_r_u()],
    }];
    let mut edges = Vec::new();
    let mut warnings = Vec::new();
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        // All (node, jump) tasks of this level, expanded in index order;
        // sibling successor computations are pure and run in parallel.
        let tasks: Vec<(usize, usize)> = frontier
            .iter()
            .flat_map(|&n| {
                u.outgoing(nodes[n].state.loc)
                    .map(move |j| (n, j))
                    .collect::<Vec<_>>()
            })
            .collect();
        let results: Vec<(usize, usize, SymbolicState, EliminationStats)> = tasks
            .par_iter()
            .map(|&(n, j)| {
                let (jumped, s1) =
                    jump_successor(&nodes[n].state, j, u, mode).expect("jump leaves node location");
                let (closed, s2) = time_successor(&jumped, u, tmax, mode);
                let mut s = s1;
                s.merge(&s2);
                (n, j, closed, s)
            })
            .collect();
        let mut next = Vec::new();
        let mut expanded: Vec<bool> = vec![false; frontier.len()];
        for (n, j, state, s) in results {
            stats.merge(&s);
            if state.poly.is_empty() {
                continue;
            }
            let child = nodes.len();
            let mut expired = nodes[n].expired.clone();
            if let Some(copy) = u.jumps[j].event {
                expired[u.copy_index(copy)] = true;
            }
            let depth = nodes[n].depth + 1;
            nodes.push(ReachNode { state, depth, parent: Some((n, j)), expired });
            edges.push((n, j, child));
            expanded[frontier.iter().position(|&f| f == n).unwrap()] = true;
            if (depth as u32) < jmp {
                next.push(child);
            }
        }
        for (&n, had_child) in frontier.iter().zip(&expanded) {
            if !had_child && (nodes[n].depth as u32) < jmp {
                warnings.push(format!(
                    "node {} (`{}`) has no nonempty jump successor below the jump bound",
                    n, u.locs[nodes[n].state.loc].path
                ));
            }
        }
        frontier = next;
    }
    Ok(ReachTree { nodes, edges, root: 0, stats, warnings })
}

/// Nodes whose original location is a goal location, each intersected with
/// the goal valuation constraint (cylindrified over timer, stopwatches and
/// samples); empty intersections are dropped.
pub fn goal_nodes(
    tree: &ReachTree,
    u: &UnrolledRac,
    goal: &GoalSpec,
) -> Vec<(usize, SymbolicState)> {
    let d = u.dim();
    let var_map: Vec<usize> = (0..u.d_c()).collect();
    let goal_poly = HPolytope::from_rows_unchecked(u.d_c(), goal.constraints.clone())
        .embed(d, &var_map);
    let mut out = Vec::new();
    for (i, node) in tree.nodes.iter().enumerate() {
        let name = &u.model.locations[u.locs[node.state.loc].orig].name;
        if !goal.locations.iter().any(|g| g == name) {
            continue;
        }
        let cut = node
            .state
            .poly
            .intersect(&goal_poly)
            .expect("goal constraint dimension");
        if cut.is_empty() {
            continue;
        }
        out.push((i, SymbolicState { loc: node.state.loc, poly: cut }));
    }
    out
}

/// Project a goal-intersected state set onto the sample space.
///
/// An expired copy's frozen stopwatch *is* its sample; an unexpired copy
/// gets a fresh sample dimension at least as large as its stopwatch,
/// truncated at `t_int`. Everything else is eliminated and the result is
/// clamped into `[0, t_int]` per dimension.
pub fn project_and_lift(
    goal_poly: &QPolytope,
    expired: &[bool],
    t_int: &Rat,
    mode: EliminationMode,
) -> (QPolytope, EliminationStats) {
    let copies = expired.len();
    let d = goal_poly.dim();
    let prefix = d - copies; // variables + timer
    let ext = d + copies;
    let identity: Vec<usize> = (0..d).collect();
    let mut rows = goal_poly.embed(ext, &identity).constraints().to_vec();
    for (k, &exp) in expired.iter().enumerate() {
        let sw = prefix + k;
        let sample = d + k;
        if exp {
            for sign in [1i64, -1] {
                let mut c = vec![rat(0); ext];
                c[sample] = rat(sign);
                c[sw] = rat(-sign);
                rows.push(LinearConstraint::new(c, rat(0)));
            }
        } else {
            let mut c = vec![rat(0); ext];
            c[sw] = rat(1);
            c[sample] = rat(-1);
            rows.push(LinearConstraint::new(c, rat(0)));
            let mut c = vec![rat(0); ext];
            c[sample] = rat(1);
            rows.push(LinearConstraint::new(c, t_int.clone()));
        }
    }
    let system = HPolytope::from_rows_unchecked(ext, rows);
    let keep: Vec<usize> = (d..ext).collect();
    let (mut projected, stats) = elimination::project_onto(&system, &keep, mode);
    let mut clamp: Vec<QConstraint> = Vec::new();
    for k in 0..copies {
        interval_rows(&Some(rat(0)), &Some(t_int.clone()), copies, k, &mut clamp);
    }
    projected = projected
        .with_rows(clamp)
        .expect("clamp rows dimension")
        .remove_redundant();
    (projected, stats)
}

/// Union of the lifted projections of all goal nodes, plus the per-dimension
/// record of which sample dimensions were lifted somewhere.
pub fn assemble_forward_region(
    tree: &ReachTree,
    u: &UnrolledRac,
    goal: &GoalSpec,
    t_int: &Rat,
    mode: EliminationMode,
) -> (ForwardRegion, EliminationStats) {
    let copies = u.d_r_u();
    let goals = goal_nodes(tree, u, goal);
    let mut stats = EliminationStats::default();
    let mut members = Vec::new();
    let mut lifted = vec![false; copies];
    let projected: Vec<(usize, QPolytope, EliminationStats)> = goals
        .par_iter()
        .map(|(i, state)| {
            let (poly, s) = project_and_lift(&state.poly, &tree.nodes[*i].expired, t_int, mode);
            (*i, poly, s)
        })
        .collect();
    for (i, poly, s) in projected {
        stats.merge(&s);
        if poly.is_empty() {
            continue;
        }
        for (k, flag) in lifted.iter_mut().enumerate() {
            *flag |= !tree.nodes[i].expired[k];
        }
        members.push(RegionMember { node: i, poly });
    }
    (ForwardRegion { dim: copies, members, lifted }, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{unroll, Clock, Interval, JumpDef, Location, Rac, Reset};
    use crate::elimination::EliminationMode;
    use crate::scalar::{int, ratio};
    use crate::stochastics::DistributionSpec;

    fn iv(lo: i64, hi: i64) -> Interval {
        Interval::new(Some(int(lo)), Some(int(hi)))
    }

    fn exp_clock(name: &str, lambda: f64) -> Clock {
        Clock { name: name.into(), dist: DistributionSpec::Exponential { lambda } }
    }

    /// One clock, one stochastic jump A -> B; x runs at rate 1 in A.
    fn m1() -> Rac {
        Rac {
            vars: vec!["x".into()],
            locations: vec![
                Location {
                    name: "A".into(),
                    invariant: vec![Interval::full()],
                    flow: vec![iv(1, 1)],
                    init: Some(vec![iv(0, 0)]),
                },
                Location {
                    name: "B".into(),
                    invariant: vec![Interval::full()],
                    flow: vec![iv(0, 0)],
                    init: None,
                },
            ],
            jumps: vec![JumpDef {
                source: 0,
                target: 1,
                guard: vec![Interval::full()],
                reset: vec![Reset::Identity],
                event: Some(0),
            }],
            clocks: vec![exp_clock("r", 1.0)],
        }
    }

    /// Race of two exponential clocks out of A.
    fn m2() -> Rac {
        Rac {
            vars: vec!["x".into()],
            locations: vec![
                Location {
                    name: "A".into(),
                    invariant: vec![Interval::full()],
                    flow: vec![iv(0, 0)],
                    init: Some(vec![iv(0, 0)]),
                },
                Location {
                    name: "B".into(),
                    invariant: vec![Interval::full()],
                    flow: vec![iv(0, 0)],
                    init: None,
                },
                Location {
                    name: "C".into(),
                    invariant: vec![Interval::full()],
                    flow: vec![iv(0, 0)],
                    init: None,
                },
            ],
            jumps: vec![
                JumpDef {
                    source: 0,
                    target: 1,
                    guard: vec![Interval::full()],
                    reset: vec![Reset::Identity],
                    event: Some(0),
                },
                JumpDef {
                    source: 0,
                    target: 2,
                    guard: vec![Interval::full()],
                    reset: vec![Reset::Identity],
                    event: Some(1),
                },
            ],
            clocks: vec![exp_clock("r1", 1.0), exp_clock("r2", 2.0)],
        }
    }

    fn state(u: &UnrolledRac, loc: usize, poly: QPolytope) -> SymbolicState {
        debug_assert_eq!(poly.dim(), u.dim());
        SymbolicState { loc, poly }
    }

    #[test]
    fn time_successor_rectangular_rate() {
        // x' in [t, 2t], T = t <= 5: expect {0 <= T <= 5, T <= x <= 2T}.
        let mut m = m1();
        m.locations[0].flow = vec![iv(1, 2)];
        let u = unroll(&m, 0);
        let d = u.dim(); // x, T, mu[r0]
        let init = QPolytope::from_box(&[
            (Some(int(0)), Some(int(0))),
            (Some(int(0)), Some(int(0))),
            (Some(int(0)), Some(int(0))),
        ]);
        assert_eq!(d, 3);
        let (succ, _) = time_successor(&state(&u, 0, init), &u, &int(5), EliminationMode::FmPlus);
        let expect = QPolytope::from_rows(
            3,
            vec![
                // T <= 5, T >= 0
                LinearConstraint::new(vec![int(0), int(1), int(0)], int(5)),
                LinearConstraint::new(vec![int(0), int(-1), int(0)], int(0)),
                // T <= x <= 2T
                LinearConstraint::new(vec![int(-1), int(1), int(0)], int(0)),
                LinearConstraint::new(vec![int(1), int(-2), int(0)], int(0)),
                // mu = T (clock active, slope 1)
                LinearConstraint::new(vec![int(0), int(1), int(-1)], int(0)),
                LinearConstraint::new(vec![int(0), int(-1), int(1)], int(0)),
            ],
        )
        .unwrap();
        assert!(succ.poly.set_equals(&expect).unwrap());
    }

    #[test]
    fn time_successor_contains_input() {
        let m = m1();
        let u = unroll(&m, 1);
        let init = QPolytope::from_box(&[
            (Some(int(0)), Some(int(1))),
            (Some(int(0)), Some(int(0))),
            (Some(int(0)), Some(int(0))),
            (Some(int(0)), Some(int(0))),
        ]);
        let s = state(&u, 0, init.clone());
        let (succ, _) = time_successor(&s, &u, &int(3), EliminationMode::FmPlus);
        assert!(init.subset_of(&succ.poly).unwrap());
    }

    #[test]
    fn time_successor_respects_invariant() {
        let mut m = m1();
        m.locations[0].invariant = vec![Interval::new(None, Some(int(10)))];
        let u = unroll(&m, 0);
        let init = QPolytope::from_box(&[
            (Some(int(0)), Some(int(1))),
            (Some(int(0)), Some(int(0))),
            (Some(int(0)), Some(int(0))),
        ]);
        let (succ, _) =
            time_successor(&state(&u, 0, init), &u, &int(100), EliminationMode::FmPlus);
        // {0 <= T <= 10, T <= x <= T+1, x <= 10}, stopwatch in lockstep.
        let expect = QPolytope::from_rows(
            3,
            vec![
                LinearConstraint::new(vec![int(0), int(-1), int(0)], int(0)),
                LinearConstraint::new(vec![int(1), int(0), int(0)], int(10)),
                LinearConstraint::new(vec![int(-1), int(1), int(0)], int(0)),
                LinearConstraint::new(vec![int(1), int(-1), int(0)], int(1)),
                LinearConstraint::new(vec![int(0), int(1), int(-1)], int(0)),
                LinearConstraint::new(vec![int(0), int(-1), int(1)], int(0)),
            ],
        )
        .unwrap();
        assert!(succ.poly.set_equals(&expect).unwrap());
    }

    #[test]
    fn time_successor_lockstep_stopwatch() {
        let m = m1();
        let u = unroll(&m, 0);
        let init = QPolytope::from_box(&[
            (Some(int(0)), Some(int(0))),
            (Some(int(0)), Some(int(0))),
            (Some(int(0)), Some(int(0))),
        ]);
        let (succ, _) = time_successor(&state(&u, 0, init), &u, &int(7), EliminationMode::FmPlus);
        // x = mu = T <= 7.
        for t in [0i64, 3, 7] {
            assert!(succ.poly.contains_exact(&[int(t), int(t), int(t)]).unwrap());
        }
        assert!(!succ.poly.contains_exact(&[int(3), int(3), int(2)]).unwrap());
        assert!(!succ.poly.contains_exact(&[int(8), int(8), int(8)]).unwrap());
    }

    #[test]
    fn jump_guard_filters_and_reset_pins() {
        let mut m = m1();
        m.jumps[0].event = None;
        m.clocks.clear();
        m.jumps[0].guard = vec![Interval::new(Some(int(5)), None)];
        m.jumps[0].reset = vec![Reset::To(Interval::point(int(0)))];
        let u = unroll(&m, 1);
        let d = u.dim(); // x, T
        assert_eq!(d, 2);
        let poly = QPolytope::from_box(&[(Some(int(0)), Some(int(10))), (Some(int(0)), Some(int(10)))]);
        let (succ, _) =
            jump_successor(&state(&u, 0, poly), 0, &u, EliminationMode::FmPlus).unwrap();
        // x reset to 0, T preserved.
        assert!(succ.poly.contains_exact(&[int(0), int(7)]).unwrap());
        assert!(!succ.poly.contains_exact(&[int(1), int(7)]).unwrap());

        let narrow = QPolytope::from_box(&[(Some(int(0)), Some(int(4))), (Some(int(0)), Some(int(10)))]);
        let (succ2, _) =
            jump_successor(&state(&u, 0, narrow), 0, &u, EliminationMode::FmPlus).unwrap();
        assert!(succ2.poly.is_empty());
    }

    #[test]
    fn identity_reset_preserves_coupling() {
        let m = m1();
        let u = unroll(&m, 1);
        // x = mu[r0] entering the jump.
        let poly = QPolytope::from_rows(
            4,
            vec![
                LinearConstraint::new(vec![int(1), int(0), int(-1), int(0)], int(0)),
                LinearConstraint::new(vec![int(-1), int(0), int(1), int(0)], int(0)),
                LinearConstraint::new(vec![int(1), int(0), int(0), int(0)], int(5)),
                LinearConstraint::new(vec![int(-1), int(0), int(0), int(0)], int(0)),
            ],
        )
        .unwrap();
        let (succ, _) =
            jump_successor(&state(&u, 0, poly), 0, &u, EliminationMode::FmPlus).unwrap();
        assert_eq!(u.locs[succ.loc].orig, 1);
        assert!(succ.poly.contains_exact(&[int(2), int(0), int(2), int(0)]).unwrap());
        assert!(!succ.poly.contains_exact(&[int(2), int(0), int(3), int(0)]).unwrap());
    }

    #[test]
    fn m1_tree_has_root_and_one_child() {
        let m = m1();
        let u = unroll(&m, 1);
        let tree = build_reach_tree(&u, "A", &int(1), 1, EliminationMode::FmPlus).unwrap();
        assert_eq!(tree.nodes.len(), 2);
        assert_eq!(tree.edges.len(), 1);
        assert_eq!(tree.nodes[1].depth, 1);
        assert_eq!(tree.nodes[1].expired, vec![true, false]);
    }

    #[test]
    fn depth_cap_zero_keeps_root_only() {
        let m = m1();
        let u = unroll(&m, 0);
        let tree = build_reach_tree(&u, "A", &int(1), 0, EliminationMode::FmPlus).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        assert!(tree.edges.is_empty());
    }

    #[test]
    fn unsatisfiable_guard_prunes_child() {
        let mut m = m1();
        m.jumps[0].event = None;
        m.clocks.clear();
        m.jumps[0].guard = vec![Interval::new(Some(int(50)), None)];
        // x <= 10 keeps the guard unreachable within tmax.
        m.locations[0].invariant = vec![Interval::new(None, Some(int(10)))];
        let u = unroll(&m, 1);
        let tree = build_reach_tree(&u, "A", &int(5), 1, EliminationMode::FmPlus).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        assert!(!tree.warnings.is_empty());
    }

    #[test]
    fn goal_selection_by_location_and_valuation() {
        let m = m1();
        let u = unroll(&m, 1);
        let tree = build_reach_tree(&u, "A", &int(1), 1, EliminationMode::FmPlus).unwrap();
        let all = goal_nodes(
            &tree,
            &u,
            &GoalSpec { locations: vec!["B".into()], constraints: vec![] },
        );
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].0, 1);
        // Unreachable valuation: x >= 7 cannot hold with tmax = 1.
        let none = goal_nodes(
            &tree,
            &u,
            &GoalSpec {
                locations: vec!["B".into()],
                constraints: vec![LinearConstraint::new(vec![int(-1)], int(-7))],
            },
        );
        assert!(none.is_empty());
        let unknown = goal_nodes(
            &tree,
            &u,
            &GoalSpec { locations: vec!["Z".into()], constraints: vec![] },
        );
        assert!(unknown.is_empty());
    }

    #[test]
    fn m1_region_is_a_box() {
        let m = m1();
        let u = unroll(&m, 1);
        let tree = build_reach_tree(&u, "A", &int(1), 1, EliminationMode::FmPlus).unwrap();
        let goal = GoalSpec { locations: vec!["B".into()], constraints: vec![] };
        let (region, _) =
            assemble_forward_region(&tree, &u, &goal, &int(100), EliminationMode::FmPlus);
        assert_eq!(region.members.len(), 1);
        assert_eq!(region.lifted, vec![false, true]);
        let expect = QPolytope::from_box(&[
            (Some(int(0)), Some(int(1))),
            (Some(int(0)), Some(int(100))),
        ]);
        assert!(region.members[0].poly.set_equals(&expect).unwrap());
    }

    #[test]
    fn m2_region_encodes_the_race() {
        let m = m2();
        let u = unroll(&m, 1);
        let tree = build_reach_tree(&u, "A", &int(1), 1, EliminationMode::FmPlus).unwrap();
        let goal = GoalSpec { locations: vec!["B".into()], constraints: vec![] };
        let (region, _) =
            assemble_forward_region(&tree, &u, &goal, &int(100), EliminationMode::FmPlus);
        assert_eq!(region.members.len(), 1);
        let member = &region.members[0].poly;
        // Sample dims: r1[0], r1[1], r2[0], r2[1].
        assert_eq!(member.dim(), 4);
        // s_{r1,0} <= 1 and s_{r2,0} >= s_{r1,0} (the race), others free.
        let half = ratio::<Rat>(1, 2);
        assert!(member
            .contains_exact(&[half.clone(), int(50), ratio(3, 4), int(50)])
            .unwrap());
        assert!(!member
            .contains_exact(&[half.clone(), int(50), ratio(1, 4), int(50)])
            .unwrap());
        assert!(!member
            .contains_exact(&[int(2), int(50), int(3), int(50)])
            .unwrap());
    }

    #[test]
    fn project_and_lift_appendix_style_fixture() {
        // Stopwatch-coupled goal set over (T, mu0, mu1), both copies expired.
        let t_int = int(100);
        let poly = QPolytope::from_rows(
            3,
            vec![
                // mu0 + mu1 <= 17/4
                LinearConstraint::new(vec![int(0), int(1), int(1)], ratio(17, 4)),
                LinearConstraint::new(vec![int(0), int(-1), int(0)], ratio(-2, 3)),
                LinearConstraint::new(vec![int(0), int(1), int(0)], ratio(9, 4)),
                LinearConstraint::new(vec![int(0), int(-1), int(0)], int(0)),
                LinearConstraint::new(vec![int(0), int(0), int(1)], ratio(9, 4)),
                LinearConstraint::new(vec![int(0), int(0), int(-1)], int(0)),
            ],
        )
        .unwrap();
        let (lifted, _) =
            project_and_lift(&poly, &[true, true], &t_int, EliminationMode::FmPlus);
        let bb = lifted.bounding_box().unwrap();
        assert_eq!(bb.intervals[0], (Some(ratio(2, 3)), Some(ratio(9, 4))));
        assert_eq!(bb.intervals[1], (Some(int(0)), Some(ratio(9, 4))));
        // The coupling survives the reinterpretation as samples.
        assert!(lifted.contains_exact(&[int(2), int(2)]).unwrap());
        assert!(!lifted.contains_exact(&[ratio(9, 4), ratio(9, 4)]).unwrap());
    }

    #[test]
    fn lifting_monotone_in_t_int() {
        let m = m2();
        let u = unroll(&m, 1);
        let tree = build_reach_tree(&u, "A", &int(1), 1, EliminationMode::FmPlus).unwrap();
        let goal = GoalSpec { locations: vec!["B".into()], constraints: vec![] };
        let (small, _) =
            assemble_forward_region(&tree, &u, &goal, &int(10), EliminationMode::FmPlus);
        let (large, _) =
            assemble_forward_region(&tree, &u, &goal, &int(100), EliminationMode::FmPlus);
        assert!(small.members[0].poly.subset_of(&large.members[0].poly).unwrap());
    }
}
