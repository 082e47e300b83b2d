//! Rectangular automata with random clocks: model representation,
//! structural validation, clock activity, and jump-bounded unrolling.
//!
//! Unrolling turns the automaton into a loop-free location tree up to the
//! jump bound. Every stochastic jump on a path consumes a fresh copy of its
//! clock, so with `d_r` clocks and bound `jmp` the stochastic state space
//! has `d_r * (jmp + 1)` dimensions, each tied to one expiration time. A
//! global timer is appended as an extra continuous dimension to cut the
//! reachability computation at the time bound.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Signed;

use crate::scalar::Rat;
use crate::stochastics::DistributionSpec;

/// Closed interval with optionally unbounded ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: Option<Rat>,
    pub hi: Option<Rat>,
}

impl Interval {
    pub fn full() -> Self {
        Self { lo: None, hi: None }
    }

    pub fn point(v: Rat) -> Self {
        Self { lo: Some(v.clone()), hi: Some(v) }
    }

    pub fn new(lo: Option<Rat>, hi: Option<Rat>) -> Self {
        Self { lo, hi }
    }

    pub fn is_valid(&self) -> bool {
        match (&self.lo, &self.hi) {
            (Some(a), Some(b)) => a <= b,
            _ => true,
        }
    }

    pub fn is_full(&self) -> bool {
        self.lo.is_none() && self.hi.is_none()
    }

    /// Interval containment, treating `None` as the infinite end.
    pub fn subset_of(&self, other: &Interval) -> bool {
        let lo_ok = match (&self.lo, &other.lo) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => a >= b,
        };
        let hi_ok = match (&self.hi, &other.hi) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => a <= b,
        };
        lo_ok && hi_ok
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let lo = match (&self.lo, &other.lo) {
            (None, x) => x.clone(),
            (x, None) => x.clone(),
            (Some(a), Some(b)) => Some(a.clone().max(b.clone())),
        };
        let hi = match (&self.hi, &other.hi) {
            (None, x) => x.clone(),
            (x, None) => x.clone(),
            (Some(a), Some(b)) => Some(a.clone().min(b.clone())),
        };
        Interval { lo, hi }
    }
}

/// Rectangular condition: one interval per continuous variable.
pub type Rect = Vec<Interval>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reset {
    Identity,
    To(Interval),
}

#[derive(Debug, Clone)]
pub struct Location {
    pub name: String,
    pub invariant: Rect,
    pub flow: Rect,
    /// `None` means no initial states in this location.
    pub init: Option<Rect>,
}

#[derive(Debug, Clone)]
pub struct JumpDef {
    pub source: usize,
    pub target: usize,
    pub guard: Rect,
    pub reset: Vec<Reset>,
    /// Clock index for stochastic jumps, `None` for nonstochastic ones.
    pub event: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Clock {
    pub name: String,
    pub dist: DistributionSpec,
}

/// Rectangular automaton with random clocks.
#[derive(Debug, Clone)]
pub struct Rac {
    pub vars: Vec<String>,
    pub locations: Vec<Location>,
    pub jumps: Vec<JumpDef>,
    pub clocks: Vec<Clock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Per-location, per-clock activity: a clock's stopwatch runs exactly in
/// the locations some stochastic jump with its label leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityVector {
    bits: Vec<Vec<bool>>,
}

impl ActivityVector {
    pub fn is_active(&self, location: usize, clock: usize) -> bool {
        self.bits[location][clock]
    }
}

impl Rac {
    pub fn d_c(&self) -> usize {
        self.vars.len()
    }

    pub fn d_r(&self) -> usize {
        self.clocks.len()
    }

    pub fn location_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.name == name)
    }

    pub fn activity(&self) -> ActivityVector {
        let bits = (0..self.locations.len())
            .map(|loc| {
                (0..self.clocks.len())
                    .map(|clk| {
                        self.jumps
                            .iter()
                            .any(|j| j.source == loc && j.event == Some(clk))
                    })
                    .collect()
            })
            .collect();
        ActivityVector { bits }
    }

    /// Structural checks of model well-formedness. Hard requirements come
    /// back as errors; the nonblocking requirement is only approximated
    /// syntactically and failures come back as warnings.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let err = |out: &mut Vec<Violation>, message: String| {
            out.push(Violation { severity: Severity::Error, message });
        };
        if self.locations.is_empty() {
            err(&mut out, "model has no locations".into());
            return out;
        }
        let d = self.d_c();
        let mut seen = BTreeSet::new();
        for v in &self.vars {
            if !seen.insert(v.clone()) {
                err(&mut out, format!("duplicate variable name `{v}`"));
            }
        }
        for c in &self.clocks {
            if !seen.insert(c.name.clone()) {
                err(
                    &mut out,
                    format!("clock name `{}` collides with a variable or another clock", c.name),
                );
            }
            if let Err(e) = c.dist.validate() {
                err(&mut out, format!("clock `{}`: {e}", c.name));
            }
        }

        let check_rect = |out: &mut Vec<Violation>, rect: &Rect, what: String| {
            for (i, iv) in rect.iter().enumerate() {
                if !iv.is_valid() {
                    out.push(Violation {
                        severity: Severity::Error,
                        message: format!(
                            "{what}: interval for `{}` has lo > hi",
                            self.vars[i]
                        ),
                    });
                }
            }
        };

        let mut any_init = false;
        for loc in &self.locations {
            check_rect(&mut out, &loc.invariant, format!("invariant of `{}`", loc.name));
            check_rect(&mut out, &loc.flow, format!("flow of `{}`", loc.name));
            if let Some(init) = &loc.init {
                any_init = true;
                check_rect(&mut out, init, format!("init of `{}`", loc.name));
                for (i, iv) in init.iter().enumerate() {
                    if iv.is_valid() && !iv.subset_of(&loc.invariant[i]) {
                        err(
                            &mut out,
                            format!(
                                "init of `{}` leaves the invariant on `{}`",
                                loc.name, self.vars[i]
                            ),
                        );
                    }
                }
            }
        }
        if !any_init {
            err(&mut out, "no location has initial states".into());
        }

        for (ji, jump) in self.jumps.iter().enumerate() {
            let src = &self.locations[jump.source];
            let tgt = &self.locations[jump.target];
            let label = format!("jump #{ji} `{}` -> `{}`", src.name, tgt.name);
            check_rect(&mut out, &jump.guard, format!("guard of {label}"));
            debug_assert_eq!(jump.guard.len(), d);
            debug_assert_eq!(jump.reset.len(), d);
            if jump.event.is_some() {
                if jump.guard.iter().any(|iv| !iv.is_full()) {
                    err(&mut out, format!("stochastic {label}: guard not universal"));
                }
            } else {
                for (i, g) in jump.guard.iter().enumerate() {
                    if g.is_valid() && !g.subset_of(&src.invariant[i]) {
                        err(
                            &mut out,
                            format!("{label}: guard leaves source invariant on `{}`", self.vars[i]),
                        );
                    }
                }
            }
            for (i, reset) in jump.reset.iter().enumerate() {
                match reset {
                    Reset::Identity => {
                        let passed = src.invariant[i].intersect(&jump.guard[i]);
                        if passed.is_valid() && !passed.subset_of(&tgt.invariant[i]) {
                            err(
                                &mut out,
                                format!(
                                    "{label}: identity reset may leave target invariant on `{}`",
                                    self.vars[i]
                                ),
                            );
                        }
                    }
                    Reset::To(iv) => {
                        if !iv.is_valid() {
                            err(
                                &mut out,
                                format!("{label}: reset interval for `{}` has lo > hi", self.vars[i]),
                            );
                        } else if !iv.subset_of(&tgt.invariant[i]) {
                            err(
                                &mut out,
                                format!(
                                    "{label}: reset leaves target invariant on `{}`",
                                    self.vars[i]
                                ),
                            );
                        }
                    }
                }
            }
        }

        // Conservative nonblocking check for the automaton without its
        // stochastic jumps: either some nonstochastic jump is enabled on the
        // whole invariant, or time can pass from every invariant corner.
        for (li, loc) in self.locations.iter().enumerate() {
            let escape = self.jumps.iter().any(|j| {
                j.source == li
                    && j.event.is_none()
                    && j.guard
                        .iter()
                        .zip(&loc.invariant)
                        .all(|(g, inv)| inv.subset_of(g))
            });
            if escape {
                continue;
            }
            let mut ok = true;
            for (iv, flow) in loc.invariant.iter().zip(&loc.flow) {
                let point = matches!((&iv.lo, &iv.hi), (Some(a), Some(b)) if a == b);
                if point {
                    let zero = Rat::from_integer(0.into());
                    let lo_ok = flow.lo.as_ref().map_or(true, |l| *l <= zero);
                    let hi_ok = flow.hi.as_ref().map_or(true, |h| *h >= zero);
                    ok &= lo_ok && hi_ok;
                    continue;
                }
                if iv.hi.is_some() {
                    // At the upper face a nonpositive rate must be available.
                    ok &= flow.lo.as_ref().map_or(true, |l| !l.is_positive());
                }
                if iv.lo.is_some() {
                    ok &= flow.hi.as_ref().map_or(true, |h| !h.is_negative());
                }
            }
            if !ok {
                out.push(Violation {
                    severity: Severity::Warning,
                    message: format!(
                        "location `{}` may block: no always-enabled nonstochastic jump and \
                         time cannot pass from every invariant corner",
                        loc.name
                    ),
                });
            }
        }
        out
    }

    pub fn has_errors(violations: &[Violation]) -> bool {
        violations.iter().any(|v| v.severity == Severity::Error)
    }
}

/// A clock copy `(clock, occurrence index)` of the unrolled automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ClockCopy {
    pub clock: usize,
    pub copy: usize,
}

/// One location of the unrolled tree.
#[derive(Debug, Clone)]
pub struct UnrolledLoc {
    pub orig: usize,
    pub depth: usize,
    pub parent: Option<usize>,
    /// Copy index currently standing in for each original clock.
    pub active_copy: Vec<usize>,
    /// Original location names from the root, `/`-joined.
    pub path: String,
}

#[derive(Debug, Clone)]
pub struct UnrolledJump {
    pub source: usize,
    pub target: usize,
    pub orig: usize,
    /// The clock copy consumed by this jump, for stochastic jumps.
    pub event: Option<ClockCopy>,
}

/// Loop-free unfolding of a [`Rac`] up to a jump bound: a forest with one
/// tree per location carrying initial states.
#[derive(Debug, Clone)]
pub struct UnrolledRac {
    pub model: Rac,
    pub jmp: u32,
    pub locs: Vec<UnrolledLoc>,
    pub jumps: Vec<UnrolledJump>,
    /// `(original location, tree root)` pairs.
    pub roots: Vec<(usize, usize)>,
    activity: ActivityVector,
}

impl UnrolledRac {
    pub fn d_c(&self) -> usize {
        self.model.d_c()
    }

    pub fn copies_per_clock(&self) -> usize {
        self.jmp as usize + 1
    }

    /// Stochastic dimension of the unrolled automaton.
    pub fn d_r_u(&self) -> usize {
        self.model.d_r() * self.copies_per_clock()
    }

    /// State-space dimension: variables, global timer, stopwatches.
    pub fn dim(&self) -> usize {
        self.d_c() + 1 + self.d_r_u()
    }

    pub fn timer_dim(&self) -> usize {
        self.d_c()
    }

    pub fn copy_index(&self, c: ClockCopy) -> usize {
        c.clock * self.copies_per_clock() + c.copy
    }

    pub fn copy_of_index(&self, k: usize) -> ClockCopy {
        ClockCopy { clock: k / self.copies_per_clock(), copy: k % self.copies_per_clock() }
    }

    /// Stopwatch dimension of copy `k` in the state space.
    pub fn stopwatch_dim(&self, k: usize) -> usize {
        self.d_c() + 1 + k
    }

    /// Distribution of sample dimension `k` (inherited from the original clock).
    pub fn copy_dist(&self, k: usize) -> &DistributionSpec {
        &self.model.clocks[self.copy_of_index(k).clock].dist
    }

    pub fn copy_name(&self, k: usize) -> String {
        let c = self.copy_of_index(k);
        format!("{}[{}]", self.model.clocks[c.clock].name, c.copy)
    }

    /// Stopwatch slopes at a tree location: only the currently active copy
    /// of a clock runs, and only when its label leaves the original location.
    pub fn stopwatch_slopes(&self, unode: usize) -> Vec<bool> {
        let loc = &self.locs[unode];
        let mut slopes = vec![false; self.d_r_u()];
        for (clock, &copy) in loc.active_copy.iter().enumerate() {
            if self.activity.is_active(loc.orig, clock) {
                slopes[self.copy_index(ClockCopy { clock, copy })] = true;
            }
        }
        slopes
    }

    pub fn outgoing(&self, unode: usize) -> impl Iterator<Item = usize> + '_ {
        self.jumps
            .iter()
            .enumerate()
            .filter(move |(_, j)| j.source == unode)
            .map(|(i, _)| i)
    }

    pub fn root_for(&self, orig: usize) -> Option<usize> {
        self.roots.iter().find(|(o, _)| *o == orig).map(|(_, n)| *n)
    }

    /// Materialize the unrolled forest as a plain [`Rac`] (variables gain
    /// the global timer; clocks become the copies), mainly so the unrolled
    /// model can be re-validated against the same structural rules.
    pub fn to_rac(&self) -> Rac {
        let base = &self.model;
        let d = base.d_c();
        let mut vars = base.vars.clone();
        vars.push("@T".into());
        let clocks: Vec<Clock> = (0..self.d_r_u())
            .map(|k| Clock { name: format!("@{}", self.copy_name(k)), dist: self.copy_dist(k).clone() })
            .collect();
        let locations: Vec<Location> = self
            .locs
            .iter()
            .map(|ul| {
                let orig = &base.locations[ul.orig];
                let mut invariant = orig.invariant.clone();
                invariant.push(Interval::full());
                let mut flow = orig.flow.clone();
                flow.push(Interval::point(Rat::from_integer(1.into())));
                let init = if ul.parent.is_none() {
                    orig.init.as_ref().map(|r| {
                        let mut r = r.clone();
                        r.push(Interval::point(Rat::from_integer(0.into())));
                        r
                    })
                } else {
                    None
                };
                Location { name: ul.path.clone(), invariant, flow, init }
            })
            .collect();
        let jumps: Vec<JumpDef> = self
            .jumps
            .iter()
            .map(|uj| {
                let orig = &base.jumps[uj.orig];
                let mut guard = orig.guard.clone();
                guard.push(Interval::full());
                let mut reset = orig.reset.clone();
                reset.push(Reset::Identity);
                debug_assert_eq!(guard.len(), d + 1);
                JumpDef {
                    source: uj.source,
                    target: uj.target,
                    guard,
                    reset,
                    event: uj.event.map(|c| self.copy_index(c)),
                }
            })
            .collect();
        Rac { vars, locations, jumps, clocks }
    }
}

/// Unroll to a loop-free forest of depth `jmp`. Along every path each
/// stochastic jump consumes the next copy of its clock, so no copy is used
/// twice and every random event owns one dimension.
pub fn unroll(model: &Rac, jmp: u32) -> UnrolledRac {
    let activity = model.activity();
    let mut locs: Vec<UnrolledLoc> = Vec::new();
    let mut jumps: Vec<UnrolledJump> = Vec::new();
    let mut roots = Vec::new();
    let mut frontier: Vec<usize> = Vec::new();
    for (li, loc) in model.locations.iter().enumerate() {
        if loc.init.is_some() {
            let node = locs.len();
            locs.push(UnrolledLoc {
                orig: li,
                depth: 0,
                parent: None,
                active_copy: vec![0; model.d_r()],
                path: loc.name.clone(),
            });
            roots.push((li, node));
            frontier.push(node);
        }
    }
    while let Some(node) = frontier.pop() {
        let depth = locs[node].depth;
        if depth as u32 >= jmp {
            continue;
        }
        for (ji, jump) in model.jumps.iter().enumerate() {
            if jump.source != locs[node].orig {
                continue;
            }
            let mut active = locs[node].active_copy.clone();
            let event = jump.event.map(|clock| {
                let copy = active[clock];
                active[clock] += 1;
                ClockCopy { clock, copy }
            });
            let child = locs.len();
            let path = format!("{}/{}", locs[node].path, model.locations[jump.target].name);
            locs.push(UnrolledLoc {
                orig: jump.target,
                depth: depth + 1,
                parent: Some(node),
                active_copy: active,
                path,
            });
            jumps.push(UnrolledJump { source: node, target: child, orig: ji, event });
            frontier.push(child);
        }
    }
    UnrolledRac { model: model.clone(), jmp, locs, jumps, roots, activity }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    fn iv(lo: i64, hi: i64) -> Interval {
        Interval::new(Some(int(lo)), Some(int(hi)))
    }

    /// Two locations, one exponential clock active in A, frozen in B.
    pub(crate) fn single_delay() -> Rac {
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
            clocks: vec![Clock {
                name: "r".into(),
                dist: DistributionSpec::Exponential { lambda: 1.0 },
            }],
        }
    }

    #[test]
    fn valid_model_has_no_findings() {
        assert!(single_delay().validate().is_empty());
    }

    #[test]
    fn stochastic_guard_must_be_universal() {
        let mut m = single_delay();
        m.jumps[0].guard = vec![Interval::new(Some(int(5)), None)];
        let vs = m.validate();
        assert!(vs.iter().any(|v| v.message.contains("guard not universal")));
        assert!(Rac::has_errors(&vs));
    }

    #[test]
    fn init_outside_invariant_is_an_error() {
        let mut m = single_delay();
        m.locations[0].invariant = vec![iv(0, 4)];
        m.locations[0].init = Some(vec![iv(5, 6)]);
        let vs = m.validate();
        assert!(vs.iter().any(|v| v.message.contains("leaves the invariant")));
    }

    #[test]
    fn interval_lo_gt_hi_is_an_error() {
        let mut m = single_delay();
        m.locations[1].invariant = vec![iv(3, 1)];
        assert!(Rac::has_errors(&m.validate()));
    }

    #[test]
    fn blocked_corner_is_a_warning_only() {
        let mut m = single_delay();
        // x <= 10 with pure positive rate and no escape jump.
        m.locations[0].invariant = vec![Interval::new(None, Some(int(10)))];
        let vs = m.validate();
        assert!(!Rac::has_errors(&vs));
        assert!(vs.iter().any(|v| v.severity == Severity::Warning));
    }

    #[test]
    fn activity_marks_source_location_only() {
        let m = single_delay();
        let act = m.activity();
        assert!(act.is_active(0, 0));
        assert!(!act.is_active(1, 0));
    }

    #[test]
    fn activity_single_bit_for_two_jumps_with_same_label() {
        let mut m = single_delay();
        let mut extra = m.jumps[0].clone();
        extra.target = 0;
        m.jumps.push(extra);
        assert!(m.activity().is_active(0, 0));
    }

    #[test]
    fn unroll_allocates_all_copies() {
        let u = unroll(&single_delay(), 2);
        assert_eq!(u.d_r_u(), 3);
        assert_eq!(u.dim(), 1 + 1 + 3);
        // A, A/B, A/B (depth 2 via the self copy path)... the chain A -> B
        // stops because B has no outgoing jumps: nodes A, A/B only.
        assert_eq!(u.locs.len(), 2);
        assert_eq!(u.jumps.len(), 1);
        assert_eq!(u.jumps[0].event, Some(ClockCopy { clock: 0, copy: 0 }));
    }

    #[test]
    fn unroll_consumes_successive_copies_on_a_loop() {
        let mut m = single_delay();
        // Make it a loop: B jumps back to A on the same clock.
        m.jumps.push(JumpDef {
            source: 1,
            target: 0,
            guard: vec![Interval::full()],
            reset: vec![Reset::Identity],
            event: Some(0),
        });
        let u = unroll(&m, 2);
        // Paths: A, A/B, A/B/A — loop-free up to depth 2.
        assert_eq!(u.locs.len(), 3);
        let events: Vec<_> = u.jumps.iter().map(|j| j.event.unwrap()).collect();
        assert!(events.contains(&ClockCopy { clock: 0, copy: 0 }));
        assert!(events.contains(&ClockCopy { clock: 0, copy: 1 }));
        // No copy is consumed twice along a path.
        let mut seen = BTreeSet::new();
        for j in &u.jumps {
            assert!(seen.insert((j.source, j.event)));
        }
    }

    #[test]
    fn no_stochastic_jumps_means_zero_stochastic_dims() {
        let mut m = single_delay();
        m.jumps[0].event = None;
        m.clocks.clear();
        let u = unroll(&m, 2);
        assert_eq!(u.d_r_u(), 0);
        assert_eq!(u.locs.len(), 2);
    }

    #[test]
    fn unrolled_model_validates() {
        let mut m = single_delay();
        m.jumps.push(JumpDef {
            source: 1,
            target: 0,
            guard: vec![Interval::full()],
            reset: vec![Reset::Identity],
            event: Some(0),
        });
        let u = unroll(&m, 3);
        let vs = u.to_rac().validate();
        assert!(!Rac::has_errors(&vs), "{vs:?}");
    }

    #[test]
    fn distribution_inheritance() {
        let u = unroll(&single_delay(), 2);
        for k in 0..u.d_r_u() {
            assert_eq!(*u.copy_dist(k), DistributionSpec::Exponential { lambda: 1.0 });
        }
    }

    #[test]
    fn stopwatch_slopes_follow_active_copy() {
        let mut m = single_delay();
        m.jumps.push(JumpDef {
            source: 1,
            target: 0,
            guard: vec![Interval::full()],
            reset: vec![Reset::Identity],
            event: Some(0),
        });
        let u = unroll(&m, 2);
        let root = u.root_for(0).unwrap();
        assert_eq!(u.stopwatch_slopes(root), vec![true, false, false]);
        // After the first stochastic jump the second copy stands in for r;
        // it runs in B too because the loop jump labelled r leaves B.
        let b = u.jumps.iter().find(|j| j.source == root).unwrap().target;
        assert_eq!(u.stopwatch_slopes(b), vec![false, true, false]);
        let a2 = u.jumps.iter().find(|j| j.source == b).unwrap().target;
        assert_eq!(u.stopwatch_slopes(a2), vec![false, false, true]);
    }

    #[test]
    fn interval_subset_and_intersection() {
        let a = iv(1, 3);
        let b = Interval::new(Some(int(0)), None);
        assert!(a.subset_of(&b));
        assert!(!b.subset_of(&a));
        let c = a.intersect(&iv(2, 5));
        assert_eq!(c, iv(2, 3));
        assert_eq!(ratio::<Rat>(1, 2), ratio(1, 2));
    }
}
