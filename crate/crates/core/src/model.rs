//! Model document format and reach-tree dumps.
//!
//! Models are single JSON documents with sections `variables`, `clocks`,
//! `locations`, `jumps`, `goal`, and `analysis`. Numbers are accepted as
//! JSON numbers (converted exactly from their binary value) or as strings:
//! `"p/q"` exact rationals, decimal strings, and `"inf"`/`"-inf"` for
//! unbounded interval ends. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{Clock, Interval, JumpDef, Location, Rac, Rect, Reset, UnrolledRac, Violation};
use crate::elimination::EliminationMode;
use crate::polytope::LinearConstraint;
use crate::reach::{GoalSpec, ReachTree};
use crate::scalar::Rat;
use crate::stochastics::DistributionSpec;
use crate::{QConstraint, QPolytope};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid model: {0}")]
    Schema(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// A parsed number: exact rational or an infinite interval end.
#[derive(Debug, Clone, PartialEq)]
pub enum NumValue {
    Finite(Rat),
    PosInf,
    NegInf,
}

impl NumValue {
    pub fn finite(&self, what: &str) -> Result<Rat, ModelError> {
        match self {
            NumValue::Finite(r) => Ok(r.clone()),
            _ => Err(ModelError::Schema(format!("{what} must be finite"))),
        }
    }
}

/// Parse a number literal: `p/q`, decimal, or `inf`/`-inf`.
pub fn parse_number(s: &str) -> Result<NumValue, String> {
    let t = s.trim();
    match t {
        "inf" | "+inf" | "infinity" => return Ok(NumValue::PosInf),
        "-inf" | "-infinity" => return Ok(NumValue::NegInf),
        _ => {}
    }
    if let Some((num, den)) = t.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|e| format!("bad numerator `{num}`: {e}"))?;
        let d = BigInt::from_str(den.trim()).map_err(|e| format!("bad denominator `{den}`: {e}"))?;
        if d == BigInt::from(0) {
            return Err(format!("zero denominator in `{t}`"));
        }
        return Ok(NumValue::Finite(Rat::new(n, d)));
    }
    let (sign, rest) = match t.strip_prefix('-') {
        Some(r) => (-1, r),
        None => (1, t),
    };
    let (int_part, frac_part) = match rest.split_once('.') {
        Some((i, f)) => (i, f),
        None => (rest, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("not a number: `{s}`"));
    }
    let digits = format!("{}{}", if int_part.is_empty() { "0" } else { int_part }, frac_part);
    let n = BigInt::from_str(&digits).map_err(|e| format!("not a number `{s}`: {e}"))?;
    let d = BigInt::from(10u8).pow(frac_part.len() as u32);
    Ok(NumValue::Finite(Rat::new(n * sign, d)))
}

impl<'de> Deserialize<'de> for NumValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = NumValue;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number, a \"p/q\" string, or \"inf\"/\"-inf\"")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<NumValue, E> {
                Ok(NumValue::Finite(Rat::from_integer(v.into())))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<NumValue, E> {
                Ok(NumValue::Finite(Rat::from_integer(v.into())))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<NumValue, E> {
                Rat::from_float(v)
                    .map(NumValue::Finite)
                    .ok_or_else(|| E::custom(format!("non-finite number {v}")))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<NumValue, E> {
                parse_number(v).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// An interval: a scalar (point interval) or a `[lo, hi]` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalDoc {
    pub lo: NumValue,
    pub hi: NumValue,
}

impl IntervalDoc {
    fn to_interval(&self, what: &str) -> Result<Interval, ModelError> {
        let lo = match &self.lo {
            NumValue::Finite(r) => Some(r.clone()),
            NumValue::NegInf => None,
            NumValue::PosInf => {
                return Err(ModelError::Schema(format!("{what}: lower end cannot be +inf")))
            }
        };
        let hi = match &self.hi {
            NumValue::Finite(r) => Some(r.clone()),
            NumValue::PosInf => None,
            NumValue::NegInf => {
                return Err(ModelError::Schema(format!("{what}: upper end cannot be -inf")))
            }
        };
        Ok(Interval::new(lo, hi))
    }
}

impl<'de> Deserialize<'de> for IntervalDoc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = IntervalDoc;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number (point interval) or a [lo, hi] pair")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<IntervalDoc, E> {
                let n = NumValue::Finite(Rat::from_integer(v.into()));
                Ok(IntervalDoc { lo: n.clone(), hi: n })
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<IntervalDoc, E> {
                let n = NumValue::Finite(Rat::from_integer(v.into()));
                Ok(IntervalDoc { lo: n.clone(), hi: n })
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<IntervalDoc, E> {
                let n = Rat::from_float(v)
                    .map(NumValue::Finite)
                    .ok_or_else(|| E::custom(format!("non-finite number {v}")))?;
                Ok(IntervalDoc { lo: n.clone(), hi: n })
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<IntervalDoc, E> {
                let n = parse_number(v).map_err(E::custom)?;
                Ok(IntervalDoc { lo: n.clone(), hi: n })
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<IntervalDoc, A::Error> {
                let lo: NumValue = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::custom("interval needs two ends"))?;
                let hi: NumValue = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::custom("interval needs two ends"))?;
                if seq.next_element::<NumValue>()?.is_some() {
                    return Err(de::Error::custom("interval has more than two ends"));
                }
                Ok(IntervalDoc { lo, hi })
            }
        }
        d.deserialize_any(V)
    }
}

/// A reset entry: `"id"` or an interval.
#[derive(Debug, Clone, PartialEq)]
pub enum ResetDoc {
    Identity,
    To(IntervalDoc),
}

impl<'de> Deserialize<'de> for ResetDoc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = ResetDoc;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"id\", a number, or a [lo, hi] pair")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<ResetDoc, E> {
                if v == "id" {
                    return Ok(ResetDoc::Identity);
                }
                let n = parse_number(v).map_err(E::custom)?;
                Ok(ResetDoc::To(IntervalDoc { lo: n.clone(), hi: n }))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ResetDoc, E> {
                let n = NumValue::Finite(Rat::from_integer(v.into()));
                Ok(ResetDoc::To(IntervalDoc { lo: n.clone(), hi: n }))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ResetDoc, E> {
                let n = NumValue::Finite(Rat::from_integer(v.into()));
                Ok(ResetDoc::To(IntervalDoc { lo: n.clone(), hi: n }))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<ResetDoc, E> {
                let n = Rat::from_float(v)
                    .map(NumValue::Finite)
                    .ok_or_else(|| E::custom(format!("non-finite number {v}")))?;
                Ok(ResetDoc::To(IntervalDoc { lo: n.clone(), hi: n }))
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<ResetDoc, A::Error> {
                let lo: NumValue = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::custom("interval needs two ends"))?;
                let hi: NumValue = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::custom("interval needs two ends"))?;
                if seq.next_element::<NumValue>()?.is_some() {
                    return Err(de::Error::custom("interval has more than two ends"));
                }
                Ok(ResetDoc::To(IntervalDoc { lo, hi }))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClockDoc {
    name: String,
    distribution: DistributionSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocationDoc {
    name: String,
    #[serde(default)]
    invariant: BTreeMap<String, IntervalDoc>,
    #[serde(default)]
    flow: BTreeMap<String, IntervalDoc>,
    #[serde(default)]
    init: Option<BTreeMap<String, IntervalDoc>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JumpDoc {
    from: String,
    to: String,
    #[serde(default)]
    guard: BTreeMap<String, IntervalDoc>,
    #[serde(default)]
    reset: BTreeMap<String, ResetDoc>,
    #[serde(default)]
    event: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintDoc {
    coeffs: BTreeMap<String, NumValue>,
    op: String,
    bound: NumValue,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoalDoc {
    locations: Vec<String>,
    #[serde(default)]
    constraints: Vec<ConstraintDoc>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalysisDoc {
    #[serde(default)]
    tmax: Option<NumValue>,
    #[serde(default)]
    jumps: Option<u32>,
    #[serde(default)]
    tint: Option<NumValue>,
    #[serde(default)]
    samples: Option<u64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    fm: Option<String>,
    #[serde(default)]
    adapt_bounds: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    variables: Vec<String>,
    #[serde(default)]
    clocks: Vec<ClockDoc>,
    locations: Vec<LocationDoc>,
    #[serde(default)]
    jumps: Vec<JumpDoc>,
    goal: GoalDoc,
    #[serde(default)]
    analysis: Option<AnalysisDoc>,
}

/// Analysis parameters as given in the model file; unresolved fields fall
/// back to defaults (or command-line overrides) later.
#[derive(Debug, Clone, Default)]
pub struct AnalysisSettings {
    pub tmax: Option<Rat>,
    pub jumps: Option<u32>,
    pub tint: Option<Rat>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub fm_mode: Option<EliminationMode>,
    pub adapt_bounds: Option<bool>,
}

#[derive(Debug)]
pub struct ParsedModel {
    pub rac: Rac,
    pub goal: GoalSpec,
    pub settings: AnalysisSettings,
}

pub fn parse_fm_mode(s: &str) -> Result<EliminationMode, ModelError> {
    match s {
        "fm" => Ok(EliminationMode::Fm),
        "fm+" | "fmplus" | "fm_plus" => Ok(EliminationMode::FmPlus),
        other => Err(ModelError::Config(format!("unknown elimination mode `{other}` (use fm or fm+)"))),
    }
}

fn rect_from_map(
    map: &BTreeMap<String, IntervalDoc>,
    vars: &[String],
    what: &str,
) -> Result<Rect, ModelError> {
    for key in map.keys() {
        if !vars.iter().any(|v| v == key) {
            return Err(ModelError::Schema(format!("{what}: unknown variable `{key}`")));
        }
    }
    vars.iter()
        .map(|v| match map.get(v) {
            Some(doc) => doc.to_interval(&format!("{what}, variable `{v}`")),
            None => Ok(Interval::full()),
        })
        .collect()
}

fn flow_from_map(
    map: &BTreeMap<String, IntervalDoc>,
    vars: &[String],
    what: &str,
) -> Result<Rect, ModelError> {
    for key in map.keys() {
        if !vars.iter().any(|v| v == key) {
            return Err(ModelError::Schema(format!("{what}: unknown variable `{key}`")));
        }
    }
    vars.iter()
        .map(|v| match map.get(v) {
            Some(doc) => doc.to_interval(&format!("{what}, variable `{v}`")),
            // Unmentioned variables do not move.
            None => Ok(Interval::point(Rat::from_integer(0.into()))),
        })
        .collect()
}

fn convert(doc: ModelDoc) -> Result<ParsedModel, ModelError> {
    let vars = doc.variables;
    let mut locations = Vec::with_capacity(doc.locations.len());
    for l in &doc.locations {
        let what = format!("location `{}`", l.name);
        let invariant = rect_from_map(&l.invariant, &vars, &format!("{what} invariant"))?;
        let flow = flow_from_map(&l.flow, &vars, &format!("{what} flow"))?;
        let init = match &l.init {
            Some(map) => Some(rect_from_map(map, &vars, &format!("{what} init"))?),
            None => None,
        };
        locations.push(Location { name: l.name.clone(), invariant, flow, init });
    }
    let clocks: Vec<Clock> = doc
        .clocks
        .iter()
        .map(|c| Clock { name: c.name.clone(), dist: c.distribution.clone() })
        .collect();

    let loc_index = |name: &str| -> Result<usize, ModelError> {
        locations
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| ModelError::Schema(format!("unknown location `{name}`")))
    };
    let mut jumps = Vec::with_capacity(doc.jumps.len());
    for (i, j) in doc.jumps.iter().enumerate() {
        let what = format!("jump #{i} `{}` -> `{}`", j.from, j.to);
        let guard = rect_from_map(&j.guard, &vars, &format!("{what} guard"))?;
        for key in j.reset.keys() {
            if !vars.iter().any(|v| v == key) {
                return Err(ModelError::Schema(format!("{what} reset: unknown variable `{key}`")));
            }
        }
        let reset: Vec<Reset> = vars
            .iter()
            .map(|v| match j.reset.get(v) {
                None | Some(ResetDoc::Identity) => Ok(Reset::Identity),
                Some(ResetDoc::To(doc)) => {
                    doc.to_interval(&format!("{what} reset of `{v}`")).map(Reset::To)
                }
            })
            .collect::<Result<_, _>>()?;
        let event = match &j.event {
            None => None,
            Some(name) => Some(
                clocks
                    .iter()
                    .position(|c| &c.name == name)
                    .ok_or_else(|| ModelError::Schema(format!("{what}: unknown clock `{name}`")))?,
            ),
        };
        jumps.push(JumpDef { source: loc_index(&j.from)?, target: loc_index(&j.to)?, guard, reset, event });
    }

    for name in &doc.goal.locations {
        loc_index(name)?;
    }
    let mut goal_rows: Vec<QConstraint> = Vec::new();
    for (i, c) in doc.goal.constraints.iter().enumerate() {
        let what = format!("goal constraint #{i}");
        let strict = match c.op.as_str() {
            "<=" => false,
            "<" => true,
            other => {
                return Err(ModelError::Schema(format!(
                    "{what}: unknown operator `{other}` (use \"<=\" or \"<\")"
                )))
            }
        };
        let mut coeffs = vec![Rat::from_integer(0.into()); vars.len()];
        for (name, v) in &c.coeffs {
            let pos = vars
                .iter()
                .position(|x| x == name)
                .ok_or_else(|| ModelError::Schema(format!("{what}: unknown variable `{name}`")))?;
            coeffs[pos] = v.finite(&format!("{what}, coefficient of `{name}`"))?;
        }
        let bound = c.bound.finite(&format!("{what} bound"))?;
        goal_rows.push(LinearConstraint { coeffs, bound, strict });
    }

    let settings = match doc.analysis {
        None => AnalysisSettings::default(),
        Some(a) => AnalysisSettings {
            tmax: a.tmax.map(|v| v.finite("analysis.tmax")).transpose()?,
            jumps: a.jumps,
            tint: a.tint.map(|v| v.finite("analysis.tint")).transpose()?,
            samples: a.samples,
            seed: a.seed,
            fm_mode: a.fm.as_deref().map(parse_fm_mode).transpose()?,
            adapt_bounds: a.adapt_bounds,
        },
    };

    Ok(ParsedModel {
        rac: Rac { vars, locations, jumps, clocks },
        goal: GoalSpec { locations: doc.goal.locations, constraints: goal_rows },
        settings,
    })
}

/// Parse a model document from a string.
pub fn parse_model_str(text: &str) -> Result<ParsedModel, ModelError> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    convert(doc)
}

/// Parse a model document from a file.
pub fn parse_model(path: &Path) -> Result<ParsedModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model_str(&text)
}

/// Violations rendered for error reporting.
pub fn render_violations(violations: &[Violation]) -> String {
    violations.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n")
}

// ---------------------------------------------------------------------------
// Reach-tree dumps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintDump {
    /// Exact rationals, one per dimension, as `p/q` strings.
    pub coeffs: Vec<String>,
    pub op: String,
    pub bound: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNodeDump {
    pub index: usize,
    pub depth: usize,
    pub location: String,
    pub path: String,
    pub goal: bool,
    pub constraints: Vec<ConstraintDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEdgeDump {
    pub from: usize,
    pub to: usize,
    pub jump: usize,
    pub event: Option<String>,
}

/// JSON dump of a reach forest: exact node constraints plus tree structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDump {
    pub tmax: String,
    pub jumps: u32,
    /// Dimension names: variables, the global timer, stopwatches.
    pub dims: Vec<String>,
    pub nodes: Vec<TreeNodeDump>,
    pub edges: Vec<TreeEdgeDump>,
}

fn rat_to_string(r: &Rat) -> String {
    r.to_string()
}

fn constraint_to_dump(c: &QConstraint) -> ConstraintDump {
    ConstraintDump {
        coeffs: c.coeffs.iter().map(rat_to_string).collect(),
        op: if c.strict { "<".into() } else { "<=".into() },
        bound: rat_to_string(&c.bound),
    }
}

pub fn constraint_from_dump(d: &ConstraintDump) -> Result<QConstraint, ModelError> {
    let coeffs = d
        .coeffs
        .iter()
        .map(|s| parse_number(s).map_err(ModelError::Schema)?.finite("coefficient"))
        .collect::<Result<Vec<_>, _>>()?;
    let bound = parse_number(&d.bound).map_err(ModelError::Schema)?.finite("bound")?;
    let strict = match d.op.as_str() {
        "<=" => false,
        "<" => true,
        other => return Err(ModelError::Schema(format!("unknown operator `{other}`"))),
    };
    Ok(LinearConstraint { coeffs, bound, strict })
}

impl TreeDump {
    /// Rebuild the exact polytope of a dumped node.
    pub fn node_polytope(&self, index: usize) -> Result<QPolytope, ModelError> {
        let node = self
            .nodes
            .iter()
            .find(|n| n.index == index)
            .ok_or_else(|| ModelError::Schema(format!("no node with index {index}")))?;
        let rows = node
            .constraints
            .iter()
            .map(constraint_from_dump)
            .collect::<Result<Vec<_>, _>>()?;
        QPolytope::from_rows(self.dims.len(), rows)
            .map_err(|e| ModelError::Schema(format!("node {index}: {e}")))
    }
}

/// Dump a forest of reach trees with one global index space (tree order,
/// breadth-first within each tree, exactly as built).
pub fn dump_forest(
    u: &UnrolledRac,
    trees: &[ReachTree],
    goal_indices: &[usize],
    tmax: &Rat,
) -> TreeDump {
    let mut dims: Vec<String> = u.model.vars.clone();
    dims.push("T".into());
    for k in 0..u.d_r_u() {
        dims.push(format!("mu:{}", u.copy_name(k)));
    }
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut offset = 0usize;
    for tree in trees {
        for (i, node) in tree.nodes.iter().enumerate() {
            let uloc = &u.locs[node.state.loc];
            let index = offset + i;
            nodes.push(TreeNodeDump {
                index,
                depth: node.depth,
                location: u.model.locations[uloc.orig].name.clone(),
                path: uloc.path.clone(),
                goal: goal_indices.contains(&index),
                constraints: node.state.poly.constraints().iter().map(constraint_to_dump).collect(),
            });
        }
        for &(from, jump, to) in &tree.edges {
            edges.push(TreeEdgeDump {
                from: offset + from,
                to: offset + to,
                jump: u.jumps[jump].orig,
                event: u.jumps[jump].event.map(|c| u.copy_name(u.copy_index(c))),
            });
        }
        offset += tree.nodes.len();
    }
    TreeDump { tmax: rat_to_string(tmax), jumps: u.jmp, dims, nodes, edges }
}
