//! Maximum reachability probabilities for rectangular automata with random
//! clocks, computed by forward polyhedral reachability, projection onto the
//! stochastic dimensions, and adaptive Monte Carlo integration.
//!
//! The geometry kernel ([`polytope`], [`elimination`]) is generic over the
//! scalar field; the analysis pipeline instantiates it at exact rationals
//! ([`Rat`]) and crosses to floating point only at the integration boundary.

pub mod automaton;
pub mod elimination;
pub mod integrate;
pub mod model;
pub mod pipeline;
pub mod polytope;
pub mod reach;
pub mod scalar;
pub mod stochastics;

pub use scalar::{Rat, Scalar};

/// Exact-rational linear constraint, as used by the analysis pipeline.
pub type QConstraint = polytope::LinearConstraint<Rat>;
/// Exact-rational H-polytope.
pub type QPolytope = polytope::HPolytope<Rat>;
/// Exact-rational V-polytope.
pub type QVPolytope = polytope::VPolytope<Rat>;
/// Exact-rational bounding box.
pub type QBox = polytope::BoundingBox<Rat>;
