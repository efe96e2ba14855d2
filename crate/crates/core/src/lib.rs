//! Polygonal billiards with contracting reflection laws.
//!
//! The phase space is `M = (0,|∂P|) × (-π/2, π/2)`: a collision is a boundary
//! arclength together with the outgoing angle measured from the inward normal.
//! The billiard map composes the free flight with a reflection law
//! `f : (-π/2,π/2) → (-π/2,π/2)` applied to the specular angle. For
//! contracting laws (`sup|f'| < 1`) the map dissipates phase-space area and
//! its invariant sets carry a dominated splitting; this crate provides the
//! constructions needed to probe that regime numerically and, where the
//! objects are algebraic, exactly.
//!
//! Module map:
//! - [`geometry`]: polygons, arclength parametrization, side angles, visibility.
//! - [`reflection`]: reflection laws as evaluable objects with derivative and
//!   contraction bound.
//! - [`billiard`]: the billiard map, orbits, the derivative cocycle, singular
//!   sets and their pullbacks.
//! - [`slap`]: the degenerate law `f ≡ 0` as a boundary self-map and the
//!   orthogonal vertex connection search.
//! - [`regular`]: reduced phase space of regular d-gons, reduced slap maps,
//!   exact orbits in Q(β), even-d trapping regions.
//! - [`algebra`]: integer Chebyshev polynomials, minimal polynomials of
//!   cos(2π/n), and exact arithmetic in Q[β].
//! - [`analysis`]: hyperbolicity estimators, theorem-hypothesis checkers,
//!   growth checks and occupation histograms.
//! - [`rectangle`]: block decomposition and trapping/uniform-hyperbolicity
//!   thresholds for rectangular tables.

pub mod algebra;
pub mod analysis;
pub mod billiard;
pub mod geometry;
pub mod rectangle;
pub mod reflection;
pub mod regular;
pub mod slap;

pub use billiard::{Cocycle, FlightResult, Orbit, OrbitEnd, PhasePoint, SingularCurve};
pub use geometry::{Point, Polygon, PolygonSpec};
pub use reflection::{LawSpec, ReflectionLaw};

/// Global geometric tolerance for point-on-edge, parallelism and vertex-hit
/// classification. Far below any feature scale of desk-size tables; hits
/// within this distance of a vertex are classified as singular.
pub const TOL_GEOM: f64 = 1e-12;
