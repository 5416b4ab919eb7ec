//! Numerical toolkit for central sections of origin-symmetric convex bodies.
//!
//! The crate computes John ellipsoids of hyperplane sections, builds the
//! linear maps that carry one section onto another, samples the invariant
//! `t(θ, ξ) = ρ_{J(K∩ξ⊥)}(θ)·‖θ‖_K` and its level sets over the sphere, and
//! combines these into an ellipsoid certificate for the body.
//!
//! Module map:
//!
//! * [`geom`]: directions, frames, rotations, spherical grids.
//! * [`bodies`]: body models with gauge/radial/support evaluation.
//! * [`sections`]: central sections in frame coordinates.
//! * [`john`]: John ellipsoids via the polar of a minimum-volume enclosing
//!   ellipsoid.
//! * [`transport`]: section-to-section linear maps and their checks.
//! * [`levelset`]: invariant samples, level-set coverage, the `t₀` search.
//! * [`starbodies`]: the two star-body families and the identity certificate.
//! * [`busemann`]: the "all sections are ellipses" verifier.

pub mod bodies;
pub mod busemann;
pub mod error;
pub mod geom;
pub mod john;
pub mod levelset;
pub mod sections;
pub mod starbodies;
pub mod transport;

pub use bodies::{hausdorff, BodyModel, EllipsoidRep};
pub use error::{Error, Result};
pub use geom::{Direction, LinearMap, SectionFrame};
pub use john::JohnResult;
pub use levelset::{CoverageReport, InvariantSample};
pub use sections::SectionBody;
pub use starbodies::{Certificate, Verdict};
pub use transport::TransportMap;
