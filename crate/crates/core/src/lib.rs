//! Toric Kähler spaces from polyhedral data.
//!
//! A spec (primitive integer normals u_j, real offsets λ_j) cuts out the
//! polyhedral set P = {η : ⟨η, u_j⟩ ≥ λ_j}. This crate certifies the
//! description by linear programming, enumerates the open faces of P,
//! assembles the quotient presentation of the associated toric space,
//! and evaluates the explicit potentials of its Kähler structures on
//! the moment side:
//!
//! - the flat-reduction dual potential Σ ℓ_j log ℓ_j and its h-transform
//!   Σ (λ_j log ℓ_j + ⟨η, u_j⟩),
//! - the projective-reduction variant with the simplex deficit term,
//! - the per-face stratum potentials in chart coordinates,
//!
//! all backed by a generic Legendre-transform engine so every closed
//! form can be cross-checked against an independent route.

pub mod convex;
pub mod lattice;
pub mod lp;
pub mod polytope;
pub mod potentials;
pub mod quotient;
pub mod tol;

pub use convex::{ConvexPotential, SeparableDual};
pub use polytope::{Face, PointClass, ToricSpec, ValidationReport};
pub use potentials::{MetricReport, ProjectiveParams};
pub use quotient::{QuotientData, StratumVerdict};
