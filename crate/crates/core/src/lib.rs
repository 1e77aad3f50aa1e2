//! Numerical laboratory for the median quasi-state on the unit 2-sphere.
//!
//! The sphere carries the area form normalized to total measure 1. For a
//! function sampled on an icosphere mesh, the crate builds the
//! measure-augmented contour tree, locates its median (the unique point all
//! of whose complement branches carry measure at most 1/2), and reads off
//! the quasi-state `zeta` as the median level. On top of that sit the
//! Poisson-bracket calculus, the bracket inequality
//! `pi(F,G) <= sqrt(2 C |{F,G}|)`, Hamiltonian flows with a conserved
//! generator, the pointer-measurement model, and displaceable partitions of
//! unity.

pub mod checklist;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod partitions;
pub mod quasistate;
pub mod reeb;
mod vec3;

pub use error::Error;
pub use vec3::Vec3;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
