//! Connection (rotor) representation of the Regge action on 4-simplices.
//!
//! The crate covers the chiral rotor algebra, 4-simplex and lattice geometry,
//! the length and connection forms of the bisimplex action with their branch
//! bookkeeping, the stationary connections, and the connection integrals that
//! produce Bessel-function suppression factors.

pub mod action;
pub mod algebra;
pub mod cx;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod lattice;
pub mod onshell;
pub mod pathint;
pub mod quad;
pub mod selftest;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
