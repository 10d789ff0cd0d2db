//! Exact scattering diagrams on the stability slice `U = {x² + 2y > 0}` of
//! the projective plane, and the refined invariants of moduli of sheaves
//! read off from them.
//!
//! The pipeline runs bottom-up through the modules:
//! [`exactalg`] provides exact coefficients, [`qtorus`] the truncated
//! quantum torus, [`localscat`] the consistent completion at one point,
//! [`diagram`] the global sweep, [`stability`] the charge lattice and
//! [`invariants`] the extraction of Poincaré polynomials.

pub mod diagram;
pub mod error;
pub mod exactalg;
pub mod invariants;
pub mod localscat;
pub mod qtorus;
pub mod stability;
pub mod verify;

pub use error::{Error, Result};
