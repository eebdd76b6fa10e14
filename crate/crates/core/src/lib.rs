//! Grad-div stabilized equal-order (Q1-Q1, Q2-Q2) finite elements for the
//! Oseen and steady Navier-Stokes equations.
//!
//! The crate covers the whole pipeline: structured quadrilateral meshes for
//! the lid-driven cavity and the backward-facing step, local-projection
//! pressure stabilization, sparse assembly of the saddle-point blocks, full
//! GMRES with block upper-triangular preconditioners (ideal Schur complement,
//! the augmented-Lagrangian-type `Ŝ = (ν+γ)⁻¹M + C`, and a modified
//! pressure convection-diffusion approximation), a Picard driver, and dense
//! diagnostic probes for the Schur complement spectrum and field-of-values
//! bounds.

pub mod assembly;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod fe;
pub mod io;
pub mod krylov;
pub mod linalg;
pub mod mesh;
pub mod picard;

pub use error::{Error, Result};
