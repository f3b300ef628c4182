//! Resonances, mode patterns and information-theoretic diagnostics of
//! deformed (elliptic) dielectric microcavities.
//!
//! * [`geometry`]: the area-preserving ellipse family and its boundary elements.
//! * [`two_level`]: the effective two-level non-Hermitian model.
//! * [`bem`]: boundary element solver for closed (Dirichlet) and open (TM) modes.
//! * [`mode_field`]: evaluation meshes and normalized intensity patterns.
//! * [`entropy`]: relative entropy, Shannon entropies and Lamb shifts.
//! * [`tracking`]: deformation sweeps, level tracking and regime detection.

pub mod bem;
pub mod complex_serde;
pub mod entropy;
pub mod error;
pub mod geometry;
pub mod mode_field;
pub mod special;
pub mod summation;
pub mod tracking;
pub mod two_level;

pub use error::{CavityError, Result};
