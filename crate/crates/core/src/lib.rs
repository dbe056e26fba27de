//! Conjugate heat equation coupled with Ricci flow on model geometries.
//!
//! The crate solves `(∂_t + Δ - R) u = 0` backward from terminal data along
//! closed-form or numerically evolved Ricci flows, evaluates the gradient and
//! Hessian estimate quantities, checks the exact evolution identities behind
//! them as refinement residuals, and tracks Perelman's W-entropy.

pub mod analysis;
pub mod entropy;
pub mod error;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod order;
pub mod profiles;
pub mod solver;
pub mod stencil;

pub use error::{Error, Result};
pub use field::{FrameShape, FrameTensorField, FrameVectorField, MaskedField, MaskedTensor, ScalarField};
pub use grid::Grid;
