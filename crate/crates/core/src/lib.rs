//! Frenet-Serret geometry of null curves in 2+1 and 3+1 Minkowski space:
//! frame extraction and reconstruction, the null-preserving deformation
//! calculus, curvature-dependent particle models and their Noether charges.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builtin;
pub mod curve;
pub mod error;
pub mod field;
pub mod jet;
pub mod minkowski;
pub mod models;
pub mod noether;
pub mod ode;
pub mod profile;
pub mod quadrature;
pub mod reconstruct;
pub mod stencil;
pub mod variation;
pub mod vector_jet;

pub use error::{Error, Result};
pub use minkowski::{BiVector, Dim, FourVector};
