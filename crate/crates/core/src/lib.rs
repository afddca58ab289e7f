//! Numerical laboratory for partially hyperbolic diffeomorphisms of T^2, T^3 and T^4.
//!
//! The crate is layered bottom-up: flat-torus geometry, a library of explicit
//! maps with analytic Jacobians, splitting estimation, strong foliations,
//! us-path accessibility, central-expansion certificates, set-oriented global
//! dynamics, and a configuration-driven experiment runner.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accessibility;
pub mod error;
pub mod experiment;
pub mod foliation;
pub mod global;
pub mod linalg;
pub mod maps;
pub mod render;
pub mod sh;
pub mod splitting;
pub mod torus;

pub use error::{Error, Result};
pub use maps::{MapSpec, ToralMap};
pub use torus::TorusPoint;
