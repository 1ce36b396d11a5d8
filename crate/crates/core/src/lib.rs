//! Numerical laboratory for projective dynamics: homogeneous force fields,
//! screens and central projection, constrained motion, time reparametrization
//! and the correspondences between integrable systems on quadrics.

pub mod dynamics;
pub mod error;
pub mod forces;
pub mod geometry;
pub mod instances;
pub mod problems;
pub mod projective;
pub mod screens;
pub mod sl2;
pub mod suite;

pub use error::{Error, Result};
