//! Immersed isogeometric Reissner-Mindlin shell dynamics on trimmed parametric
//! domains, with row-sum mass lumping and polynomial-extension stabilization of
//! small cut elements.

pub mod assembly;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod jet;
pub mod quadrature;
pub mod sparse;
pub mod spectrum;
pub mod splines;
pub mod stabilization;
pub mod trimming;

pub use error::{Error, Result};
