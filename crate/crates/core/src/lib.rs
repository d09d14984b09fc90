//! Asymptotic torsion and maximum of thin domains.

pub mod error;
pub mod fields;
pub mod expansion;
pub mod extrema;
pub mod geometry;
pub mod harness;
pub mod rigidity;
pub mod solvers;

pub use error::{Error, Result};
