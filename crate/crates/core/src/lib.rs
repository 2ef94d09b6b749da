//! Symbolic variational calculus on jet bundles, with reduction of
//! invariant local functionals under a symmetry group.

pub mod bracket;
pub mod cli;
pub mod error;
pub mod expr;
pub mod jet;
pub mod numeric;
pub mod par;
pub mod problem;
pub mod reduction;

#[cfg(test)]
mod fixtures;

pub use error::{Error, Result};
