//! Symmetry reduction of invariant local functions and forms.
//!
//! An [`AdaptedChart`] splits the base into orbit coordinates `x̂` and
//! invariant coordinates `y`. Invariant objects are rewritten in adapted jet
//! coordinates, restricted to jets of invariant sections (every jet
//! coordinate with an `x̂` index vanishes) and read off on the reduced chart
//! with base `y`. Forms are first contracted with a [`QChain`].

mod adapted;
mod reduced;
mod setup;

pub use adapted::AdaptedChart;
pub use reduced::{ReducedBracket, Representative};
pub use setup::{QChain, ReductionSetup};

#[cfg(test)]
mod tests;
