//! Exact equilibrium computation for Fisher markets whose agents buy
//! bundles subject to linear covering constraints and minimize delay.
//!
//! All arithmetic is over arbitrary-precision rationals.

pub mod cli;
pub mod corpus;
pub mod format;
pub mod general_solver;
pub mod market_model;
pub mod rational_lp;
pub mod scheduling_solver;
pub mod submodular;
pub mod verifier;
