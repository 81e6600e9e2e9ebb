//! Cost-optimal planning as satisfiability.
//!
//! The pipeline: compute a completeness-threshold horizon from state-space
//! topology, compile the cost-bounded problem into a counter-augmented
//! factored transition system, encode the bounded-horizon reachability
//! question as CNF, and run an any-time loop that keeps lowering the cost
//! bound until an UNSAT answer certifies optimality.

pub mod anytime;
pub mod augment;
pub mod encode;
pub mod files;
pub mod genrand;
pub mod model;
pub mod report;
pub mod samples;
pub mod sat;
pub mod topology;

pub mod hashutil;

pub(crate) mod space;

#[cfg(test)]
pub(crate) mod oracles;
#[cfg(test)]
pub(crate) mod testutil;
