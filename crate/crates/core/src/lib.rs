//! Learning Datalog programs from input/output examples.
//!
//! Every candidate rule gets a weight in `[0, 1]`. Under the Viterbi
//! semiring a derived tuple's value is the best product of rule weights over
//! its derivation trees, which makes tuple values differentiable in the
//! weights. [`optimizer::search`] drives the weights toward the labeled
//! outputs with Newton root-finding steps interleaved with simulated
//! annealing, then reads a classical program off the provenance of the
//! labeled tuples and re-checks it with the Boolean evaluator.
//!
//! Modules:
//!
//! - [`datalog`]: data model, file formats, grounding, Boolean fixpoint.
//! - [`viterbi`]: weighted evaluation with provenance and gradients.
//! - [`optimizer`]: loss, Newton step, annealing, the search loop.
//! - [`rulegen`]: chain-pattern seeds and k-augmentation.
//! - [`testkit`]: brute-force oracles, the 3-CNF encoder, random instances.
//! - [`portfolio`]: many seeded searches run in parallel, first success wins.

pub mod datalog;
pub mod error;
pub mod exec;
pub mod optimizer;
pub mod portfolio;
pub mod rulegen;
pub mod testkit;
pub mod viterbi;

pub use error::{Error, Result};
pub use exec::Exec;
