//! Independent oracles and instance generators for tests.
//!
//! The oracles here avoid the indexed join and the max-product rounds used
//! by the evaluator: rules are grounded by substituting every constant for
//! every variable, and derivation trees are enumerated level by level.

pub mod checks;
mod cnf;
pub mod fixtures;
mod oracle;
mod random;

pub use cnf::{
    encode_3cnf, variable_rule_id, Cnf, CLAUSE_RULE, ERROR_RULE, SENTINEL, SENTINEL_RULE,
};
pub use oracle::{
    brute_force_all_trees, brute_force_best_trees, brute_force_selection, brute_force_trees,
    brute_force_value, tree_value,
    naive_closure, CountVector, DEFAULT_TREE_LIMIT,
};
pub use random::{random_instance, InstanceParams};
