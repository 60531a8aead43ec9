//! Positive Datalog: the data model, the problem-directory format, grounding
//! and Boolean fixpoint evaluation.

mod fixpoint;
mod ground;
mod model;
pub mod parse;

pub use fixpoint::{boolean_fixpoint, boolean_fixpoint_semi_naive, check_solution, SolutionCheck};
pub use ground::{ground, ground_indexed, FactIndex, GroundClause};
pub(crate) use ground::{for_each_binding, instantiate};
pub use model::*;
pub use parse::{parse_problem, parse_problem_text, parse_problem_with_rules, write_problem, write_rules};
