//! Lexicographic choice under variable capacities.
//!
//! Choice rules are materialized into exhaustive [`ChoiceTable`]s over every
//! problem `(S, q)`; axiom checkers, extractors and the deferred-acceptance
//! engine all work on tables.

pub mod axioms;
pub mod error;
pub mod feasibility;
pub mod fixtures;
pub mod identify;
pub mod mechanism;
pub mod rules;
pub mod universe;

pub use error::{Error, Result};
pub use rules::{
    materialize, CapacityWiseLists, ChoiceRule, ChoiceTable, PriorityOrdering, PriorityProfile,
};
pub use universe::{enumerate_problems, ChoiceSet, Problem, Universe, MAX_ALTERNATIVES};
