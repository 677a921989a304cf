use thiserror::Error;

use crate::universe::{ChoiceSet, Problem};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("universe must contain at least one alternative")]
    EmptyUniverse,
    #[error("universe has {0} alternatives; at most {max} are supported", max = crate::universe::MAX_ALTERNATIVES)]
    TooManyAlternatives(usize),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("ordering is not a permutation of 0..{n}")]
    NotAPermutation { n: usize },
    #[error("expected {expected} priority orderings, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("capacity {capacity} outside 1..={n}")]
    CapacityOutOfRange { capacity: usize, n: usize },
    #[error("choice set is empty or outside the universe")]
    InvalidSet,
    #[error("problem ({set:?}, {capacity}) is outside the table's domain")]
    OutsideDomain { set: ChoiceSet, capacity: usize },
    #[error("table has no entry for problem {0:?}")]
    MissingEntry(Problem),
    #[error("entry for {problem:?} is invalid: {reason}")]
    InvalidEntry { problem: Problem, reason: &'static str },
    #[error("revealed preference requires capacity >= {min}, got {capacity}")]
    RevealedCapacity { capacity: usize, min: usize },
    #[error("table is not capacity-filling at {0:?}")]
    NotCapacityFilling(Problem),
    #[error("extraction failed building ordering {ordering}, position {position}: expected a single new alternative, found {found:?}")]
    ExtractionStep {
        ordering: usize,
        position: usize,
        found: ChoiceSet,
    },
    #[error("revealed preference at capacity {capacity} is cyclic")]
    CyclicRevealedPreference { capacity: usize },
    #[error("extracted structure disagrees with the table at {problem:?}: table {expected:?}, rebuilt {rebuilt:?}")]
    ValidationMismatch {
        problem: Problem,
        expected: ChoiceSet,
        rebuilt: ChoiceSet,
    },
    #[error("table is not a materialization of the given profile (first difference at {0:?})")]
    NotMaterialization(Problem),
    #[error("universe sizes differ: {left} vs {right}")]
    UniverseMismatch { left: usize, right: usize },
    #[error("object space must be nonempty with distinct names not equal to the null object")]
    InvalidObjects,
    #[error("preference relation is not a ranking of every object plus the null object")]
    InvalidPreference,
    #[error("capacity {capacity} for object {object} outside 0..={n}")]
    ObjectCapacity {
        object: usize,
        capacity: usize,
        n: usize,
    },
    #[error("problem shape does not match: {0}")]
    ShapeMismatch(&'static str),
    #[error("deferred acceptance exceeded {0} rounds")]
    RoundLimit(usize),
    #[error("precondition failed: {0}")]
    Precondition(String),
}
