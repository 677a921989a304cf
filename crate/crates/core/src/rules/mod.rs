//! Priority orderings, lexicographic and responsive choice, capacity-wise
//! lexicographic lists, and materialization of rules into [`ChoiceTable`]s.

mod boston;
mod table;

pub use boston::{
    build_compromise, build_open_walk, build_rotating, build_walk_open, satisfies_boston_requirement,
    satisfies_paired_zones, BostonRule, Zone,
};
pub use table::{rejected, ChoiceTable};

use std::fmt;

use crate::error::{Error, Result};
use crate::universe::{ChoiceSet, Problem, Universe};

/// A strict total order over the universe; position 0 is the highest priority.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PriorityOrdering {
    rank: Vec<u8>,
    position: Vec<u8>,
}

impl PriorityOrdering {
    pub fn new(rank: Vec<usize>) -> Result<Self> {
        let n = rank.len();
        let mut position = vec![u8::MAX; n];
        for (pos, &alt) in rank.iter().enumerate() {
            if alt >= n || position[alt] != u8::MAX {
                return Err(Error::NotAPermutation { n });
            }
            position[alt] = pos as u8;
        }
        Ok(Self {
            rank: rank.into_iter().map(|a| a as u8).collect(),
            position,
        })
    }

    /// `0 ≻ 1 ≻ ... ≻ n-1`.
    pub fn identity(n: usize) -> Self {
        Self::new((0..n).collect()).expect("identity is a permutation")
    }

    pub fn from_labels(u: &Universe, labels: &[&str]) -> Result<Self> {
        if labels.len() != u.n() {
            return Err(Error::NotAPermutation { n: u.n() });
        }
        let rank = labels
            .iter()
            .map(|l| u.index_of(l))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rank)
    }

    pub fn n(&self) -> usize {
        self.rank.len()
    }

    /// Alternatives from highest to lowest priority.
    pub fn ranking(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.rank.iter().map(|&a| a as usize)
    }

    pub fn position(&self, alt: usize) -> usize {
        self.position[alt] as usize
    }

    pub fn prefers(&self, a: usize, b: usize) -> bool {
        self.position[a] < self.position[b]
    }

    /// Highest-priority member of `set`.
    pub fn max_in(&self, set: ChoiceSet) -> Option<usize> {
        if set.is_empty() {
            return None;
        }
        self.ranking().find(|&a| set.contains(a))
    }

    /// The `min(|set|, k)` highest-priority members of `set`.
    pub fn top(&self, set: ChoiceSet, k: usize) -> ChoiceSet {
        self.ranking()
            .filter(|&a| set.contains(a))
            .take(k)
            .collect()
    }

    /// Members of `set` in priority order.
    pub fn restricted(&self, set: ChoiceSet) -> Vec<usize> {
        self.ranking().filter(|&a| set.contains(a)).collect()
    }

    pub fn format(&self, u: &Universe) -> String {
        let labels: Vec<&str> = self.ranking().map(|a| u.label(a)).collect();
        labels.join(">")
    }
}

impl fmt::Debug for PriorityOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.ranking()).finish()
    }
}

/// Exactly `n` priority orderings, the `t`-th used for the `t`-th pick.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PriorityProfile {
    orderings: Vec<PriorityOrdering>,
}

impl PriorityProfile {
    pub fn new(orderings: Vec<PriorityOrdering>) -> Result<Self> {
        let n = orderings.first().map_or(0, PriorityOrdering::n);
        if n == 0 || orderings.len() != n {
            return Err(Error::WrongLength {
                expected: n,
                got: orderings.len(),
            });
        }
        if orderings.iter().any(|o| o.n() != n) {
            return Err(Error::NotAPermutation { n });
        }
        Ok(Self { orderings })
    }

    /// `(≻, ≻, ..., ≻)`.
    pub fn constant(ordering: PriorityOrdering) -> Self {
        let n = ordering.n();
        Self {
            orderings: vec![ordering; n],
        }
    }

    pub fn n(&self) -> usize {
        self.orderings.len()
    }

    pub fn orderings(&self) -> &[PriorityOrdering] {
        &self.orderings
    }

    pub fn get(&self, t: usize) -> &PriorityOrdering {
        &self.orderings[t]
    }

    pub fn into_orderings(self) -> Vec<PriorityOrdering> {
        self.orderings
    }
}

/// For each capacity `q`, a list of exactly `q` priority orderings.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CapacityWiseLists {
    per_capacity: Vec<Vec<PriorityOrdering>>,
}

impl CapacityWiseLists {
    pub fn new(per_capacity: Vec<Vec<PriorityOrdering>>) -> Result<Self> {
        let n = per_capacity.len();
        for (i, list) in per_capacity.iter().enumerate() {
            if list.len() != i + 1 {
                return Err(Error::WrongLength {
                    expected: i + 1,
                    got: list.len(),
                });
            }
            if list.iter().any(|o| o.n() != n) {
                return Err(Error::NotAPermutation { n });
            }
        }
        if n == 0 {
            return Err(Error::EmptyUniverse);
        }
        Ok(Self { per_capacity })
    }

    /// Lists for every capacity that are prefixes of one profile.
    pub fn from_profile(profile: &PriorityProfile) -> Self {
        let per_capacity = (1..=profile.n())
            .map(|q| profile.orderings()[..q].to_vec())
            .collect();
        Self { per_capacity }
    }

    /// Responsive to a possibly different ordering at each capacity.
    pub fn capacity_wise_responsive(orderings: &[PriorityOrdering]) -> Result<Self> {
        Self::new(
            orderings
                .iter()
                .enumerate()
                .map(|(i, o)| vec![o.clone(); i + 1])
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.per_capacity.len()
    }

    /// The list used at capacity `q` (1-based).
    pub fn list(&self, q: usize) -> &[PriorityOrdering] {
        &self.per_capacity[q - 1]
    }

    pub fn lists(&self) -> &[Vec<PriorityOrdering>] {
        &self.per_capacity
    }
}

/// Sequential picking: the `t`-th ordering picks its favourite among the
/// alternatives still remaining, stopping after `q` picks or when `set` is exhausted.
pub fn lex_pass<'a, I>(orderings: I, set: ChoiceSet, q: usize) -> ChoiceSet
where
    I: IntoIterator<Item = &'a PriorityOrdering>,
{
    let mut remaining = set;
    let mut chosen = ChoiceSet::EMPTY;
    for ordering in orderings.into_iter().take(q) {
        let Some(a) = ordering.max_in(remaining) else {
            break;
        };
        chosen.insert(a);
        remaining.remove(a);
    }
    chosen
}

pub fn lex_choose(profile: &PriorityProfile, p: Problem) -> ChoiceSet {
    lex_pass(profile.orderings(), p.set, p.capacity)
}

pub fn responsive_choose(ordering: &PriorityOrdering, p: Problem) -> ChoiceSet {
    ordering.top(p.set, p.capacity)
}

pub fn cwlex_choose(lists: &CapacityWiseLists, p: Problem) -> ChoiceSet {
    lex_pass(lists.list(p.capacity), p.set, p.capacity)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChoiceRule {
    Lexicographic(PriorityProfile),
    Responsive(PriorityOrdering),
    CapacityWise(CapacityWiseLists),
    Table(ChoiceTable),
}

impl ChoiceRule {
    pub fn n(&self) -> usize {
        match self {
            ChoiceRule::Lexicographic(p) => p.n(),
            ChoiceRule::Responsive(o) => o.n(),
            ChoiceRule::CapacityWise(l) => l.n(),
            ChoiceRule::Table(t) => t.n(),
        }
    }

    pub fn choose(&self, p: Problem) -> ChoiceSet {
        match self {
            ChoiceRule::Lexicographic(profile) => lex_choose(profile, p),
            ChoiceRule::Responsive(ordering) => responsive_choose(ordering, p),
            ChoiceRule::CapacityWise(lists) => cwlex_choose(lists, p),
            ChoiceRule::Table(table) => table.get(p.set, p.capacity),
        }
    }
}

/// Evaluate `rule` on every problem of `u`.
pub fn materialize(rule: &ChoiceRule, u: &Universe) -> Result<ChoiceTable> {
    if rule.n() != u.n() {
        return Err(Error::UniverseMismatch {
            left: rule.n(),
            right: u.n(),
        });
    }
    if let ChoiceRule::Table(t) = rule {
        return Ok(t.clone().relabel(u.clone()));
    }
    ChoiceTable::from_fn(u.clone(), |p| rule.choose(p))
}
