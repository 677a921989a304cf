use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::universe::{enumerate_problems, ChoiceSet, Problem, Universe};

// below this many sets materialization stays on the calling thread
const PARALLEL_THRESHOLD: usize = 256;

/// Exhaustive materialization of a choice rule: one entry per problem
/// `(S, q)`, indexed by `(S - 1) * n + (q - 1)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ChoiceTable {
    universe: Universe,
    entries: Vec<ChoiceSet>,
}

impl ChoiceTable {
    /// Build a table by evaluating `f` on every problem. Entries must satisfy
    /// `C(S,q) ⊆ S` and `|C(S,q)| <= q`.
    pub fn from_fn<F>(universe: Universe, f: F) -> Result<Self>
    where
        F: Fn(Problem) -> ChoiceSet + Sync,
    {
        let n = universe.n();
        let mut entries = vec![ChoiceSet::EMPTY; universe.problem_count()];
        let fill = |(i, chunk): (usize, &mut [ChoiceSet])| {
            let set = ChoiceSet::from_bits(i as u32 + 1);
            for (q0, slot) in chunk.iter_mut().enumerate() {
                *slot = f(Problem::new(set, q0 + 1));
            }
        };
        if universe.set_count() >= PARALLEL_THRESHOLD {
            entries.par_chunks_mut(n).enumerate().for_each(fill);
        } else {
            entries.chunks_mut(n).enumerate().for_each(fill);
        }
        let table = Self { universe, entries };
        table.validate()?;
        Ok(table)
    }

    /// Build a table from explicit records; every problem must appear exactly once.
    pub fn from_entries<I>(universe: Universe, records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Problem, ChoiceSet)>,
    {
        let n = universe.n();
        let mut slots: Vec<Option<ChoiceSet>> = vec![None; universe.problem_count()];
        for (problem, chosen) in records {
            let valid = !problem.set.is_empty()
                && universe.contains_set(problem.set)
                && (1..=n).contains(&problem.capacity);
            if !valid {
                return Err(Error::OutsideDomain {
                    set: problem.set,
                    capacity: problem.capacity,
                });
            }
            let slot = &mut slots[index(n, problem)];
            if slot.is_some() {
                return Err(Error::InvalidEntry {
                    problem,
                    reason: "duplicate record",
                });
            }
            *slot = Some(chosen);
        }
        let mut entries = Vec::with_capacity(slots.len());
        for (problem, slot) in enumerate_problems(&universe).zip(slots) {
            entries.push(slot.ok_or(Error::MissingEntry(problem))?);
        }
        let table = Self { universe, entries };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        for (problem, chosen) in self.iter() {
            if !chosen.is_subset(problem.set) {
                return Err(Error::InvalidEntry {
                    problem,
                    reason: "choice is not a subset of the choice set",
                });
            }
            if chosen.len() > problem.capacity {
                return Err(Error::InvalidEntry {
                    problem,
                    reason: "choice exceeds the capacity",
                });
            }
        }
        Ok(())
    }

    pub(crate) fn relabel(mut self, universe: Universe) -> Self {
        debug_assert_eq!(universe.n(), self.n());
        self.universe = universe;
        self
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn n(&self) -> usize {
        self.universe.n()
    }

    pub fn entries(&self) -> &[ChoiceSet] {
        &self.entries
    }

    /// `C(S, q)`. Panics outside the domain; see [`ChoiceTable::choose`].
    #[inline]
    pub fn get(&self, set: ChoiceSet, q: usize) -> ChoiceSet {
        self.entries[index(self.n(), Problem::new(set, q))]
    }

    /// `C(S, q)` with the empty-set and zero-capacity conventions `C(∅, q) = C(S, 0) = ∅`.
    #[inline]
    pub fn get_or_empty(&self, set: ChoiceSet, q: usize) -> ChoiceSet {
        if set.is_empty() || q == 0 {
            ChoiceSet::EMPTY
        } else {
            self.get(set, q)
        }
    }

    pub fn choose(&self, p: Problem) -> Result<ChoiceSet> {
        self.check_domain(p)?;
        Ok(self.get(p.set, p.capacity))
    }

    /// `R(S, q) = S \ C(S, q)`.
    pub fn rejected(&self, p: Problem) -> Result<ChoiceSet> {
        Ok(p.set.difference(self.choose(p)?))
    }

    fn check_domain(&self, p: Problem) -> Result<()> {
        if p.set.is_empty() || !self.universe.contains_set(p.set) || p.capacity == 0 || p.capacity > self.n() {
            return Err(Error::OutsideDomain {
                set: p.set,
                capacity: p.capacity,
            });
        }
        Ok(())
    }

    /// Entries in canonical problem order.
    pub fn iter(&self) -> impl Iterator<Item = (Problem, ChoiceSet)> + '_ {
        enumerate_problems(&self.universe).zip(self.entries.iter().copied())
    }

    /// First problem, in canonical order, where the two tables disagree.
    pub fn first_difference(&self, other: &ChoiceTable) -> Option<Problem> {
        if self.n() != other.n() {
            return Some(Problem::new(self.universe.full_set(), 1));
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .position(|(a, b)| a != b)
            .map(|i| problem_at(self.n(), i))
    }

    /// Same choices on every problem (labels ignored).
    pub fn same_choices(&self, other: &ChoiceTable) -> bool {
        self.entries == other.entries
    }
}

fn index(n: usize, p: Problem) -> usize {
    (p.set.bits() as usize - 1) * n + (p.capacity - 1)
}

fn problem_at(n: usize, i: usize) -> Problem {
    Problem::new(ChoiceSet::from_bits((i / n + 1) as u32), i % n + 1)
}

/// `R(S, q)` for a problem in `table`'s domain.
pub fn rejected(table: &ChoiceTable, p: Problem) -> Result<ChoiceSet> {
    table.rejected(p)
}
