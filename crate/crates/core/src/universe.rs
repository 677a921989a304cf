//! Ground set, subsets, capacities and the canonical problem space.
//!
//! Alternatives are identified by their index `0..n`; labels only matter at
//! I/O boundaries. Subsets are bitmasks, so a universe is capped at
//! [`MAX_ALTERNATIVES`] to keep exhaustive tables in memory.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Largest supported universe.
pub const MAX_ALTERNATIVES: usize = 16;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Universe {
    labels: Vec<String>,
}

impl Universe {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        if labels.len() > MAX_ALTERNATIVES {
            return Err(Error::TooManyAlternatives(labels.len()));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { labels })
    }

    /// Universe labelled `a`, `b`, `c`, ...
    pub fn alphabetic(n: usize) -> Result<Self> {
        if n > 26 {
            return Err(Error::TooManyAlternatives(n));
        }
        Self::new((0..n).map(|i| ((b'a' + i as u8) as char).to_string()))
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn full_set(&self) -> ChoiceSet {
        ChoiceSet::full(self.n())
    }

    pub fn set_of(&self, labels: &[&str]) -> Result<ChoiceSet> {
        let mut set = ChoiceSet::EMPTY;
        for label in labels {
            set.insert(self.index_of(label)?);
        }
        Ok(set)
    }

    /// Number of nonempty subsets, `2^n - 1`.
    pub fn set_count(&self) -> usize {
        (1usize << self.n()) - 1
    }

    pub fn problem_count(&self) -> usize {
        self.set_count() * self.n()
    }

    /// `{a,b}` style rendering, members in index order.
    pub fn format_set(&self, set: ChoiceSet) -> String {
        let inner: Vec<&str> = set.iter().map(|i| self.label(i)).collect();
        format!("{{{}}}", inner.join(","))
    }

    pub fn contains_set(&self, set: ChoiceSet) -> bool {
        set.is_subset(self.full_set())
    }
}

impl fmt::Debug for Universe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Universe").field(&self.labels).finish()
    }
}

/// A subset of the universe, stored as a bitmask over alternative indices.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ChoiceSet(u32);

impl ChoiceSet {
    pub const EMPTY: ChoiceSet = ChoiceSet(0);

    pub const fn from_bits(bits: u32) -> Self {
        ChoiceSet(bits)
    }

    pub fn full(n: usize) -> Self {
        ChoiceSet(((1u64 << n) - 1) as u32)
    }

    pub fn singleton(index: usize) -> Self {
        ChoiceSet(1 << index)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut set = Self::EMPTY;
        for i in indices {
            set.insert(i);
        }
        set
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, index: usize) -> bool {
        self.0 >> index & 1 == 1
    }

    pub fn insert(&mut self, index: usize) {
        self.0 |= 1 << index;
    }

    pub fn remove(&mut self, index: usize) {
        self.0 &= !(1 << index);
    }

    pub fn with(self, index: usize) -> Self {
        ChoiceSet(self.0 | 1 << index)
    }

    pub fn without(self, index: usize) -> Self {
        ChoiceSet(self.0 & !(1 << index))
    }

    pub fn union(self, other: Self) -> Self {
        ChoiceSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        ChoiceSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        ChoiceSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Lowest member index.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> Members {
        Members(self.0)
    }

    /// Every subset of `self`, including the empty set, in ascending bitmask order.
    pub fn subsets(self) -> Subsets {
        Subsets {
            mask: self.0,
            next: Some(0),
        }
    }
}

impl fmt::Debug for ChoiceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for ChoiceSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::from_indices(iter)
    }
}

/// Iterator over member indices in ascending order.
#[derive(Debug, Clone)]
pub struct Members(u32);

impl Iterator for Members {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(i as usize)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Members {}

/// Submask enumeration in ascending order (`next = (cur - mask) & mask`).
#[derive(Debug, Clone)]
pub struct Subsets {
    mask: u32,
    next: Option<u32>,
}

impl Iterator for Subsets {
    type Item = ChoiceSet;

    fn next(&mut self) -> Option<ChoiceSet> {
        let cur = self.next?;
        let succ = cur.wrapping_sub(self.mask) & self.mask;
        self.next = (succ != 0).then_some(succ);
        Some(ChoiceSet(cur))
    }
}

/// A choice problem `(S, q)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Problem {
    pub set: ChoiceSet,
    pub capacity: usize,
}

impl Problem {
    pub fn new(set: ChoiceSet, capacity: usize) -> Self {
        Self { set, capacity }
    }

    /// Checked constructor against a universe.
    pub fn within(u: &Universe, set: ChoiceSet, capacity: usize) -> Result<Self> {
        if set.is_empty() || !u.contains_set(set) {
            return Err(Error::InvalidSet);
        }
        if capacity == 0 || capacity > u.n() {
            return Err(Error::CapacityOutOfRange {
                capacity,
                n: u.n(),
            });
        }
        Ok(Self { set, capacity })
    }
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {})", self.set, self.capacity)
    }
}

/// Every problem `(S, q)` with `S` nonempty and `1 <= q <= n`; sets by
/// ascending bitmask, capacities ascending within a set.
pub fn enumerate_problems(u: &Universe) -> impl Iterator<Item = Problem> + Clone {
    let n = u.n();
    (1..=u.set_count() as u32).flat_map(move |bits| {
        (1..=n).map(move |capacity| Problem::new(ChoiceSet(bits), capacity))
    })
}

/// Nonempty subsets of the universe in ascending bitmask order.
pub fn nonempty_sets(n: usize) -> impl Iterator<Item = ChoiceSet> + Clone {
    (1..(1u32 << n)).map(ChoiceSet)
}
