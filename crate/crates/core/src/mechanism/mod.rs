//! Object allocation with variable capacities: deferred acceptance over a
//! choice structure, demand sets, and exhaustive property checkers.

mod impossibility;
mod properties;

pub use impossibility::{find_impossibility_witness, recover_choice_structure, ImpossibilityWitness};
pub use properties::{
    check_all_properties, check_isd, check_property, check_resource_monotonicity, check_strategy_proofness,
    check_truncation_invariance, check_unavailable_type_invariance, check_weak_isd,
    check_weak_non_wastefulness, MechanismReport, MechanismSpace, MechanismWitness, Property,
};

use std::fmt;

use crate::error::{Error, Result};
use crate::rules::{materialize, ChoiceRule, ChoiceTable};
use crate::universe::{ChoiceSet, Universe};

pub const NULL_LABEL: &str = "∅";

/// Named objects; the null object is implicit.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ObjectSpace {
    names: Vec<String>,
}

impl ObjectSpace {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut seen = std::collections::HashSet::new();
        let valid = !names.is_empty()
            && names.len() < 32
            && names
                .iter()
                .all(|n| n != NULL_LABEL && n != "null" && seen.insert(n.as_str()));
        if !valid {
            return Err(Error::InvalidObjects);
        }
        Ok(Self { names })
    }

    pub fn m(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, item: Item) -> &str {
        match item {
            Item::Object(x) => &self.names[x],
            Item::Null => NULL_LABEL,
        }
    }

    /// Accepts object names plus `∅` / `null`.
    pub fn parse_item(&self, name: &str) -> Result<Item> {
        if name == NULL_LABEL || name == "null" {
            return Ok(Item::Null);
        }
        self.names
            .iter()
            .position(|n| n == name)
            .map(Item::Object)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }
}

/// An object or the null object.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Item {
    Object(usize),
    Null,
}

impl Item {
    fn slot(self, m: usize) -> usize {
        match self {
            Item::Object(x) => x,
            Item::Null => m,
        }
    }
}

/// A strict ranking of every object plus the null object.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PreferenceRelation {
    order: Vec<Item>,
    position: Vec<u8>,
}

impl PreferenceRelation {
    pub fn new(order: Vec<Item>) -> Result<Self> {
        let m = order.len().checked_sub(1).ok_or(Error::InvalidPreference)?;
        let mut position = vec![u8::MAX; m + 1];
        for (pos, item) in order.iter().enumerate() {
            if let Item::Object(x) = item {
                if *x >= m {
                    return Err(Error::InvalidPreference);
                }
            }
            let slot = &mut position[item.slot(m)];
            if *slot != u8::MAX {
                return Err(Error::InvalidPreference);
            }
            *slot = pos as u8;
        }
        Ok(Self { order, position })
    }

    /// Objects in index order, then `∅`.
    pub fn canonical(m: usize) -> Self {
        let order = (0..m).map(Item::Object).chain([Item::Null]).collect();
        Self::new(order).expect("canonical order is a ranking")
    }

    /// `∅` first, then objects in index order.
    pub fn null_first(m: usize) -> Self {
        let order = [Item::Null].into_iter().chain((0..m).map(Item::Object)).collect();
        Self::new(order).expect("null-first order is a ranking")
    }

    /// Every ranking of `m` objects plus `∅`, in lexicographic order of item sequences.
    pub fn all(m: usize) -> Vec<Self> {
        let mut items: Vec<Item> = (0..m).map(Item::Object).chain([Item::Null]).collect();
        let mut out = vec![Self::new(items.clone()).unwrap()];
        while next_permutation(&mut items) {
            out.push(Self::new(items.clone()).unwrap());
        }
        out
    }

    pub fn m(&self) -> usize {
        self.order.len() - 1
    }

    pub fn order(&self) -> &[Item] {
        &self.order
    }

    pub fn rank(&self, item: Item) -> usize {
        self.position[item.slot(self.m())] as usize
    }

    /// Strict preference `x P y`.
    pub fn prefers(&self, x: Item, y: Item) -> bool {
        self.rank(x) < self.rank(y)
    }

    /// Weak preference `x R y`.
    pub fn weakly_prefers(&self, x: Item, y: Item) -> bool {
        self.rank(x) <= self.rank(y)
    }

    /// Order restricted to `keep`.
    pub fn restricted(&self, keep: impl Fn(Item) -> bool) -> Vec<Item> {
        self.order.iter().copied().filter(|&i| keep(i)).collect()
    }

    /// Objects in preference order, without `∅`.
    pub fn object_order(&self) -> Vec<usize> {
        self.order
            .iter()
            .filter_map(|i| match i {
                Item::Object(x) => Some(*x),
                Item::Null => None,
            })
            .collect()
    }

    pub fn format(&self, objects: &ObjectSpace) -> String {
        let names: Vec<&str> = self.order.iter().map(|&i| objects.name(i)).collect();
        names.join(">")
    }
}

impl fmt::Debug for PreferenceRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.order).finish()
    }
}

pub(crate) fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|x| *x > v[i]).expect("a larger element exists");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// `q_x` per object; the null object always has capacity `n`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct CapacityProfile(pub Vec<usize>);

impl CapacityProfile {
    pub fn get(&self, x: usize) -> usize {
        self.0[x]
    }

    pub fn m(&self) -> usize {
        self.0.len()
    }

    /// `q + 1_x`.
    pub fn increased(&self, x: usize) -> Self {
        let mut caps = self.0.clone();
        caps[x] += 1;
        CapacityProfile(caps)
    }

    pub fn le(&self, other: &CapacityProfile) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Objects with positive capacity.
    pub fn available(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &q)| q > 0).map(|(x, _)| x)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AllocationProblem {
    pub preferences: Vec<PreferenceRelation>,
    pub capacities: CapacityProfile,
}

impl AllocationProblem {
    pub fn new(preferences: Vec<PreferenceRelation>, capacities: CapacityProfile) -> Result<Self> {
        let p = Self {
            preferences,
            capacities,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let m = self.capacities.m();
        if n == 0 || m == 0 {
            return Err(Error::ShapeMismatch("problem needs agents and objects"));
        }
        if self.preferences.iter().any(|r| r.m() != m) {
            return Err(Error::ShapeMismatch("preference and capacity object counts differ"));
        }
        if let Some((object, &capacity)) = self.capacities.0.iter().enumerate().find(|(_, &q)| q > n) {
            return Err(Error::ObjectCapacity { object, capacity, n });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.preferences.len()
    }

    pub fn m(&self) -> usize {
        self.capacities.m()
    }

    /// Same problem with agent `i` reporting `r`.
    pub fn with_preference(&self, i: usize, r: PreferenceRelation) -> Self {
        let mut p = self.clone();
        p.preferences[i] = r;
        p
    }

    pub fn with_capacities(&self, capacities: CapacityProfile) -> Self {
        Self {
            preferences: self.preferences.clone(),
            capacities,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Allocation {
    pub assignment: Vec<Item>,
}

impl Allocation {
    pub fn get(&self, i: usize) -> Item {
        self.assignment[i]
    }

    /// Agents assigned `item`.
    pub fn holders(&self, item: Item) -> ChoiceSet {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == item)
            .map(|(i, _)| i)
            .collect()
    }

    /// No object exceeds its capacity.
    pub fn is_feasible(&self, capacities: &CapacityProfile) -> bool {
        (0..capacities.m()).all(|x| self.holders(Item::Object(x)).len() <= capacities.get(x))
    }
}

/// `D_x(a, R) = {i : x P_i a_i}`.
pub fn demand(a: &Allocation, preferences: &[PreferenceRelation], x: usize) -> ChoiceSet {
    preferences
        .iter()
        .enumerate()
        .filter(|(i, r)| r.prefers(Item::Object(x), a.get(*i)))
        .map(|(i, _)| i)
        .collect()
}

/// One choice table per object, all over the same agent universe.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ChoiceStructure {
    agents: Universe,
    tables: Vec<ChoiceTable>,
}

impl ChoiceStructure {
    pub fn new(agents: Universe, tables: Vec<ChoiceTable>) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::InvalidObjects);
        }
        if let Some(t) = tables.iter().find(|t| t.n() != agents.n()) {
            return Err(Error::UniverseMismatch {
                left: t.n(),
                right: agents.n(),
            });
        }
        Ok(Self { agents, tables })
    }

    pub fn from_rules(agents: &Universe, rules: &[ChoiceRule]) -> Result<Self> {
        let tables = rules
            .iter()
            .map(|r| materialize(r, agents))
            .collect::<Result<Vec<_>>>()?;
        Self::new(agents.clone(), tables)
    }

    /// The same rule at every one of `m` objects.
    pub fn uniform(agents: &Universe, rule: &ChoiceRule, m: usize) -> Result<Self> {
        let table = materialize(rule, agents)?;
        Self::new(agents.clone(), vec![table; m])
    }

    pub fn agents(&self) -> &Universe {
        &self.agents
    }

    pub fn tables(&self) -> &[ChoiceTable] {
        &self.tables
    }

    pub fn n(&self) -> usize {
        self.agents.n()
    }

    pub fn m(&self) -> usize {
        self.tables.len()
    }
}

/// A mechanism maps every allocation problem to an allocation.
pub trait Mechanism: Sync {
    fn allocate(&self, problem: &AllocationProblem) -> Result<Allocation>;
}

impl Mechanism for ChoiceStructure {
    fn allocate(&self, problem: &AllocationProblem) -> Result<Allocation> {
        da_allocate(self, problem)
    }
}

impl<F> Mechanism for F
where
    F: Fn(&AllocationProblem) -> Allocation + Sync,
{
    fn allocate(&self, problem: &AllocationProblem) -> Result<Allocation> {
        Ok(self(problem))
    }
}

/// One round of deferred acceptance.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Round {
    /// `(agent, item)` for every proposal made this round.
    pub proposals: Vec<(usize, Item)>,
    /// Tentatively held agents per object after the round.
    pub held: Vec<ChoiceSet>,
    pub rejected: ChoiceSet,
}

pub fn da_allocate(cs: &ChoiceStructure, problem: &AllocationProblem) -> Result<Allocation> {
    da_run(cs, problem, None)
}

pub fn da_allocate_traced(cs: &ChoiceStructure, problem: &AllocationProblem) -> Result<(Allocation, Vec<Round>)> {
    let mut trace = Vec::new();
    let a = da_run(cs, problem, Some(&mut trace))?;
    Ok((a, trace))
}

fn da_run(cs: &ChoiceStructure, problem: &AllocationProblem, mut trace: Option<&mut Vec<Round>>) -> Result<Allocation> {
    problem.validate()?;
    let n = problem.n();
    let m = problem.m();
    if n != cs.n() {
        return Err(Error::UniverseMismatch { left: n, right: cs.n() });
    }
    if m != cs.m() {
        return Err(Error::ShapeMismatch("structure and problem object counts differ"));
    }
    let limit = n * m + 1;
    let mut pointer = vec![0usize; n];
    let mut held = vec![ChoiceSet::EMPTY; m];
    let mut settled_null = ChoiceSet::EMPTY;
    let mut free = ChoiceSet::full(n);
    let mut rounds = 0;
    while !free.is_empty() {
        rounds += 1;
        if rounds > limit {
            return Err(Error::RoundLimit(limit));
        }
        let mut applicants = vec![ChoiceSet::EMPTY; m];
        let mut proposals = Vec::new();
        for i in free.iter() {
            let item = problem.preferences[i].order()[pointer[i]];
            proposals.push((i, item));
            match item {
                Item::Null => settled_null.insert(i),
                Item::Object(x) => applicants[x].insert(i),
            }
        }
        let mut rejected = ChoiceSet::EMPTY;
        for x in 0..m {
            if applicants[x].is_empty() {
                continue;
            }
            let pool = held[x].union(applicants[x]);
            let q = problem.capacities.get(x);
            let keep = if q == 0 { ChoiceSet::EMPTY } else { cs.tables[x].get(pool, q) };
            held[x] = keep;
            rejected = rejected.union(pool.difference(keep));
        }
        for i in rejected.iter() {
            pointer[i] += 1;
        }
        free = rejected;
        if let Some(t) = trace.as_deref_mut() {
            t.push(Round {
                proposals,
                held: held.clone(),
                rejected,
            });
        }
    }
    let mut assignment = vec![Item::Null; n];
    for (x, h) in held.iter().enumerate() {
        for i in h.iter() {
            assignment[i] = Item::Object(x);
        }
    }
    debug_assert!(settled_null.iter().all(|i| assignment[i] == Item::Null));
    Ok(Allocation { assignment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rules::{build_rotating, PriorityOrdering};

    fn rel(objects: &ObjectSpace, s: &str) -> PreferenceRelation {
        let order = s
            .split_whitespace()
            .map(|t| objects.parse_item(t).unwrap())
            .collect();
        PreferenceRelation::new(order).unwrap()
    }

    #[test]
    fn relations_enumerate_all_rankings() {
        assert_eq!(PreferenceRelation::all(1).len(), 2);
        let all = PreferenceRelation::all(2);
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], PreferenceRelation::canonical(2));
        assert_eq!(PreferenceRelation::all(3).len(), 24);
        assert!(PreferenceRelation::new(vec![Item::Null, Item::Null]).is_err());
    }

    #[test]
    fn everyone_prefers_null() {
        let u = Universe::alphabetic(3).unwrap();
        let cs = ChoiceStructure::uniform(&u, &ChoiceRule::Responsive(PriorityOrdering::identity(3)), 2).unwrap();
        let p = AllocationProblem::new(vec![PreferenceRelation::null_first(2); 3], CapacityProfile(vec![3, 3])).unwrap();
        let a = da_allocate(&cs, &p).unwrap();
        assert!(a.assignment.iter().all(|&i| i == Item::Null));
    }

    #[test]
    fn non_binding_capacity_serves_all() {
        let u = Universe::alphabetic(4).unwrap();
        let cs = ChoiceStructure::uniform(&u, &ChoiceRule::Responsive(PriorityOrdering::identity(4)), 1).unwrap();
        let p = AllocationProblem::new(vec![PreferenceRelation::canonical(1); 4], CapacityProfile(vec![4])).unwrap();
        let a = da_allocate(&cs, &p).unwrap();
        assert!(a.assignment.iter().all(|&i| i == Item::Object(0)));
    }

    #[test]
    fn walk_open_single_object_run() {
        let t = fixtures::walk_open_example();
        let agents = t.universe().clone();
        let cs = ChoiceStructure::new(agents.clone(), vec![t]).unwrap();
        let objects = ObjectSpace::new(["x"]).unwrap();
        let yes = rel(&objects, "x ∅");
        let no = rel(&objects, "∅ x");
        let r = vec![yes.clone(), no, yes.clone(), yes.clone(), yes];
        let p = AllocationProblem::new(r.clone(), CapacityProfile(vec![2])).unwrap();
        let (a, trace) = da_allocate_traced(&cs, &p).unwrap();
        assert_eq!(a.holders(Item::Object(0)), agents.set_of(&["a", "e"]).unwrap());
        assert_eq!(demand(&a, &r, 0), agents.set_of(&["c", "d"]).unwrap());
        assert!(trace.len() <= 6);
        assert!(a.is_feasible(&p.capacities));
    }

    #[test]
    fn zero_capacity_rejects_everyone() {
        let u = Universe::alphabetic(2).unwrap();
        let cs = ChoiceStructure::uniform(&u, &ChoiceRule::Responsive(PriorityOrdering::identity(2)), 2).unwrap();
        let p = AllocationProblem::new(vec![PreferenceRelation::canonical(2); 2], CapacityProfile(vec![0, 1])).unwrap();
        let a = da_allocate(&cs, &p).unwrap();
        assert_eq!(a.assignment, vec![Item::Object(1), Item::Null]);
    }

    #[test]
    fn shape_errors() {
        let u = Universe::alphabetic(2).unwrap();
        let cs = ChoiceStructure::uniform(&u, &ChoiceRule::Responsive(PriorityOrdering::identity(2)), 2).unwrap();
        let bad_caps = AllocationProblem::new(vec![PreferenceRelation::canonical(2); 2], CapacityProfile(vec![3, 1]));
        assert!(matches!(bad_caps, Err(Error::ObjectCapacity { .. })));
        let three = AllocationProblem::new(vec![PreferenceRelation::canonical(2); 3], CapacityProfile(vec![1, 1])).unwrap();
        assert!(da_allocate(&cs, &three).is_err());
        assert!(ObjectSpace::new(["x", "x"]).is_err());
        assert!(ObjectSpace::new(["∅"]).is_err());
    }

    #[test]
    fn proposals_walk_down_lists() {
        let u = Universe::alphabetic(3).unwrap();
        let w = PriorityOrdering::identity(3);
        let o = PriorityOrdering::new(vec![2, 1, 0]).unwrap();
        let rule = ChoiceRule::CapacityWise(build_rotating(&w, &o, 3));
        let cs = ChoiceStructure::uniform(&u, &rule, 2).unwrap();
        for r in PreferenceRelation::all(2) {
            let p = AllocationProblem::new(vec![r.clone(), PreferenceRelation::canonical(2), r], CapacityProfile(vec![1, 1])).unwrap();
            let (a, trace) = da_allocate_traced(&cs, &p).unwrap();
            assert!(trace.len() <= 3 * 2 + 1);
            let mut last = [0usize; 3];
            for round in &trace {
                for &(i, item) in &round.proposals {
                    let rank = p.preferences[i].rank(item);
                    assert!(rank >= last[i]);
                    last[i] = rank;
                }
            }
            assert!(a.is_feasible(&p.capacities));
        }
    }
}
