//! Choice under a downward-closed feasibility family.
//!
//! A family is given by its maximal sets; membership is precomputed into a
//! `2^n` bitmap by downward closure, so queries are a single lookup.

use rayon::prelude::*;

use crate::axioms::{Axiom, AxiomReport, Observation, Relation, RevealedPreference, Witness};
use crate::error::{Error, Result};
use crate::identify::topo_sort;
use crate::rules::{ChoiceTable, PriorityProfile};
use crate::universe::{nonempty_sets, ChoiceSet, Problem, Universe};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FeasibilityFamily {
    n: usize,
    maximal: Vec<ChoiceSet>,
    member: Vec<u64>,
}

impl FeasibilityFamily {
    fn from_bitmap(n: usize, mut member: Vec<u64>) -> Self {
        let size = 1usize << n;
        let get = |m: &[u64], s: usize| m[s >> 6] >> (s & 63) & 1 == 1;
        member[0] |= 1;
        for i in 0..n {
            member[(1usize << i) >> 6] |= 1u64 << ((1usize << i) & 63);
        }
        for i in 0..n {
            let bit = 1usize << i;
            for s in 0..size {
                if s & bit != 0 && get(&member, s) {
                    let t = s ^ bit;
                    member[t >> 6] |= 1u64 << (t & 63);
                }
            }
        }
        let maximal = (1..size)
            .filter(|&s| get(&member, s) && (0..n).all(|i| s >> i & 1 == 1 || !get(&member, s | 1 << i)))
            .map(|s| ChoiceSet::from_bits(s as u32))
            .collect();
        Self { n, maximal, member }
    }

    fn empty_bitmap(n: usize) -> Vec<u64> {
        vec![0u64; (1usize << n).div_ceil(64)]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, set: ChoiceSet) -> bool {
        let s = set.bits() as usize;
        s < 1 << self.n && self.member[s >> 6] >> (s & 63) & 1 == 1
    }

    /// Maximal feasible sets in ascending bitmask order.
    pub fn maximal_sets(&self) -> &[ChoiceSet] {
        &self.maximal
    }

    /// Number of feasible sets, the empty set included.
    pub fn count(&self) -> usize {
        self.member.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Every feasible set, the empty set included, in ascending bitmask order.
    pub fn iter(&self) -> impl Iterator<Item = ChoiceSet> + '_ {
        (0..1u32 << self.n)
            .map(ChoiceSet::from_bits)
            .filter(|&s| self.contains(s))
    }

    pub fn all_subsets(n: usize) -> Self {
        make_family(n, &[ChoiceSet::full(n)])
    }

    pub fn singletons_only(n: usize) -> Self {
        make_family(n, &[])
    }
}

/// Downward closure of `maximal_sets` plus every singleton. Members outside
/// `0..n` are dropped.
pub fn make_family(n: usize, maximal_sets: &[ChoiceSet]) -> FeasibilityFamily {
    let full = ChoiceSet::full(n);
    let mut member = FeasibilityFamily::empty_bitmap(n);
    for s in maximal_sets {
        let s = s.intersection(full).bits() as usize;
        member[s >> 6] |= 1 << (s & 63);
    }
    FeasibilityFamily::from_bitmap(n, member)
}

/// Sets holding at most one alternative from each group. The groups must
/// partition the universe.
pub fn agent_partition(u: &Universe, groups: &[ChoiceSet]) -> Result<FeasibilityFamily> {
    let n = u.n();
    let mut covered = ChoiceSet::EMPTY;
    for g in groups {
        if g.is_empty() || !u.contains_set(*g) || !g.intersection(covered).is_empty() {
            return Err(Error::Precondition("groups must partition the universe".into()));
        }
        covered = covered.union(*g);
    }
    if covered != u.full_set() {
        return Err(Error::Precondition("groups must partition the universe".into()));
    }
    let mut member = FeasibilityFamily::empty_bitmap(n);
    for s in 0..1usize << n {
        let set = ChoiceSet::from_bits(s as u32);
        if groups.iter().all(|g| g.intersection(set).len() <= 1) {
            member[s >> 6] |= 1 << (s & 63);
        }
    }
    Ok(FeasibilityFamily::from_bitmap(n, member))
}

/// Greedy lexicographic pass that only takes feasible augmentations: the
/// `t`-th ordering picks its favourite remaining `a` with `chosen ∪ {a}`
/// feasible; the pass stops at `q` picks or when no augmentation is feasible.
pub fn flex_choose(profile: &PriorityProfile, f: &FeasibilityFamily, p: Problem) -> ChoiceSet {
    let mut remaining = p.set;
    let mut chosen = ChoiceSet::EMPTY;
    for ordering in profile.orderings().iter().take(p.capacity) {
        let pick = ordering
            .ranking()
            .find(|&a| remaining.contains(a) && f.contains(chosen.with(a)));
        let Some(a) = pick else { break };
        chosen.insert(a);
        remaining.remove(a);
    }
    chosen
}

/// A choice table whose every entry is nonempty and feasible.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FChoiceTable {
    table: ChoiceTable,
    family: FeasibilityFamily,
}

impl FChoiceTable {
    pub fn new(table: ChoiceTable, family: FeasibilityFamily) -> Result<Self> {
        if table.n() != family.n() {
            return Err(Error::UniverseMismatch {
                left: table.n(),
                right: family.n(),
            });
        }
        for (problem, chosen) in table.iter() {
            if chosen.is_empty() {
                return Err(Error::InvalidEntry {
                    problem,
                    reason: "choice is empty",
                });
            }
            if !family.contains(chosen) {
                return Err(Error::InvalidEntry {
                    problem,
                    reason: "choice is not feasible",
                });
            }
        }
        Ok(Self { table, family })
    }

    /// Materialize [`flex_choose`] over every problem of `u`.
    pub fn from_flex(profile: &PriorityProfile, family: FeasibilityFamily, u: &Universe) -> Result<Self> {
        if profile.n() != u.n() {
            return Err(Error::UniverseMismatch {
                left: profile.n(),
                right: u.n(),
            });
        }
        let table = ChoiceTable::from_fn(u.clone(), |p| flex_choose(profile, &family, p))?;
        Self::new(table, family)
    }

    pub fn table(&self) -> &ChoiceTable {
        &self.table
    }

    pub fn family(&self) -> &FeasibilityFamily {
        &self.family
    }

    pub fn n(&self) -> usize {
        self.table.n()
    }
}

pub fn check_f_capacity_filling(c: &FChoiceTable) -> AxiomReport {
    let (t, f) = (c.table(), c.family());
    let n = t.n();
    let witness = (1u32..1 << n).into_par_iter().find_map_first(|bits| {
        let s = ChoiceSet::from_bits(bits);
        (1..=n).find_map(|q| {
            let chosen = t.get(s, q);
            if chosen.len() >= q {
                return None;
            }
            s.difference(chosen)
                .iter()
                .find(|&a| f.contains(chosen.with(a)))
                .map(|a| Witness {
                    axiom: Axiom::FCapacityFilling,
                    observations: vec![Observation::of(t, s, q)],
                    alternatives: vec![a],
                })
        })
    });
    AxiomReport::from_search(Axiom::FCapacityFilling, witness, t.universe().problem_count() as u64)
}

fn f_relation(c: &FChoiceTable, q: usize) -> Relation {
    let (t, f) = (c.table(), c.family());
    let n = t.n();
    let mut rel = Relation::new(n);
    for s in nonempty_sets(n) {
        let before = t.get_or_empty(s, q - 1);
        let at = t.get(s, q);
        let winners = at.difference(before);
        let losers = s.difference(at).difference(before);
        for b in losers.iter().filter(|&b| f.contains(before.with(b))) {
            for a in winners.iter() {
                rel.add(a, b, s, q);
            }
        }
    }
    rel
}

/// Edges `a → b` with `a, b ∉ C(S,q-1)`, `a ∈ C(S,q)`, `b ∈ S \ C(S,q)` and
/// `C(S,q-1) ∪ {b}` feasible, for some `S`. The feasibility condition is on
/// `b` only.
pub fn f_revealed_pref(c: &FChoiceTable, q: usize) -> Result<RevealedPreference> {
    if q < 1 || q > c.n() {
        return Err(Error::RevealedCapacity { capacity: q, min: 1 });
    }
    Ok(f_relation(c, q).into_public(q))
}

/// Acyclicity of every `R_q^F`; the witness lists a cycle with, per edge,
/// the two entries that reveal it.
pub fn check_csarp(c: &FChoiceTable) -> AxiomReport {
    let t = c.table();
    let n = t.n();
    let witness = (1..=n).into_par_iter().find_map_first(|q| {
        let rel = f_relation(c, q);
        let cycle = crate::axioms::find_cycle(&rel.succ)?;
        let k = cycle.len();
        let observations = (0..k)
            .flat_map(|i| {
                let (s, _) = rel.source(cycle[i], cycle[(i + 1) % k]);
                [Observation::of(t, s, q - 1), Observation::of(t, s, q)]
            })
            .collect();
        Some(Witness {
            axiom: Axiom::Csarp,
            observations,
            alternatives: cycle,
        })
    });
    AxiomReport::from_search(Axiom::Csarp, witness, t.universe().problem_count() as u64)
}

/// For each `q`, the lowest-index-first linear extension of `R_q^F`,
/// validated by re-materializing the flexible rule.
pub fn extract_flex_profile(c: &FChoiceTable) -> Result<PriorityProfile> {
    let n = c.n();
    let mut orderings = Vec::with_capacity(n);
    for q in 1..=n {
        let order = topo_sort(&f_relation(c, q).succ).ok_or(Error::CyclicRevealedPreference { capacity: q })?;
        orderings.push(crate::rules::PriorityOrdering::new(order)?);
    }
    let profile = PriorityProfile::new(orderings)?;
    let rebuilt = FChoiceTable::from_flex(&profile, c.family().clone(), c.table().universe())?;
    if let Some(problem) = c.table().first_difference(rebuilt.table()) {
        return Err(Error::ValidationMismatch {
            problem,
            expected: c.table().get(problem.set, problem.capacity),
            rebuilt: rebuilt.table().get(problem.set, problem.capacity),
        });
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::{check_capacity_filling, check_cwarp, check_monotonicity, revealed_pref};
    use crate::fixtures;
    use crate::rules::{lex_choose, materialize, ChoiceRule, PriorityOrdering};

    fn partition_fixture() -> (Universe, FeasibilityFamily) {
        let u = Universe::new(["a1", "a2", "b1"]).unwrap();
        let groups = [u.set_of(&["a1", "a2"]).unwrap(), u.set_of(&["b1"]).unwrap()];
        let f = agent_partition(&u, &groups).unwrap();
        (u, f)
    }

    fn partition_profile(u: &Universe) -> PriorityProfile {
        let o = |s: &[&str]| PriorityOrdering::from_labels(u, s).unwrap();
        PriorityProfile::new(vec![
            o(&["a1", "a2", "b1"]),
            o(&["a2", "b1", "a1"]),
            o(&["a1", "a2", "b1"]),
        ])
        .unwrap()
    }

    #[test]
    fn family_shapes() {
        let all = FeasibilityFamily::all_subsets(4);
        assert_eq!(all.count(), 16);
        assert_eq!(all.maximal_sets(), &[ChoiceSet::full(4)]);
        let singles = FeasibilityFamily::singletons_only(4);
        assert_eq!(singles.count(), 5);
        assert_eq!(singles.maximal_sets().len(), 4);
        let (u, f) = partition_fixture();
        assert!(f.contains(u.set_of(&["a1", "b1"]).unwrap()));
        assert!(!f.contains(u.set_of(&["a1", "a2"]).unwrap()));
        assert_eq!(f.maximal_sets().len(), 2);
    }

    #[test]
    fn families_are_downward_closed() {
        let f = make_family(6, &[ChoiceSet::from_bits(0b110011), ChoiceSet::from_bits(0b001110)]);
        for s in f.iter() {
            for sub in s.subsets() {
                assert!(f.contains(sub));
            }
        }
        for i in 0..6 {
            assert!(f.contains(ChoiceSet::singleton(i)));
        }
        assert!(!f.contains(ChoiceSet::from_bits(0b000101)));
    }

    #[test]
    fn flex_blocks_infeasible_picks() {
        let (u, f) = partition_fixture();
        let p = partition_profile(&u);
        let got = flex_choose(&p, &f, Problem::new(u.full_set(), 2));
        assert_eq!(got, u.set_of(&["a1", "b1"]).unwrap());
        let single = flex_choose(&p, &f, Problem::new(u.full_set(), 1));
        assert_eq!(single, u.set_of(&["a1"]).unwrap());
        // third pick is blocked: the pass stops short of capacity
        assert_eq!(flex_choose(&p, &f, Problem::new(u.full_set(), 3)).len(), 2);
    }

    #[test]
    fn flex_with_all_subsets_is_lexicographic() {
        let u = Universe::alphabetic(4).unwrap();
        let p = PriorityProfile::new(vec![
            PriorityOrdering::new(vec![1, 0, 3, 2]).unwrap(),
            PriorityOrdering::new(vec![3, 2, 0, 1]).unwrap(),
            PriorityOrdering::new(vec![0, 1, 2, 3]).unwrap(),
            PriorityOrdering::new(vec![2, 3, 1, 0]).unwrap(),
        ])
        .unwrap();
        let f = FeasibilityFamily::all_subsets(4);
        for s in nonempty_sets(4) {
            for q in 1..=4 {
                let pr = Problem::new(s, q);
                assert_eq!(flex_choose(&p, &f, pr), lex_choose(&p, pr));
            }
        }
        let ft = FChoiceTable::from_flex(&p, f, &u).unwrap();
        assert_eq!(check_f_capacity_filling(&ft).passed(), check_capacity_filling(ft.table()).passed());
        for q in 2..=4 {
            assert_eq!(f_revealed_pref(&ft, q).unwrap(), revealed_pref(ft.table(), q).unwrap());
        }
        let extracted = extract_flex_profile(&ft).unwrap();
        let rebuilt = materialize(&ChoiceRule::Lexicographic(extracted), &u).unwrap();
        assert!(rebuilt.same_choices(ft.table()));
    }

    #[test]
    fn flex_tables_pass_and_round_trip() {
        let (u, f) = partition_fixture();
        let p = partition_profile(&u);
        let ft = FChoiceTable::from_flex(&p, f.clone(), &u).unwrap();
        assert!(check_f_capacity_filling(&ft).passed());
        assert!(check_monotonicity(ft.table()).passed());
        assert!(check_csarp(&ft).passed());
        let q = extract_flex_profile(&ft).unwrap();
        let again = FChoiceTable::from_flex(&q, f, &u).unwrap();
        assert!(again.table().same_choices(ft.table()));
    }

    #[test]
    fn q1_edges_follow_single_choices() {
        let (u, f) = partition_fixture();
        let ft = FChoiceTable::from_flex(&partition_profile(&u), f, &u).unwrap();
        let rel = f_revealed_pref(&ft, 1).unwrap();
        let a1 = u.index_of("a1").unwrap();
        assert!(rel.edges.iter().all(|&(a, _)| a == a1 || a == u.index_of("a2").unwrap()));
        assert!(rel.contains(a1, u.index_of("b1").unwrap()));
        assert!(f_revealed_pref(&ft, 0).is_err());
    }

    #[test]
    fn feasibility_blocks_revealed_edges() {
        let (u, f) = partition_fixture();
        let ft = FChoiceTable::from_flex(&partition_profile(&u), f, &u).unwrap();
        let rel = f_revealed_pref(&ft, 2).unwrap();
        // from the full set b1 joins a1 at q=2 and a2 is rejected, but a1 and a2 are not jointly feasible
        let (a2, b1) = (u.index_of("a2").unwrap(), u.index_of("b1").unwrap());
        assert!(!rel.contains(b1, a2));
        assert!(revealed_pref(ft.table(), 2).unwrap().contains(b1, a2));
    }

    #[test]
    fn example_rule_fails_csarp() {
        let t = fixtures::cwarp_violator();
        let ft = FChoiceTable::new(t.clone(), FeasibilityFamily::all_subsets(5)).unwrap();
        let r = check_csarp(&ft);
        assert!(!r.passed());
        let w = r.witness.unwrap();
        assert!(w.replay(&t, Some(ft.family())));
        assert!(!check_cwarp(&t).passed());
    }

    #[test]
    fn singleton_rule_and_families() {
        let t = fixtures::always_top_singleton();
        let all = FChoiceTable::new(t.clone(), FeasibilityFamily::all_subsets(3)).unwrap();
        let r = check_f_capacity_filling(&all);
        assert!(!r.passed());
        assert!(r.witness.unwrap().replay(&t, Some(all.family())));
        let singles = FChoiceTable::new(t, FeasibilityFamily::singletons_only(3)).unwrap();
        assert!(check_f_capacity_filling(&singles).passed());
    }

    #[test]
    fn infeasible_entries_are_rejected() {
        let u = Universe::alphabetic(2).unwrap();
        let t = materialize(&ChoiceRule::Responsive(PriorityOrdering::identity(2)), &u).unwrap();
        assert!(FChoiceTable::new(t, FeasibilityFamily::singletons_only(2)).is_err());
    }

    #[test]
    fn trivial_universe_passes_csarp() {
        let u = Universe::alphabetic(1).unwrap();
        let p = PriorityProfile::new(vec![PriorityOrdering::identity(1)]).unwrap();
        let ft = FChoiceTable::from_flex(&p, FeasibilityFamily::all_subsets(1), &u).unwrap();
        assert!(check_csarp(&ft).passed());
    }
}
