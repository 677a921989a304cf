//! Exhaustive checkers for choice-rule axioms.
//!
//! Every checker scans the problem space in canonical order and reports the
//! first violation it meets, so witnesses are stable across runs and worker
//! counts (`find_map_first` keeps the ordered minimum under rayon).
//!
//! A [`Witness`] records the table entries it relies on as [`Observation`]s
//! plus the alternatives involved. [`Witness::violation_holds`] re-derives the
//! violation from those records alone and [`Witness::replay`] additionally
//! checks the records against a table.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::feasibility::FeasibilityFamily;
use crate::rules::{CapacityWiseLists, ChoiceTable, PriorityOrdering};
use crate::universe::{nonempty_sets, ChoiceSet, Universe};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    CapacityFilling,
    GrossSubstitutes,
    Monotonicity,
    Iaa,
    Cwarp,
    CwarpAlt,
    Wrarp,
    Cwrarp,
    PathIndependence,
    Insertion,
    FCapacityFilling,
    Csarp,
}

impl Axiom {
    /// Table axioms run by `check_all`.
    pub const TABLE_AXIOMS: [Axiom; 8] = [
        Axiom::CapacityFilling,
        Axiom::GrossSubstitutes,
        Axiom::Monotonicity,
        Axiom::Iaa,
        Axiom::Cwarp,
        Axiom::Wrarp,
        Axiom::Cwrarp,
        Axiom::PathIndependence,
    ];

    /// The four properties that characterize lexicographic rules.
    pub const LEXICOGRAPHIC: [Axiom; 4] = [
        Axiom::CapacityFilling,
        Axiom::GrossSubstitutes,
        Axiom::Monotonicity,
        Axiom::Iaa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::CapacityFilling => "capacity_filling",
            Axiom::GrossSubstitutes => "gross_substitutes",
            Axiom::Monotonicity => "monotonicity",
            Axiom::Iaa => "iaa",
            Axiom::Cwarp => "cwarp",
            Axiom::CwarpAlt => "cwarp_alt",
            Axiom::Wrarp => "wrarp",
            Axiom::Cwrarp => "cwrarp",
            Axiom::PathIndependence => "path_independence",
            Axiom::Insertion => "insertion",
            Axiom::FCapacityFilling => "f_capacity_filling",
            Axiom::Csarp => "csarp",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        const ALL: [Axiom; 12] = [
            Axiom::CapacityFilling,
            Axiom::GrossSubstitutes,
            Axiom::Monotonicity,
            Axiom::Iaa,
            Axiom::Cwarp,
            Axiom::CwarpAlt,
            Axiom::Wrarp,
            Axiom::Cwrarp,
            Axiom::PathIndependence,
            Axiom::Insertion,
            Axiom::FCapacityFilling,
            Axiom::Csarp,
        ];
        ALL.into_iter().find(|a| a.name() == name)
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

/// One table entry `C(S, q)` a witness depends on. Capacity 0 and the empty
/// set denote the convention `C = ∅`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Observation {
    pub set: ChoiceSet,
    pub capacity: usize,
    pub chosen: ChoiceSet,
}

impl Observation {
    pub fn of(table: &ChoiceTable, set: ChoiceSet, capacity: usize) -> Self {
        Self {
            set,
            capacity,
            chosen: table.get_or_empty(set, capacity),
        }
    }

    pub fn rejected(&self) -> ChoiceSet {
        self.set.difference(self.chosen)
    }
}

/// Structured counterexample. Layout of `observations` / `alternatives` by axiom:
///
/// * capacity filling: `[(S,q)]`, `[]`
/// * gross substitutes: `[(S,q), (S∖b,q)]`, `[a, b]`
/// * monotonicity: `[(S,q), (S,q+1)]`, `[a]`
/// * IAA: `[(S',q), (S',q+1), (S,q), (S,q+1)]`, `[]`
/// * CWARP (both forms): `[(S,q-1), (S,q), (T,q-1), (T,q)]`, `[a, b]`
/// * WrARP / CWrARP: `[(S,q), (S',q')]`, `[a, b]`
/// * path independence: `[(S,q), (T,q), (S∪T,q), (C(S)∪C(T),q)]`, `[]`
/// * F-capacity filling: `[(S,q)]`, `[a]`
/// * CSARP: `[(S_i,q-1), (S_i,q)]` per cycle edge, the cycle `[v_0, ..., v_k-1]`
/// * insertion: `[]`, `[q]`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Witness {
    pub axiom: Axiom,
    pub observations: Vec<Observation>,
    pub alternatives: Vec<usize>,
}

impl Witness {
    fn new(axiom: Axiom, observations: Vec<Observation>, alternatives: Vec<usize>) -> Self {
        Self {
            axiom,
            observations,
            alternatives,
        }
    }

    /// The recorded observations exhibit a violation of `self.axiom`.
    /// Feasibility-based axioms need the family.
    pub fn violation_holds(&self, family: Option<&FeasibilityFamily>) -> bool {
        let obs = &self.observations;
        let alts = &self.alternatives;
        let shape = |o: usize, a: usize| obs.len() == o && alts.len() == a;
        match self.axiom {
            Axiom::CapacityFilling => {
                shape(1, 0) && obs[0].chosen.len() != obs[0].set.len().min(obs[0].capacity)
            }
            Axiom::GrossSubstitutes => {
                let (a, b) = (alts.first().copied(), alts.get(1).copied());
                let (Some(a), Some(b)) = (a, b) else { return false };
                shape(2, 2)
                    && a != b
                    && obs[0].set.contains(b)
                    && obs[0].chosen.contains(a)
                    && obs[1].set == obs[0].set.without(b)
                    && obs[1].capacity == obs[0].capacity
                    && !obs[1].chosen.contains(a)
            }
            Axiom::Monotonicity => {
                shape(2, 1)
                    && obs[0].set == obs[1].set
                    && obs[1].capacity == obs[0].capacity + 1
                    && obs[0].chosen.contains(alts[0])
                    && !obs[1].chosen.contains(alts[0])
            }
            Axiom::Iaa => {
                if !shape(4, 0) {
                    return false;
                }
                let q = obs[0].capacity;
                let consistent = obs[1].set == obs[0].set
                    && obs[3].set == obs[2].set
                    && obs[2].capacity == q
                    && obs[1].capacity == q + 1
                    && obs[3].capacity == q + 1;
                let r = obs[0].rejected();
                consistent
                    && r == obs[2].rejected()
                    && obs[1].chosen.intersection(r) != obs[3].chosen.intersection(r)
            }
            Axiom::Cwarp | Axiom::CwarpAlt => {
                if !shape(4, 2) {
                    return false;
                }
                let (a, b) = (alts[0], alts[1]);
                revealed_via(&obs[0], &obs[1], a, b) && revealed_via(&obs[2], &obs[3], b, a)
            }
            Axiom::Wrarp | Axiom::Cwrarp => {
                if !shape(2, 2) {
                    return false;
                }
                let (a, b) = (alts[0], alts[1]);
                let same_q = self.axiom == Axiom::Cwrarp || obs[0].capacity == obs[1].capacity;
                let both = obs[0].set.intersection(obs[1].set);
                same_q
                    && both.contains(a)
                    && both.contains(b)
                    && obs[0].chosen.contains(a)
                    && !obs[0].chosen.contains(b)
                    && obs[1].chosen.contains(b)
                    && !obs[1].chosen.contains(a)
            }
            Axiom::PathIndependence => {
                shape(4, 0)
                    && obs.iter().all(|o| o.capacity == obs[0].capacity)
                    && obs[2].set == obs[0].set.union(obs[1].set)
                    && obs[3].set == obs[0].chosen.union(obs[1].chosen)
                    && obs[2].chosen != obs[3].chosen
            }
            Axiom::FCapacityFilling => {
                let Some(family) = family else { return false };
                shape(1, 1)
                    && obs[0].set.contains(alts[0])
                    && !obs[0].chosen.contains(alts[0])
                    && obs[0].chosen.len() < obs[0].capacity
                    && family.contains(obs[0].chosen.with(alts[0]))
            }
            Axiom::Csarp => {
                let Some(family) = family else { return false };
                let k = alts.len();
                if k < 2 || obs.len() != 2 * k {
                    return false;
                }
                let q = obs[1].capacity;
                (0..k).all(|i| {
                    let (before, at) = (&obs[2 * i], &obs[2 * i + 1]);
                    at.capacity == q
                        && f_revealed_via(before, at, alts[i], alts[(i + 1) % k], family)
                })
            }
            Axiom::Insertion => false,
        }
    }

    /// Observations agree with `table` and exhibit the violation.
    pub fn replay(&self, table: &ChoiceTable, family: Option<&FeasibilityFamily>) -> bool {
        let n = table.n();
        let recorded = self.observations.iter().all(|o| {
            if o.set.is_empty() || o.capacity == 0 {
                return o.chosen.is_empty() && table.universe().contains_set(o.set);
            }
            table.universe().contains_set(o.set)
                && o.capacity <= n
                && table.get(o.set, o.capacity) == o.chosen
        });
        recorded && self.violation_holds(family)
    }

    pub fn describe(&self, u: &Universe) -> String {
        let obs: Vec<String> = self
            .observations
            .iter()
            .map(|o| format!("C({},{})={}", u.format_set(o.set), o.capacity, u.format_set(o.chosen)))
            .collect();
        let alts: Vec<&str> = if self.axiom == Axiom::Insertion {
            Vec::new()
        } else {
            self.alternatives.iter().map(|&a| u.label(a)).collect()
        };
        let mut out = obs.join("; ");
        if !alts.is_empty() {
            out.push_str(&format!(" [{}]", alts.join(",")));
        }
        if self.axiom == Axiom::Insertion {
            out = format!("capacity {} list is not an insertion", self.alternatives[0]);
        }
        out
    }
}

/// `a` is revealed preferred to `b` at `at.capacity` through these two entries.
fn revealed_via(before: &Observation, at: &Observation, a: usize, b: usize) -> bool {
    before.set == at.set
        && before.capacity + 1 == at.capacity
        && at.capacity >= 2
        && !before.chosen.contains(a)
        && !before.chosen.contains(b)
        && at.chosen.contains(a)
        && at.set.contains(b)
        && !at.chosen.contains(b)
}

pub(crate) fn f_revealed_via(
    before: &Observation,
    at: &Observation,
    a: usize,
    b: usize,
    family: &FeasibilityFamily,
) -> bool {
    before.set == at.set
        && before.capacity + 1 == at.capacity
        && !before.chosen.contains(a)
        && !before.chosen.contains(b)
        && at.chosen.contains(a)
        && at.set.contains(b)
        && !at.chosen.contains(b)
        && family.contains(before.chosen.with(b))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub problems_checked: u64,
}

impl AxiomReport {
    pub(crate) fn from_search(axiom: Axiom, witness: Option<Witness>, problems_checked: u64) -> Self {
        let verdict = if witness.is_some() {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        Self {
            axiom,
            verdict,
            witness,
            problems_checked,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn domain_size(c: &ChoiceTable) -> u64 {
    c.universe().problem_count() as u64
}

fn sets_par(n: usize) -> rayon::range::Iter<u32> {
    (1u32..(1u32 << n)).into_par_iter()
}

pub fn check_capacity_filling(c: &ChoiceTable) -> AxiomReport {
    let n = c.n();
    let witness = sets_par(n).find_map_first(|bits| {
        let s = ChoiceSet::from_bits(bits);
        (1..=n).find_map(|q| {
            let chosen = c.get(s, q);
            (chosen.len() != s.len().min(q))
                .then(|| Witness::new(Axiom::CapacityFilling, vec![Observation::of(c, s, q)], vec![]))
        })
    });
    AxiomReport::from_search(Axiom::CapacityFilling, witness, domain_size(c))
}

pub fn check_gross_substitutes(c: &ChoiceTable) -> AxiomReport {
    let n = c.n();
    let witness = sets_par(n).find_map_first(|bits| {
        let s = ChoiceSet::from_bits(bits);
        for q in 1..=n {
            let chosen = c.get(s, q);
            for a in chosen.iter() {
                for b in s.without(a).iter() {
                    let smaller = s.without(b);
                    if !c.get(smaller, q).contains(a) {
                        return Some(Witness::new(
                            Axiom::GrossSubstitutes,
                            vec![Observation::of(c, s, q), Observation::of(c, smaller, q)],
                            vec![a, b],
                        ));
                    }
                }
            }
        }
        None
    });
    AxiomReport::from_search(Axiom::GrossSubstitutes, witness, domain_size(c))
}

pub fn check_monotonicity(c: &ChoiceTable) -> AxiomReport {
    let n = c.n();
    let witness = sets_par(n).find_map_first(|bits| {
        let s = ChoiceSet::from_bits(bits);
        (1..n).find_map(|q| {
            let lost = c.get(s, q).difference(c.get(s, q + 1));
            lost.first().map(|a| {
                Witness::new(
                    Axiom::Monotonicity,
                    vec![Observation::of(c, s, q), Observation::of(c, s, q + 1)],
                    vec![a],
                )
            })
        })
    });
    AxiomReport::from_search(Axiom::Monotonicity, witness, domain_size(c))
}

/// Irrelevance of accepted alternatives. Sets are bucketed by their
/// rejection set at `q`; within a bucket every member must accept the same
/// alternatives at `q + 1`, so each set is compared with the bucket's first.
pub fn check_iaa(c: &ChoiceTable) -> AxiomReport {
    let n = c.n();
    let witness = (1..n).into_par_iter().find_map_first(|q| {
        // bucket[R] = (first set with that rejection set) + 1; 0 = empty bucket
        let mut bucket = vec![0u32; 1 << n];
        for s in nonempty_sets(n) {
            let r = s.difference(c.get(s, q));
            let slot = &mut bucket[r.bits() as usize];
            if *slot == 0 {
                *slot = s.bits() + 1;
                continue;
            }
            let first = ChoiceSet::from_bits(*slot - 1);
            if c.get(first, q + 1).intersection(r) != c.get(s, q + 1).intersection(r) {
                return Some(iaa_witness(c, first, s, q));
            }
        }
        None
    });
    AxiomReport::from_search(Axiom::Iaa, witness, domain_size(c))
}

fn iaa_witness(c: &ChoiceTable, first: ChoiceSet, second: ChoiceSet, q: usize) -> Witness {
    Witness::new(
        Axiom::Iaa,
        vec![
            Observation::of(c, first, q),
            Observation::of(c, first, q + 1),
            Observation::of(c, second, q),
            Observation::of(c, second, q + 1),
        ],
        vec![],
    )
}

/// The IAA implication for one specific pair of sets at capacity `q`.
/// Returns the witness when the pair violates it.
pub fn iaa_violation_between(c: &ChoiceTable, s: ChoiceSet, other: ChoiceSet, q: usize) -> Option<Witness> {
    if q == 0 || q >= c.n() || s.is_empty() || other.is_empty() {
        return None;
    }
    let w = iaa_witness(c, s, other, q);
    w.violation_holds(None).then_some(w)
}

/// Capacity-wise revealed preference: `a` over `b` at `q` when some `S` has
/// `a, b ∉ C(S,q-1)`, `a ∈ C(S,q)` and `b ∈ R(S,q)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RevealedPreference {
    pub capacity: usize,
    pub edges: BTreeSet<(usize, usize)>,
}

impl RevealedPreference {
    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a, b))
    }

    pub fn is_asymmetric(&self) -> bool {
        self.edges.iter().all(|&(a, b)| !self.contains(b, a))
    }

    /// Some cycle, if any, found by depth-first search from the lowest index.
    pub fn find_cycle(&self, n: usize) -> Option<Vec<usize>> {
        let succ: Vec<u32> = (0..n)
            .map(|a| {
                self.edges
                    .range((a, 0)..(a + 1, 0))
                    .fold(0u32, |acc, &(_, b)| acc | 1 << b)
            })
            .collect();
        find_cycle(&succ)
    }

    pub fn is_acyclic(&self, n: usize) -> bool {
        self.find_cycle(n).is_none()
    }
}

/// Edge matrix of a relation with the first witnessing set per edge.
pub(crate) struct Relation {
    n: usize,
    pub(crate) succ: Vec<u32>,
    first: Vec<Option<(ChoiceSet, usize)>>,
}

impl Relation {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            n,
            succ: vec![0; n],
            first: vec![None; n * n],
        }
    }

    pub(crate) fn add(&mut self, a: usize, b: usize, set: ChoiceSet, q: usize) {
        if self.succ[a] >> b & 1 == 0 {
            self.succ[a] |= 1 << b;
            self.first[a * self.n + b] = Some((set, q));
        }
    }

    pub(crate) fn has(&self, a: usize, b: usize) -> bool {
        self.succ[a] >> b & 1 == 1
    }

    pub(crate) fn source(&self, a: usize, b: usize) -> (ChoiceSet, usize) {
        self.first[a * self.n + b].expect("edge present")
    }

    /// First pair `(a, b)`, `a < b`, related both ways.
    pub(crate) fn symmetric_pair(&self) -> Option<(usize, usize)> {
        (0..self.n).find_map(|a| ((a + 1)..self.n).find(|&b| self.has(a, b) && self.has(b, a)).map(|b| (a, b)))
    }

    pub(crate) fn into_public(self, capacity: usize) -> RevealedPreference {
        let mut edges = BTreeSet::new();
        for a in 0..self.n {
            for b in ChoiceSet::from_bits(self.succ[a]).iter() {
                edges.insert((a, b));
            }
        }
        RevealedPreference { capacity, edges }
    }
}

pub(crate) fn revealed_relation(c: &ChoiceTable, q: usize) -> Relation {
    let n = c.n();
    let mut rel = Relation::new(n);
    for s in nonempty_sets(n) {
        let before = c.get(s, q - 1);
        let at = c.get(s, q);
        let winners = at.difference(before);
        let losers = s.difference(at).difference(before);
        for a in winners.iter() {
            for b in losers.iter() {
                rel.add(a, b, s, q);
            }
        }
    }
    rel
}

pub fn revealed_pref(c: &ChoiceTable, q: usize) -> Result<RevealedPreference> {
    if q < 2 || q > c.n() {
        return Err(Error::RevealedCapacity { capacity: q, min: 2 });
    }
    Ok(revealed_relation(c, q).into_public(q))
}

pub fn check_cwarp(c: &ChoiceTable) -> AxiomReport {
    let n = c.n();
    let witness = (2..=n).into_par_iter().find_map_first(|q| {
        let rel = revealed_relation(c, q);
        rel.symmetric_pair().map(|(a, b)| {
            let (s, _) = rel.source(a, b);
            let (t, _) = rel.source(b, a);
            Witness::new(
                Axiom::Cwarp,
                vec![
                    Observation::of(c, s, q - 1),
                    Observation::of(c, s, q),
                    Observation::of(c, t, q - 1),
                    Observation::of(c, t, q),
                ],
                vec![a, b],
            )
        })
    });
    AxiomReport::from_search(Axiom::Cwarp, witness, domain_size(c))
}

/// The pairwise-sets formulation of CWARP, evaluated directly over all
/// `(S, T)` pairs. Quadratic in the number of sets; used as a cross-check.
pub fn check_cwarp_alt(c: &ChoiceTable) -> AxiomReport {
    let n = c.n();
    let witness = (2..=n).find_map(|q| {
        sets_par(n).find_map_first(|sb| {
            let s = ChoiceSet::from_bits(sb);
            let cs_prev = c.get(s, q - 1);
            let cs = c.get(s, q);
            for t in nonempty_sets(n) {
                let ct_prev = c.get(t, q - 1);
                let ct = c.get(t, q);
                let common = s.intersection(t).difference(cs_prev.union(ct_prev));
                for a in common.intersection(cs).iter() {
                    for b in common.intersection(ct).difference(cs).iter() {
                        if !ct.contains(a) {
                            return Some(Witness::new(
                                Axiom::CwarpAlt,
                                vec![
                                    Observation::of(c, s, q - 1),
                                    Observation::of(c, s, q),
                                    Observation::of(c, t, q - 1),
                                    Observation::of(c, t, q),
                                ],
                                vec![a, b],
                            ));
                        }
                    }
                }
            }
            None
        })
    });
    AxiomReport::from_search(Axiom::CwarpAlt, witness, domain_size(c))
}

/// "Chosen over" relation: `a ∈ C(S,q)` and `b ∈ R(S,q)` for some `S`, over the given capacities.
fn chosen_over(c: &ChoiceTable, capacities: impl Iterator<Item = usize> + Clone) -> Relation {
    let n = c.n();
    let mut rel = Relation::new(n);
    for s in nonempty_sets(n) {
        for q in capacities.clone() {
            let at = c.get(s, q);
            let losers = s.difference(at);
            for a in at.iter() {
                for b in losers.iter() {
                    rel.add(a, b, s, q);
                }
            }
        }
    }
    rel
}

fn chosen_over_witness(c: &ChoiceTable, axiom: Axiom, rel: &Relation) -> Option<Witness> {
    rel.symmetric_pair().map(|(a, b)| {
        let (s, q) = rel.source(a, b);
        let (t, q2) = rel.source(b, a);
        Witness::new(
            axiom,
            vec![Observation::of(c, s, q), Observation::of(c, t, q2)],
            vec![a, b],
        )
    })
}

/// A violation of WrARP at `q` is exactly a pair chosen over each other at `q`.
pub fn check_wrarp(c: &ChoiceTable) -> AxiomReport {
    let n = c.n();
    let witness = (1..=n)
        .into_par_iter()
        .find_map_first(|q| chosen_over_witness(c, Axiom::Wrarp, &chosen_over(c, q..=q)));
    AxiomReport::from_search(Axiom::Wrarp, witness, domain_size(c))
}

/// As WrARP, with the two problems allowed different capacities.
pub fn check_cwrarp(c: &ChoiceTable) -> AxiomReport {
    let n = c.n();
    let rel = chosen_over(c, 1..=n);
    let witness = chosen_over_witness(c, Axiom::Cwrarp, &rel);
    AxiomReport::from_search(Axiom::Cwrarp, witness, domain_size(c))
}

/// `C(S∪T, q) = C(C(S,q) ∪ C(T,q), q)` for all `S, T, q`. Pairs whose
/// choices are both empty are skipped. Quadratic in the number of sets.
pub fn check_path_independence(c: &ChoiceTable) -> AxiomReport {
    let n = c.n();
    let witness = sets_par(n).find_map_first(|sb| {
        let s = ChoiceSet::from_bits(sb);
        for t in nonempty_sets(n) {
            for q in 1..=n {
                let parts = c.get(s, q).union(c.get(t, q));
                if parts.is_empty() {
                    continue;
                }
                if c.get(s.union(t), q) != c.get(parts, q) {
                    return Some(Witness::new(
                        Axiom::PathIndependence,
                        vec![
                            Observation::of(c, s, q),
                            Observation::of(c, t, q),
                            Observation::of(c, s.union(t), q),
                            Observation::of(c, parts, q),
                        ],
                        vec![],
                    ));
                }
            }
        }
        None
    });
    AxiomReport::from_search(Axiom::PathIndependence, witness, domain_size(c))
}

/// `next` is `prev` with exactly one ordering inserted somewhere.
pub fn is_insertion(prev: &[PriorityOrdering], next: &[PriorityOrdering]) -> bool {
    if next.len() != prev.len() + 1 {
        return false;
    }
    (0..next.len()).any(|k| next[..k] == prev[..k] && next[k + 1..] == prev[k..])
}

/// Every capacity's list is an insertion into the previous capacity's list.
pub fn check_insertion(lists: &CapacityWiseLists) -> AxiomReport {
    let witness = (2..=lists.n())
        .find(|&q| !is_insertion(lists.list(q - 1), lists.list(q)))
        .map(|q| Witness::new(Axiom::Insertion, vec![], vec![q]));
    AxiomReport::from_search(Axiom::Insertion, witness, lists.n().saturating_sub(1) as u64)
}

pub fn check_axiom(c: &ChoiceTable, axiom: Axiom) -> Option<AxiomReport> {
    Some(match axiom {
        Axiom::CapacityFilling => check_capacity_filling(c),
        Axiom::GrossSubstitutes => check_gross_substitutes(c),
        Axiom::Monotonicity => check_monotonicity(c),
        Axiom::Iaa => check_iaa(c),
        Axiom::Cwarp => check_cwarp(c),
        Axiom::CwarpAlt => check_cwarp_alt(c),
        Axiom::Wrarp => check_wrarp(c),
        Axiom::Cwrarp => check_cwrarp(c),
        Axiom::PathIndependence => check_path_independence(c),
        Axiom::Insertion | Axiom::FCapacityFilling | Axiom::Csarp => return None,
    })
}

pub fn check_all(c: &ChoiceTable) -> Vec<AxiomReport> {
    Axiom::TABLE_AXIOMS
        .iter()
        .filter_map(|&a| check_axiom(c, a))
        .collect()
}

/// Passes capacity filling, gross substitutes, monotonicity and IAA.
pub fn is_lexicographic(c: &ChoiceTable) -> bool {
    Axiom::LEXICOGRAPHIC
        .iter()
        .all(|&a| check_axiom(c, a).is_some_and(|r| r.passed()))
}

/// Iterative DFS cycle search over a successor bitmatrix; returns the
/// vertices of the first cycle met, starting from the lowest vertex.
pub(crate) fn find_cycle(succ: &[u32]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let n = succ.len();
    let mut mark = vec![Mark::New; n];
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        // stack of (vertex, remaining successors)
        let mut stack = vec![(root, succ[root])];
        mark[root] = Mark::Open;
        while let Some(top) = stack.last_mut() {
            let (v, rest) = *top;
            if rest == 0 {
                mark[v] = Mark::Done;
                stack.pop();
                continue;
            }
            let w = rest.trailing_zeros() as usize;
            top.1 &= rest - 1;
            match mark[w] {
                Mark::New => {
                    mark[w] = Mark::Open;
                    stack.push((w, succ[w]));
                }
                Mark::Open => {
                    let start = stack.iter().position(|&(x, _)| x == w).expect("open vertex on stack");
                    return Some(stack[start..].iter().map(|&(x, _)| x).collect());
                }
                Mark::Done => {}
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rules::{materialize, ChoiceRule, PriorityProfile};

    fn responsive(n: usize) -> ChoiceTable {
        let u = Universe::alphabetic(n).unwrap();
        materialize(&ChoiceRule::Responsive(PriorityOrdering::identity(n)), &u).unwrap()
    }

    fn assert_fails_with_replay(report: &AxiomReport, table: &ChoiceTable) {
        assert_eq!(report.verdict, Verdict::Fail, "{:?}", report.axiom);
        let w = report.witness.as_ref().unwrap();
        assert!(w.replay(table, None), "witness does not replay: {w:?}");
    }

    #[test]
    fn singleton_rule_fails_capacity_filling() {
        let t = fixtures::always_top_singleton();
        let r = check_capacity_filling(&t);
        assert_fails_with_replay(&r, &t);
        let obs = r.witness.unwrap().observations[0];
        assert!(obs.set.len() >= 2 && obs.capacity >= 2);
    }

    #[test]
    fn trivial_tables_pass() {
        let t = responsive(1);
        for report in check_all(&t) {
            assert!(report.passed(), "{:?}", report.axiom);
        }
        assert!(check_cwarp_alt(&t).passed());
    }

    #[test]
    fn gross_substitutes_witness() {
        let t = fixtures::gross_substitutes_violator();
        let u = t.universe().clone();
        let r = check_gross_substitutes(&t);
        assert_fails_with_replay(&r, &t);
        let w = r.witness.unwrap();
        assert_eq!(w.observations[0].set, u.full_set());
        assert_eq!(w.observations[0].capacity, 1);
        assert_eq!(w.observations[1].set, u.set_of(&["a", "b"]).unwrap());
        assert_eq!(w.observations[1].chosen, u.set_of(&["b"]).unwrap());
        assert_eq!(w.alternatives, vec![0, 2]);
        assert!(check_gross_substitutes(&responsive(5)).passed());
    }

    #[test]
    fn monotonicity_witness() {
        let t = fixtures::monotonicity_violator();
        let u = t.universe().clone();
        let r = check_monotonicity(&t);
        assert_fails_with_replay(&r, &t);
        let w = r.witness.unwrap();
        assert_eq!(w.alternatives, vec![0]);
        assert_eq!(w.observations[1].set, u.full_set());
        assert_eq!(w.observations[1].chosen, u.set_of(&["b", "c"]).unwrap());
    }

    #[test]
    fn revealed_preference_requires_capacity_two() {
        let t = responsive(1);
        assert!(matches!(revealed_pref(&t, 1), Err(Error::RevealedCapacity { .. })));
        assert!(revealed_pref(&responsive(3), 1).is_err());
    }

    #[test]
    fn responsive_revealed_preference_is_acyclic() {
        let t = responsive(3);
        let rel = revealed_pref(&t, 2).unwrap();
        // only b over c: a is always chosen at q=1 when present
        assert_eq!(rel.edges.iter().copied().collect::<Vec<_>>(), vec![(1, 2)]);
        assert!(rel.is_asymmetric());
        assert!(rel.is_acyclic(3));
    }

    #[test]
    fn example_rule_reveals_both_directions() {
        let t = fixtures::cwarp_violator();
        let rel = revealed_pref(&t, 2).unwrap();
        assert!(rel.contains(1, 2) && rel.contains(2, 1));
        let r = check_cwarp(&t);
        assert_fails_with_replay(&r, &t);
        assert_eq!(r.witness.as_ref().unwrap().alternatives, vec![1, 2]);
        assert_eq!(r.witness.unwrap().observations[1].capacity, 2);
        let alt = check_cwarp_alt(&t);
        assert_fails_with_replay(&alt, &t);
    }

    #[test]
    fn wrarp_and_cwrarp() {
        let t = responsive(4);
        assert!(check_wrarp(&t).passed());
        assert!(check_cwrarp(&t).passed());

        let u = Universe::alphabetic(4).unwrap();
        let per_q = [
            PriorityOrdering::new(vec![0, 1, 2, 3]).unwrap(),
            PriorityOrdering::new(vec![3, 2, 1, 0]).unwrap(),
            PriorityOrdering::new(vec![1, 3, 0, 2]).unwrap(),
            PriorityOrdering::new(vec![2, 0, 3, 1]).unwrap(),
        ];
        let cw = crate::rules::CapacityWiseLists::capacity_wise_responsive(&per_q).unwrap();
        let cwt = materialize(&ChoiceRule::CapacityWise(cw), &u).unwrap();
        assert!(check_wrarp(&cwt).passed());
        assert_fails_with_replay(&check_cwrarp(&cwt), &cwt);

        let ex = fixtures::cwarp_violator();
        assert_fails_with_replay(&check_wrarp(&ex), &ex);
    }

    #[test]
    fn path_independence() {
        assert!(check_path_independence(&responsive(4)).passed());
        let gs = fixtures::gross_substitutes_violator();
        assert_fails_with_replay(&check_path_independence(&gs), &gs);
    }

    #[test]
    fn insertion_property() {
        let w = PriorityOrdering::identity(3);
        let o = PriorityOrdering::new(vec![2, 1, 0]).unwrap();
        assert!(check_insertion(&crate::rules::build_walk_open(&w, &o, 3)).passed());
        assert!(check_insertion(&crate::rules::build_rotating(&w, &o, 3)).passed());
        let adversarial = crate::rules::CapacityWiseLists::new(vec![
            vec![w.clone()],
            vec![w.clone(), o.clone()],
            vec![o.clone(), w.clone(), w.clone()],
        ])
        .unwrap();
        let r = check_insertion(&adversarial);
        assert!(!r.passed());
        assert_eq!(r.witness.unwrap().alternatives, vec![3]);
    }

    #[test]
    fn lexicographic_tables_pass_everything_characterizing() {
        let u = Universe::alphabetic(4).unwrap();
        let profile = PriorityProfile::new(vec![
            PriorityOrdering::new(vec![0, 1, 2, 3]).unwrap(),
            PriorityOrdering::new(vec![3, 1, 2, 0]).unwrap(),
            PriorityOrdering::new(vec![2, 3, 0, 1]).unwrap(),
            PriorityOrdering::new(vec![1, 0, 3, 2]).unwrap(),
        ])
        .unwrap();
        let t = materialize(&ChoiceRule::Lexicographic(profile), &u).unwrap();
        assert!(is_lexicographic(&t));
        assert!(check_cwarp(&t).passed());
        assert!(check_path_independence(&t).passed());
    }

    #[test]
    fn cycle_search() {
        assert_eq!(find_cycle(&[0b10, 0b100, 0b1]), Some(vec![0, 1, 2]));
        assert_eq!(find_cycle(&[0b10, 0b100, 0]), None);
        assert_eq!(find_cycle(&[0, 0b100, 0b10]), Some(vec![1, 2]));
    }

    #[test]
    fn tampered_witness_does_not_replay() {
        let t = fixtures::cwarp_violator();
        let mut w = check_cwarp(&t).witness.unwrap();
        w.observations[1].chosen = ChoiceSet::EMPTY;
        assert!(!w.replay(&t, None));
    }

    #[test]
    fn axiom_names_round_trip() {
        for a in Axiom::TABLE_AXIOMS {
            assert_eq!(Axiom::from_name(a.name()), Some(a));
        }
        assert_eq!(Axiom::from_name("csarp"), Some(Axiom::Csarp));
    }
}
