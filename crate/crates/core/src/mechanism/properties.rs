//! Property checkers over an enumerated or sampled space of allocation
//! problems. The mechanism is evaluated once per problem in the space and
//! cached; deviations outside the space are evaluated on demand.

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{demand, Allocation, AllocationProblem, CapacityProfile, Item, Mechanism, PreferenceRelation};
use crate::axioms::Verdict;
use crate::error::{Error, Result};
use crate::universe::ChoiceSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Property {
    UnavailableTypeInvariance,
    WeakNonWastefulness,
    ResourceMonotonicity,
    TruncationInvariance,
    StrategyProofness,
    Isd,
    WeakIsd,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::UnavailableTypeInvariance,
        Property::WeakNonWastefulness,
        Property::ResourceMonotonicity,
        Property::TruncationInvariance,
        Property::StrategyProofness,
        Property::Isd,
        Property::WeakIsd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::UnavailableTypeInvariance => "unavailable_type_invariance",
            Property::WeakNonWastefulness => "weak_non_wastefulness",
            Property::ResourceMonotonicity => "resource_monotonicity",
            Property::TruncationInvariance => "truncation_invariance",
            Property::StrategyProofness => "strategy_proofness",
            Property::Isd => "isd",
            Property::WeakIsd => "weak_isd",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Preference profiles crossed with capacity profiles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MechanismSpace {
    n: usize,
    m: usize,
    profiles: Vec<Vec<PreferenceRelation>>,
    capacities: Vec<CapacityProfile>,
    exhaustive: bool,
}

fn all_capacity_profiles(n: usize, m: usize) -> Vec<CapacityProfile> {
    let mut out = Vec::new();
    let mut caps = vec![0usize; m];
    loop {
        out.push(CapacityProfile(caps.clone()));
        let Some(pos) = (0..m).rev().find(|&x| caps[x] < n) else { break };
        caps[pos] += 1;
        caps[pos + 1..].iter_mut().for_each(|q| *q = 0);
    }
    out
}

impl MechanismSpace {
    /// Every preference profile and every capacity profile in `0..=n` per object.
    pub fn exhaustive(n: usize, m: usize) -> Result<Self> {
        let relations = PreferenceRelation::all(m);
        let count = relations.len().checked_pow(n as u32).filter(|&c| c <= 1 << 20);
        if n == 0 || m == 0 || count.is_none() {
            return Err(Error::Precondition(format!("exhaustive space too large or empty for n={n}, m={m}")));
        }
        let mut profiles = Vec::new();
        let mut idx = vec![0usize; n];
        loop {
            profiles.push(idx.iter().map(|&k| relations[k].clone()).collect());
            let Some(pos) = (0..n).rev().find(|&i| idx[i] + 1 < relations.len()) else { break };
            idx[pos] += 1;
            idx[pos + 1..].iter_mut().for_each(|k| *k = 0);
        }
        Ok(Self {
            n,
            m,
            profiles,
            capacities: all_capacity_profiles(n, m),
            exhaustive: true,
        })
    }

    /// Every preference profile crossed with capacity profiles in which at most
    /// one object has positive capacity.
    pub fn single_object(n: usize, m: usize) -> Result<Self> {
        let mut space = Self::exhaustive(n, m)?;
        space.capacities.retain(|c| c.available().count() <= 1);
        space.exhaustive = false;
        Ok(space)
    }

    /// `profiles` random preference profiles and `capacities` random capacity
    /// profiles from a seeded generator.
    pub fn sampled(n: usize, m: usize, profiles: usize, capacities: usize, seed: u64) -> Result<Self> {
        if n == 0 || m == 0 || profiles == 0 || capacities == 0 {
            return Err(Error::Precondition("sampled space must be nonempty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base: Vec<Item> = (0..m).map(Item::Object).chain([Item::Null]).collect();
        let profiles = (0..profiles)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        let mut order = base.clone();
                        order.shuffle(&mut rng);
                        PreferenceRelation::new(order).unwrap()
                    })
                    .collect()
            })
            .collect();
        let capacities = (0..capacities)
            .map(|_| CapacityProfile((0..m).map(|_| rng.gen_range(0..=n)).collect()))
            .collect();
        Ok(Self {
            n,
            m,
            profiles,
            capacities,
            exhaustive: false,
        })
    }

    pub fn from_parts(profiles: Vec<Vec<PreferenceRelation>>, capacities: Vec<CapacityProfile>) -> Result<Self> {
        let first = profiles.first().ok_or(Error::Precondition("space needs a profile".into()))?;
        let n = first.len();
        let m = capacities
            .first()
            .ok_or(Error::Precondition("space needs a capacity profile".into()))?
            .m();
        for p in &profiles {
            for c in &capacities {
                AllocationProblem::new(p.clone(), c.clone())?;
                if p.len() != n || c.m() != m {
                    return Err(Error::ShapeMismatch("space profiles differ in shape"));
                }
            }
        }
        Ok(Self {
            n,
            m,
            profiles,
            capacities,
            exhaustive: false,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn profiles(&self) -> &[Vec<PreferenceRelation>] {
        &self.profiles
    }

    pub fn capacities(&self) -> &[CapacityProfile] {
        &self.capacities
    }

    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    pub fn len(&self) -> usize {
        self.profiles.len() * self.capacities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn problem(&self, profile: usize, caps: usize) -> AllocationProblem {
        AllocationProblem {
            preferences: self.profiles[profile].clone(),
            capacities: self.capacities[caps].clone(),
        }
    }

    /// Problems in space order: capacity profile major, preference profile minor.
    pub fn problems(&self) -> impl Iterator<Item = AllocationProblem> + '_ {
        (0..self.capacities.len()).flat_map(move |c| (0..self.profiles.len()).map(move |p| self.problem(p, c)))
    }
}

/// Mechanism outcomes for every problem of a space, indexed `[caps][profile]`.
struct Outcomes<'a> {
    space: &'a MechanismSpace,
    allocations: Vec<Vec<Allocation>>,
}

impl<'a> Outcomes<'a> {
    fn compute(m: &impl Mechanism, space: &'a MechanismSpace) -> Result<Self> {
        let allocations = space
            .capacities
            .iter()
            .enumerate()
            .map(|(c, _)| {
                (0..space.profiles.len())
                    .into_par_iter()
                    .map(|p| m.allocate(&space.problem(p, c)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { space, allocations })
    }

    fn get(&self, profile: usize, caps: usize) -> &Allocation {
        &self.allocations[caps][profile]
    }

    fn index_of_caps(&self, caps: &CapacityProfile) -> Option<usize> {
        self.space.capacities.iter().position(|c| c == caps)
    }

    /// Outcome at `(profile, caps)`, from the cache when the capacity profile is in the space.
    fn outcome(&self, m: &impl Mechanism, profile: usize, caps: &CapacityProfile) -> Result<Allocation> {
        match self.index_of_caps(caps) {
            Some(c) => Ok(self.get(profile, c).clone()),
            None => m.allocate(&AllocationProblem {
                preferences: self.space.profiles[profile].clone(),
                capacities: caps.clone(),
            }),
        }
    }
}

/// Problems and outcomes exhibiting a property violation. Layout by property:
///
/// * unavailable-type invariance: two problems with equal capacities whose
///   preferences agree on available items, different allocations
/// * weak non-wastefulness: one problem; `agent` gets `∅` while preferring
///   the unexhausted `object`
/// * resource monotonicity: problems at `q` and `q' ≥ q`; `agent` is worse off at `q'`
/// * truncation invariance: problems differing in `agent` moving `∅` up
/// * strategy-proofness: truthful problem, then `agent`'s misreport which they prefer
/// * ISD / weak ISD: `(R,q), (R',q), (R,q+1_x), (R',q+1_x)` with `object = x`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MechanismWitness {
    pub property: Property,
    pub problems: Vec<AllocationProblem>,
    pub allocations: Vec<Allocation>,
    pub agent: Option<usize>,
    pub object: Option<usize>,
}

impl MechanismWitness {
    /// The recorded allocations exhibit the violation.
    pub fn violation_holds(&self) -> bool {
        let (p, a) = (&self.problems, &self.allocations);
        if p.len() != a.len() || p.is_empty() {
            return false;
        }
        match self.property {
            Property::UnavailableTypeInvariance => {
                p.len() == 2
                    && p[0].capacities == p[1].capacities
                    && available_view(&p[0]) == available_view(&p[1])
                    && a[0] != a[1]
            }
            Property::WeakNonWastefulness => {
                let (Some(i), Some(x)) = (self.agent, self.object) else { return false };
                p.len() == 1 && wasted(&p[0], &a[0], i, x)
            }
            Property::ResourceMonotonicity => {
                let Some(i) = self.agent else { return false };
                p.len() == 2
                    && p[0].preferences == p[1].preferences
                    && p[0].capacities.le(&p[1].capacities)
                    && p[0].preferences[i].prefers(a[0].get(i), a[1].get(i))
            }
            Property::TruncationInvariance => {
                let Some(i) = self.agent else { return false };
                p.len() == 2
                    && p[0].capacities == p[1].capacities
                    && only_agent_differs(&p[0], &p[1], i)
                    && p[0].preferences[i].object_order() == p[1].preferences[i].object_order()
                    && p[1].preferences[i].rank(Item::Null) <= p[0].preferences[i].rank(Item::Null)
                    && p[1].preferences[i].weakly_prefers(a[0].get(i), Item::Null)
                    && a[0] != a[1]
            }
            Property::StrategyProofness => {
                let Some(i) = self.agent else { return false };
                p.len() == 2
                    && p[0].capacities == p[1].capacities
                    && only_agent_differs(&p[0], &p[1], i)
                    && p[0].preferences[i].prefers(a[1].get(i), a[0].get(i))
            }
            Property::Isd | Property::WeakIsd => {
                let Some(x) = self.object else { return false };
                if p.len() != 4 {
                    return false;
                }
                let single = self.property == Property::Isd
                    || p[0].capacities.0.iter().enumerate().all(|(y, &q)| y == x || q == 0);
                let raised = p[0].capacities.increased(x);
                let shaped = p[0].capacities == p[1].capacities
                    && p[2].capacities == raised
                    && p[3].capacities == raised
                    && p[2].preferences == p[0].preferences
                    && p[3].preferences == p[1].preferences;
                let d = |k: usize| demand(&a[k], &p[k].preferences, x);
                single && shaped && d(0) == d(1) && d(2) != d(3)
            }
        }
    }

    /// Recompute every allocation with `m`; they must match the record and
    /// exhibit the violation.
    pub fn replay(&self, m: &impl Mechanism) -> Result<bool> {
        for (p, a) in self.problems.iter().zip(&self.allocations) {
            if &m.allocate(p)? != a {
                return Ok(false);
            }
        }
        Ok(self.violation_holds())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MechanismReport {
    pub property: Property,
    pub verdict: Verdict,
    pub witness: Option<MechanismWitness>,
    /// Problems (or problem pairs / deviations) examined.
    pub problems_checked: u64,
    pub exhaustive: bool,
}

impl MechanismReport {
    fn new(property: Property, witness: Option<MechanismWitness>, problems_checked: u64, space: &MechanismSpace) -> Self {
        Self {
            property,
            verdict: if witness.is_some() { Verdict::Fail } else { Verdict::Pass },
            witness,
            problems_checked,
            exhaustive: space.exhaustive,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn available_view(p: &AllocationProblem) -> Vec<Vec<Item>> {
    let caps = &p.capacities;
    p.preferences
        .iter()
        .map(|r| {
            r.restricted(|item| match item {
                Item::Object(x) => caps.get(x) > 0,
                Item::Null => true,
            })
        })
        .collect()
}

fn wasted(p: &AllocationProblem, a: &Allocation, i: usize, x: usize) -> bool {
    let q = p.capacities.get(x);
    a.get(i) == Item::Null
        && p.preferences[i].prefers(Item::Object(x), Item::Null)
        && q > 0
        && a.holders(Item::Object(x)).len() < q
}

fn only_agent_differs(p: &AllocationProblem, other: &AllocationProblem, i: usize) -> bool {
    p.n() == other.n() && (0..p.n()).all(|j| j == i || p.preferences[j] == other.preferences[j])
}

/// Profiles agreeing on available items must receive the same allocation.
pub fn check_unavailable_type_invariance(m: &impl Mechanism, space: &MechanismSpace) -> Result<MechanismReport> {
    let out = Outcomes::compute(m, space)?;
    let mut witness = None;
    'caps: for c in 0..space.capacities.len() {
        let mut first: HashMap<Vec<Vec<Item>>, usize> = HashMap::new();
        for p in 0..space.profiles.len() {
            let problem = space.problem(p, c);
            let key = available_view(&problem);
            match first.get(&key) {
                None => {
                    first.insert(key, p);
                }
                Some(&p0) => {
                    if out.get(p0, c) != out.get(p, c) {
                        witness = Some(MechanismWitness {
                            property: Property::UnavailableTypeInvariance,
                            problems: vec![space.problem(p0, c), problem],
                            allocations: vec![out.get(p0, c).clone(), out.get(p, c).clone()],
                            agent: None,
                            object: None,
                        });
                        break 'caps;
                    }
                }
            }
        }
    }
    Ok(MechanismReport::new(Property::UnavailableTypeInvariance, witness, space.len() as u64, space))
}

pub fn check_weak_non_wastefulness(m: &impl Mechanism, space: &MechanismSpace) -> Result<MechanismReport> {
    let out = Outcomes::compute(m, space)?;
    let witness = (0..space.capacities.len()).find_map(|c| {
        (0..space.profiles.len()).find_map(|p| {
            let problem = space.problem(p, c);
            let a = out.get(p, c);
            (0..space.n).find_map(|i| {
                (0..space.m).find(|&x| wasted(&problem, a, i, x)).map(|x| MechanismWitness {
                    property: Property::WeakNonWastefulness,
                    problems: vec![problem.clone()],
                    allocations: vec![a.clone()],
                    agent: Some(i),
                    object: Some(x),
                })
            })
        })
    });
    Ok(MechanismReport::new(Property::WeakNonWastefulness, witness, space.len() as u64, space))
}

/// For every profile and every pair `q ≤ q'` of capacity profiles in the space.
pub fn check_resource_monotonicity(m: &impl Mechanism, space: &MechanismSpace) -> Result<MechanismReport> {
    let out = Outcomes::compute(m, space)?;
    let caps = &space.capacities;
    let mut pairs = 0u64;
    let mut witness = None;
    'outer: for (c, low) in caps.iter().enumerate() {
        for (c2, high) in caps.iter().enumerate() {
            if !low.le(high) {
                continue;
            }
            for p in 0..space.profiles.len() {
                pairs += 1;
                let (a, b) = (out.get(p, c), out.get(p, c2));
                let prefs = &space.profiles[p];
                if let Some(i) = (0..space.n).find(|&i| prefs[i].prefers(a.get(i), b.get(i))) {
                    witness = Some(MechanismWitness {
                        property: Property::ResourceMonotonicity,
                        problems: vec![space.problem(p, c), space.problem(p, c2)],
                        allocations: vec![a.clone(), b.clone()],
                        agent: Some(i),
                        object: None,
                    });
                    break 'outer;
                }
            }
        }
    }
    Ok(MechanismReport::new(Property::ResourceMonotonicity, witness, pairs, space))
}

/// Truncations of `r`: same object order with `∅` moved up (or left in place).
fn truncations(r: &PreferenceRelation) -> Vec<PreferenceRelation> {
    let objects = r.object_order();
    (0..=r.rank(Item::Null))
        .map(|k| {
            let order = objects[..k]
                .iter()
                .map(|&x| Item::Object(x))
                .chain([Item::Null])
                .chain(objects[k..].iter().map(|&x| Item::Object(x)))
                .collect();
            PreferenceRelation::new(order).unwrap()
        })
        .collect()
}

/// An agent truncating their list, while keeping their allotment acceptable,
/// leaves the allocation unchanged. Unilateral truncations suffice: a joint
/// truncation is a sequence of unilateral ones that each keep the allocation.
pub fn check_truncation_invariance(m: &impl Mechanism, space: &MechanismSpace) -> Result<MechanismReport> {
    let out = Outcomes::compute(m, space)?;
    let per_profile = space.profiles.len();
    let total = space.capacities.len() * per_profile;
    let found = (0..total)
        .into_par_iter()
        .map(|k| -> Result<Option<MechanismWitness>> {
            let (c, p) = (k / per_profile, k % per_profile);
            let problem = space.problem(p, c);
            let a = out.get(p, c);
            for i in 0..space.n {
                for r in truncations(&problem.preferences[i]) {
                    if r == problem.preferences[i] || !r.weakly_prefers(a.get(i), Item::Null) {
                        continue;
                    }
                    let dev = problem.with_preference(i, r);
                    let b = m.allocate(&dev)?;
                    if &b != a {
                        return Ok(Some(MechanismWitness {
                            property: Property::TruncationInvariance,
                            problems: vec![problem.clone(), dev],
                            allocations: vec![a.clone(), b],
                            agent: Some(i),
                            object: None,
                        }));
                    }
                }
            }
            Ok(None)
        })
        .find_map_first(|r| match r {
            Ok(None) => None,
            other => Some(other),
        });
    let witness = found.transpose()?.flatten();
    let checked = total as u64 * space.n as u64;
    Ok(MechanismReport::new(Property::TruncationInvariance, witness, checked, space))
}

/// No agent gains by reporting any other relation.
pub fn check_strategy_proofness(m: &impl Mechanism, space: &MechanismSpace) -> Result<MechanismReport> {
    let out = Outcomes::compute(m, space)?;
    let relations = PreferenceRelation::all(space.m);
    let per_profile = space.profiles.len();
    let total = space.capacities.len() * per_profile;
    let found = (0..total)
        .into_par_iter()
        .map(|k| -> Result<Option<MechanismWitness>> {
            let (c, p) = (k / per_profile, k % per_profile);
            let problem = space.problem(p, c);
            let a = out.get(p, c);
            for i in 0..space.n {
                let truth = &problem.preferences[i];
                for r in &relations {
                    if r == truth {
                        continue;
                    }
                    let dev = problem.with_preference(i, r.clone());
                    let b = m.allocate(&dev)?;
                    if truth.prefers(b.get(i), a.get(i)) {
                        return Ok(Some(MechanismWitness {
                            property: Property::StrategyProofness,
                            problems: vec![problem.clone(), dev],
                            allocations: vec![a.clone(), b],
                            agent: Some(i),
                            object: None,
                        }));
                    }
                }
            }
            Ok(None)
        })
        .find_map_first(|r| match r {
            Ok(None) => None,
            other => Some(other),
        });
    let witness = found.transpose()?.flatten();
    let checked = total as u64 * space.n as u64 * relations.len().saturating_sub(1) as u64;
    Ok(MechanismReport::new(Property::StrategyProofness, witness, checked, space))
}

fn isd_search(
    m: &impl Mechanism,
    space: &MechanismSpace,
    property: Property,
    admissible: impl Fn(&CapacityProfile, usize) -> bool,
) -> Result<MechanismReport> {
    let out = Outcomes::compute(m, space)?;
    let mut checked = 0u64;
    for (c, caps) in space.capacities.iter().enumerate() {
        for x in 0..space.m {
            if caps.get(x) >= space.n || !admissible(caps, x) {
                continue;
            }
            let raised = caps.increased(x);
            // demand before -> (first profile, demand after)
            let mut seen: HashMap<ChoiceSet, (usize, ChoiceSet)> = HashMap::new();
            for p in 0..space.profiles.len() {
                checked += 1;
                let prefs = &space.profiles[p];
                let before = demand(out.get(p, c), prefs, x);
                let after_alloc = out.outcome(m, p, &raised)?;
                let after = demand(&after_alloc, prefs, x);
                match seen.get(&before) {
                    None => {
                        seen.insert(before, (p, after));
                    }
                    Some(&(p0, after0)) if after0 != after => {
                        let r0 = space.problem(p0, c);
                        let r1 = space.problem(p, c);
                        let a0_after = out.outcome(m, p0, &raised)?;
                        let witness = MechanismWitness {
                            property,
                            problems: vec![
                                r0.clone(),
                                r1.clone(),
                                r0.with_capacities(raised.clone()),
                                r1.with_capacities(raised.clone()),
                            ],
                            allocations: vec![out.get(p0, c).clone(), out.get(p, c).clone(), a0_after, after_alloc],
                            agent: None,
                            object: Some(x),
                        };
                        return Ok(MechanismReport::new(property, Some(witness), checked, space));
                    }
                    Some(_) => {}
                }
            }
        }
    }
    Ok(MechanismReport::new(property, None, checked, space))
}

/// Equal demand for `x` at `q` implies equal demand for `x` at `q + 1_x`,
/// over every pair of profiles in the space.
pub fn check_isd(m: &impl Mechanism, space: &MechanismSpace) -> Result<MechanismReport> {
    isd_search(m, space, Property::Isd, |_, _| true)
}

/// As [`check_isd`], restricted to capacity profiles where every object
/// other than `x` has capacity zero.
pub fn check_weak_isd(m: &impl Mechanism, space: &MechanismSpace) -> Result<MechanismReport> {
    isd_search(m, space, Property::WeakIsd, |caps, x| {
        caps.0.iter().enumerate().all(|(y, &q)| y == x || q == 0)
    })
}

pub fn check_property(m: &impl Mechanism, space: &MechanismSpace, property: Property) -> Result<MechanismReport> {
    match property {
        Property::UnavailableTypeInvariance => check_unavailable_type_invariance(m, space),
        Property::WeakNonWastefulness => check_weak_non_wastefulness(m, space),
        Property::ResourceMonotonicity => check_resource_monotonicity(m, space),
        Property::TruncationInvariance => check_truncation_invariance(m, space),
        Property::StrategyProofness => check_strategy_proofness(m, space),
        Property::Isd => check_isd(m, space),
        Property::WeakIsd => check_weak_isd(m, space),
    }
}

pub fn check_all_properties(m: &impl Mechanism, space: &MechanismSpace) -> Result<Vec<MechanismReport>> {
    Property::ALL.iter().map(|&p| check_property(m, space, p)).collect()
}
