//! Constructive impossibility witness for three or more objects, and
//! recovery of a choice structure from a mechanism's single-object behavior.

use super::properties::{MechanismWitness, Property};
use super::{da_allocate, demand, AllocationProblem, CapacityProfile, ChoiceStructure, Item, Mechanism, PreferenceRelation};
use crate::error::{Error, Result};
use crate::rules::ChoiceTable;
use crate::universe::{ChoiceSet, Universe};

/// The ISD violation together with the agents and objects it was built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImpossibilityWitness {
    /// Agent chosen over `j` by both `a` and `b` at capacity 1.
    pub i: usize,
    pub j: usize,
    pub a: usize,
    pub b: usize,
    pub witness: MechanismWitness,
}

/// `first`, then `second`, then `∅`, then the remaining objects in index order.
fn ranking(m: usize, first: usize, second: usize) -> PreferenceRelation {
    let order = [Item::Object(first), Item::Object(second), Item::Null]
        .into_iter()
        .chain((0..m).filter(|&x| x != first && x != second).map(Item::Object))
        .collect();
    PreferenceRelation::new(order).expect("ranking covers every item once")
}

/// Among the first three objects two pick the same agent from `{0, 1}` at
/// capacity 1; call it `i`, the other `j`, and the objects `a < b`. Then
///
/// * `R_i = a b ∅`, `R_j = b a ∅`, `R'_i = R'_j = a b ∅`, everyone else ranks `∅` first
/// * `q` gives `b` capacity 1 and every other object 0, `q' = q + 1_a`
///
/// DA yields equal demand `{i, j}` for `a` at `q` under both profiles, but
/// demand `∅` under `R` and `{j}` under `R'` at `q'`.
pub fn find_impossibility_witness(cs: &ChoiceStructure) -> Result<ImpossibilityWitness> {
    let (n, m) = (cs.n(), cs.m());
    if m < 3 || n < 2 {
        return Err(Error::Precondition(format!(
            "impossibility construction needs at least 3 objects and 2 agents, got {m} and {n}"
        )));
    }
    let pair = ChoiceSet::from_indices([0, 1]);
    let picks: Vec<ChoiceSet> = cs.tables()[..3].iter().map(|t| t.get(pair, 1)).collect();
    if picks.iter().any(|p| p.len() != 1) {
        return Err(Error::Precondition("a choice rule is not capacity-filling on the first two agents".into()));
    }
    let (a, b) = [(0, 1), (0, 2), (1, 2)]
        .into_iter()
        .find(|&(x, y)| picks[x] == picks[y])
        .expect("three singletons from a pair repeat");
    let i = picks[a].first().unwrap();
    let j = 1 - i;

    let mut r = vec![PreferenceRelation::null_first(m); n];
    r[i] = ranking(m, a, b);
    r[j] = ranking(m, b, a);
    let mut r2 = r.clone();
    r2[j] = ranking(m, a, b);
    let mut caps = vec![0; m];
    caps[b] = 1;
    let q = CapacityProfile(caps);
    let q2 = q.increased(a);

    let problems = vec![
        AllocationProblem::new(r.clone(), q.clone())?,
        AllocationProblem::new(r2.clone(), q.clone())?,
        AllocationProblem::new(r, q2.clone())?,
        AllocationProblem::new(r2, q2)?,
    ];
    let allocations = problems.iter().map(|p| da_allocate(cs, p)).collect::<Result<Vec<_>>>()?;
    let witness = MechanismWitness {
        property: Property::Isd,
        problems,
        allocations,
        agent: None,
        object: Some(a),
    };
    if !witness.violation_holds() {
        let d: Vec<ChoiceSet> = witness
            .problems
            .iter()
            .zip(&witness.allocations)
            .map(|(p, al)| demand(al, &p.preferences, a))
            .collect();
        return Err(Error::Precondition(format!(
            "construction did not produce a violation (demands {d:?}); the structure may violate gross substitutes or monotonicity"
        )));
    }
    Ok(ImpossibilityWitness { i, j, a, b, witness })
}

/// `C_x(S, l) = {i ∈ S : φ_i(R_S^x, l·1_x) = x}`, where agents in `S` rank `x`
/// first and `∅` second, and everyone else ranks `∅` first.
pub fn recover_choice_structure(mech: &impl Mechanism, agents: &Universe, m: usize) -> Result<ChoiceStructure> {
    let n = agents.n();
    let tables = (0..m)
        .map(|x| {
            let wants = ranking_first(m, x);
            let results: Vec<_> = crate::universe::enumerate_problems(agents)
                .map(|p| {
                    let prefs = (0..n)
                        .map(|i| {
                            if p.set.contains(i) {
                                wants.clone()
                            } else {
                                PreferenceRelation::null_first(m)
                            }
                        })
                        .collect();
                    let mut caps = vec![0; m];
                    caps[x] = p.capacity;
                    let alloc = mech.allocate(&AllocationProblem::new(prefs, CapacityProfile(caps))?)?;
                    let winners = alloc.holders(Item::Object(x)).intersection(p.set);
                    Ok((p, winners))
                })
                .collect::<Result<_>>()?;
            ChoiceTable::from_entries(agents.clone(), results)
        })
        .collect::<Result<Vec<_>>>()?;
    ChoiceStructure::new(agents.clone(), tables)
}

fn ranking_first(m: usize, x: usize) -> PreferenceRelation {
    let order = [Item::Object(x), Item::Null]
        .into_iter()
        .chain((0..m).filter(|&y| y != x).map(Item::Object))
        .collect();
    PreferenceRelation::new(order).unwrap()
}
