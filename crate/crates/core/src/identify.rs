//! Recovering priority structures from choice tables.
//!
//! Every extractor re-materializes what it found and compares it with the
//! input, so a successful return is always an exact representation.

use crate::axioms::find_cycle;
use crate::error::{Error, Result};
use crate::rules::{
    materialize, CapacityWiseLists, ChoiceRule, ChoiceTable, PriorityOrdering, PriorityProfile,
};
use crate::universe::{nonempty_sets, ChoiceSet, Problem};

/// Rank the universe by repeatedly taking `C(A, 1)` and removing it.
fn peel_singletons(c: &ChoiceTable) -> Result<Vec<usize>> {
    let mut remaining = c.universe().full_set();
    let mut rank = Vec::with_capacity(c.n());
    while !remaining.is_empty() {
        let top = c.get(remaining, 1);
        if top.len() != 1 {
            return Err(Error::ExtractionStep {
                ordering: 1,
                position: rank.len() + 1,
                found: top,
            });
        }
        let a = top.first().unwrap();
        rank.push(a);
        remaining.remove(a);
    }
    Ok(rank)
}

pub(crate) fn validate(c: &ChoiceTable, rule: &ChoiceRule) -> Result<()> {
    let rebuilt = materialize(rule, c.universe())?;
    match c.first_difference(&rebuilt) {
        None => Ok(()),
        Some(problem) => Err(Error::ValidationMismatch {
            problem,
            expected: c.get(problem.set, problem.capacity),
            rebuilt: rebuilt.get(problem.set, problem.capacity),
        }),
    }
}

/// A profile whose lexicographic rule reproduces `c`.
///
/// `≻_1` ranks by repeated single choices. For `i >= 2`, let `F` be the
/// first picks of the earlier orderings from the full set `A`; `≻_i` then
/// ranks `A \ F` by peeling `C(A \ {already ranked}, i) \ F`, and ends with
/// `F` in pick order.
pub fn extract_lex_profile(c: &ChoiceTable) -> Result<PriorityProfile> {
    let n = c.n();
    let full = c.universe().full_set();
    let first = peel_singletons(c)?;
    let mut firsts = vec![first[0]];
    let mut orderings = vec![PriorityOrdering::new(first)?];
    for i in 2..=n {
        let forced = ChoiceSet::from_indices(firsts.iter().copied());
        let mut ranked = ChoiceSet::EMPTY;
        let mut rank = Vec::with_capacity(n);
        for position in 1..=n - i + 1 {
            let pick = c.get(full.difference(ranked), i).difference(forced);
            if pick.len() != 1 {
                return Err(Error::ExtractionStep {
                    ordering: i,
                    position,
                    found: pick,
                });
            }
            let a = pick.first().unwrap();
            rank.push(a);
            ranked.insert(a);
        }
        firsts.push(rank[0]);
        rank.extend(firsts[..i - 1].iter().copied());
        orderings.push(PriorityOrdering::new(rank)?);
    }
    let profile = PriorityProfile::new(orderings)?;
    validate(c, &ChoiceRule::Lexicographic(profile.clone()))?;
    Ok(profile)
}

/// `A_t = A \ C(A, t-1)` for `t = 1..=n` over the full set `A` (so `A_1 = A`).
/// Requires `|C(A, t)| = t` along the chain.
pub fn residual_sets(c: &ChoiceTable) -> Result<Vec<ChoiceSet>> {
    let full = c.universe().full_set();
    (1..=c.n())
        .map(|t| {
            let chosen = c.get_or_empty(full, t - 1);
            if chosen.len() != t - 1 {
                return Err(Error::NotCapacityFilling(Problem::new(full, t - 1)));
            }
            Ok(full.difference(chosen))
        })
        .collect()
}

/// `p` and `other` induce the same lexicographic rule as `c`, the
/// materialization of `p`: equal first orderings and, for every `t`, equal
/// restrictions of `≻_t` to the residual set `A_t` of `c`.
pub fn profiles_equivalent(c: &ChoiceTable, p: &PriorityProfile, other: &PriorityProfile) -> Result<bool> {
    let own = materialize(&ChoiceRule::Lexicographic(p.clone()), c.universe())?;
    if let Some(problem) = c.first_difference(&own) {
        return Err(Error::NotMaterialization(problem));
    }
    if other.n() != p.n() {
        return Ok(false);
    }
    let residuals = residual_sets(c)?;
    Ok(p.get(0) == other.get(0)
        && residuals
            .iter()
            .zip(p.orderings().iter().zip(other.orderings()))
            .all(|(&a_t, (x, y))| x.restricted(a_t) == y.restricted(a_t)))
}

/// The ordering of a responsive rule reproducing `c`.
pub fn extract_responsive(c: &ChoiceTable) -> Result<PriorityOrdering> {
    let ordering = PriorityOrdering::new(peel_singletons(c)?)?;
    validate(c, &ChoiceRule::Responsive(ordering.clone()))?;
    Ok(ordering)
}

/// Topological order of a successor bitmatrix, smallest index first among ties.
pub(crate) fn topo_sort(succ: &[u32]) -> Option<Vec<usize>> {
    let n = succ.len();
    let mut indegree = vec![0usize; n];
    for &row in succ {
        for b in ChoiceSet::from_bits(row).iter() {
            indegree[b] += 1;
        }
    }
    let mut ready: ChoiceSet = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.first() {
        ready.remove(v);
        order.push(v);
        for b in ChoiceSet::from_bits(succ[v]).iter() {
            indegree[b] -= 1;
            if indegree[b] == 0 {
                ready.insert(b);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// One ordering per capacity such that `C(·, q)` is responsive to the `q`-th.
pub fn extract_capacity_wise_responsive(c: &ChoiceTable) -> Result<Vec<PriorityOrdering>> {
    let n = c.n();
    let mut orderings = Vec::with_capacity(n);
    for q in 1..=n {
        let mut succ = vec![0u32; n];
        for s in nonempty_sets(n) {
            let chosen = c.get(s, q);
            let losers = s.difference(chosen).bits();
            for a in chosen.iter() {
                succ[a] |= losers;
            }
        }
        let order = topo_sort(&succ).ok_or(Error::CyclicRevealedPreference { capacity: q })?;
        orderings.push(PriorityOrdering::new(order)?);
    }
    let lists = CapacityWiseLists::capacity_wise_responsive(&orderings)?;
    validate(c, &ChoiceRule::CapacityWise(lists))?;
    Ok(orderings)
}

/// Some cycle in the chosen-over relation at `q`, for diagnostics.
pub fn chosen_over_cycle(c: &ChoiceTable, q: usize) -> Option<Vec<usize>> {
    let n = c.n();
    let mut succ = vec![0u32; n];
    for s in nonempty_sets(n) {
        let chosen = c.get(s, q);
        for a in chosen.iter() {
            succ[a] |= s.difference(chosen).bits();
        }
    }
    find_cycle(&succ)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rules::lex_choose;
    use crate::universe::Universe;

    fn ord(v: &[usize]) -> PriorityOrdering {
        PriorityOrdering::new(v.to_vec()).unwrap()
    }

    #[test]
    fn round_trip_small_profile() {
        let u = Universe::alphabetic(4).unwrap();
        let p = PriorityProfile::new(vec![ord(&[2, 0, 3, 1]), ord(&[1, 3, 0, 2]), ord(&[0, 1, 2, 3]), ord(&[3, 2, 1, 0])]).unwrap();
        let t = materialize(&ChoiceRule::Lexicographic(p.clone()), &u).unwrap();
        let q = extract_lex_profile(&t).unwrap();
        assert!(profiles_equivalent(&t, &p, &q).unwrap());
        let again = materialize(&ChoiceRule::Lexicographic(q), &u).unwrap();
        assert!(t.same_choices(&again));
    }

    #[test]
    fn residuals_follow_first_picks() {
        let u = Universe::alphabetic(3).unwrap();
        let p = PriorityProfile::new(vec![ord(&[1, 0, 2]), ord(&[2, 1, 0]), ord(&[0, 1, 2])]).unwrap();
        let t = materialize(&ChoiceRule::Lexicographic(p), &u).unwrap();
        let r = residual_sets(&t).unwrap();
        assert_eq!(r[0], u.full_set());
        assert_eq!(r[1], u.set_of(&["a", "c"]).unwrap());
        assert_eq!(r[2], u.set_of(&["a"]).unwrap());
    }

    #[test]
    fn equivalence_ignores_irrelevant_positions() {
        let p = PriorityProfile::new(vec![ord(&[0, 1, 2]), ord(&[1, 2, 0]), ord(&[2, 0, 1])]).unwrap();
        // ≻_2 only matters on {b, c}; ≻_3 only on {c}
        let q = PriorityProfile::new(vec![ord(&[0, 1, 2]), ord(&[0, 1, 2]), ord(&[0, 1, 2])]).unwrap();
        let u = Universe::alphabetic(3).unwrap();
        let t = materialize(&ChoiceRule::Lexicographic(p.clone()), &u).unwrap();
        assert!(profiles_equivalent(&t, &p, &q).unwrap());
        assert!(profiles_equivalent(&t, &p, &p).unwrap());
        let r = PriorityProfile::new(vec![ord(&[0, 1, 2]), ord(&[2, 1, 0]), ord(&[0, 1, 2])]).unwrap();
        assert!(!profiles_equivalent(&t, &p, &r).unwrap());
        assert!(matches!(profiles_equivalent(&t, &r, &p), Err(Error::NotMaterialization(_))));
        for s in nonempty_sets(3) {
            for cap in 1..=3 {
                let pr = Problem::new(s, cap);
                assert_eq!(lex_choose(&p, pr), lex_choose(&q, pr));
            }
        }
    }

    #[test]
    fn residuals_need_capacity_filling() {
        assert!(matches!(
            residual_sets(&fixtures::always_top_singleton()),
            Err(Error::NotCapacityFilling(_))
        ));
    }

    #[test]
    fn non_lexicographic_tables_fail_extraction() {
        assert!(matches!(
            extract_lex_profile(&fixtures::always_top_singleton()),
            Err(Error::ExtractionStep { .. })
        ));
        assert!(extract_lex_profile(&fixtures::walk_open_example()).is_err());
        assert!(extract_lex_profile(&fixtures::cwarp_violator()).is_err());
    }

    #[test]
    fn responsive_extraction() {
        let u = Universe::alphabetic(4).unwrap();
        let o = ord(&[3, 1, 0, 2]);
        let t = materialize(&ChoiceRule::Responsive(o.clone()), &u).unwrap();
        assert_eq!(extract_responsive(&t).unwrap(), o);
        let lex = extract_lex_profile(&t).unwrap();
        assert!(profiles_equivalent(&t, &lex, &PriorityProfile::constant(o)).unwrap());
        assert!(extract_responsive(&fixtures::walk_open_example()).is_err());
    }

    #[test]
    fn capacity_wise_responsive_extraction() {
        let u = Universe::alphabetic(4).unwrap();
        let per_q = vec![ord(&[0, 1, 2, 3]), ord(&[3, 2, 1, 0]), ord(&[1, 3, 0, 2]), ord(&[2, 0, 3, 1])];
        let lists = CapacityWiseLists::capacity_wise_responsive(&per_q).unwrap();
        let t = materialize(&ChoiceRule::CapacityWise(lists), &u).unwrap();
        let got = extract_capacity_wise_responsive(&t).unwrap();
        // only capacity 1 compares every pair
        assert_eq!(got[0], per_q[0]);
        let rebuilt = CapacityWiseLists::capacity_wise_responsive(&got).unwrap();
        assert!(t.same_choices(&materialize(&ChoiceRule::CapacityWise(rebuilt), &u).unwrap()));
        assert_eq!(
            extract_capacity_wise_responsive(&fixtures::cwarp_violator()),
            Err(Error::CyclicRevealedPreference { capacity: 1 })
        );
        assert!(chosen_over_cycle(&fixtures::cwarp_violator(), 2).is_some());
    }

    #[test]
    fn topological_order_prefers_small_indices() {
        assert_eq!(topo_sort(&[0, 0, 0]), Some(vec![0, 1, 2]));
        assert_eq!(topo_sort(&[0, 0b1, 0]), Some(vec![1, 0, 2]));
        assert_eq!(topo_sort(&[0b10, 0b1]), None);
    }
}
