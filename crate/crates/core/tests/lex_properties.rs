use lexichoice::axioms::{check_axiom, check_cwarp, check_cwarp_alt, check_insertion, is_insertion, Axiom};
use lexichoice::identify::{extract_lex_profile, extract_responsive, profiles_equivalent};
use lexichoice::rules::{satisfies_boston_requirement, satisfies_paired_zones, BostonRule};
use lexichoice::{
    materialize, CapacityWiseLists, ChoiceRule, ChoiceSet, ChoiceTable, PriorityOrdering, PriorityProfile, Universe,
};
use proptest::prelude::*;

fn ordering(n: usize) -> impl Strategy<Value = PriorityOrdering> {
    Just((0..n).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|r| PriorityOrdering::new(r).unwrap())
}

fn profile(n: usize) -> impl Strategy<Value = PriorityProfile> {
    prop::collection::vec(ordering(n), n).prop_map(|o| PriorityProfile::new(o).unwrap())
}

fn sized_profile(max_n: usize) -> impl Strategy<Value = (usize, PriorityProfile)> {
    (1..=max_n).prop_flat_map(|n| (Just(n), profile(n)))
}

fn lex_table(n: usize, p: &PriorityProfile) -> ChoiceTable {
    materialize(&ChoiceRule::Lexicographic(p.clone()), &Universe::alphabetic(n).unwrap()).unwrap()
}

/// A capacity-filling table with arbitrary picks.
fn filling_table(n: usize) -> impl Strategy<Value = ChoiceTable> {
    let u = Universe::alphabetic(n).unwrap();
    let count = u.problem_count();
    prop::collection::vec(any::<u64>(), count).prop_map(move |seeds| {
        ChoiceTable::from_fn(u.clone(), |p| {
            let members: Vec<usize> = p.set.iter().collect();
            let mut s = seeds[(p.set.bits() as usize - 1) * n + p.capacity - 1];
            let mut chosen = ChoiceSet::EMPTY;
            let mut pool = members;
            for _ in 0..p.capacity.min(pool.len()) {
                let k = (s % pool.len() as u64) as usize;
                s /= pool.len() as u64;
                chosen.insert(pool.swap_remove(k));
            }
            chosen
        })
        .unwrap()
    })
}

/// Lists where each capacity adds one ordering to the previous list.
fn insertion_lists(max_n: usize) -> impl Strategy<Value = (usize, CapacityWiseLists)> {
    (1..=max_n)
        .prop_flat_map(|n| (Just(n), prop::collection::vec((ordering(n), any::<prop::sample::Index>()), n)))
        .prop_map(|(n, steps)| {
            let mut lists: Vec<Vec<PriorityOrdering>> = Vec::new();
            let mut current = Vec::new();
            for (o, at) in steps {
                current.insert(at.index(current.len() + 1), o);
                lists.push(current.clone());
            }
            (n, CapacityWiseLists::new(lists).unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lexicographic_tables_satisfy_the_characterizing_axioms((n, p) in sized_profile(5)) {
        let c = lex_table(n, &p);
        for a in Axiom::LEXICOGRAPHIC.into_iter().chain([Axiom::Cwarp, Axiom::PathIndependence]) {
            prop_assert!(check_axiom(&c, a).unwrap().passed(), "{:?}", a);
        }
    }

    #[test]
    fn extraction_round_trips((n, p) in sized_profile(5)) {
        let c = lex_table(n, &p);
        let q = extract_lex_profile(&c).unwrap();
        prop_assert!(lex_table(n, &q).same_choices(&c));
        prop_assert!(profiles_equivalent(&c, &p, &q).unwrap());
    }

    #[test]
    fn equivalence_matches_behavior(p in profile(3), q in profile(3)) {
        let c = lex_table(3, &p);
        prop_assert_eq!(profiles_equivalent(&c, &p, &q).unwrap(), c.same_choices(&lex_table(3, &q)));
    }

    #[test]
    fn responsive_extraction_matches_cwrarp((n, p) in sized_profile(4)) {
        let c = lex_table(n, &p);
        let cwrarp = check_axiom(&c, Axiom::Cwrarp).unwrap().passed();
        match extract_responsive(&c) {
            Ok(o) => {
                prop_assert!(cwrarp);
                let r = materialize(&ChoiceRule::Responsive(o), c.universe()).unwrap();
                prop_assert!(r.same_choices(&c));
            }
            Err(_) => prop_assert!(!cwrarp),
        }
    }

    #[test]
    fn responsive_tables_pass_cwrarp(n in 1usize..=5, seed in any::<prop::sample::Index>()) {
        let u = Universe::alphabetic(n).unwrap();
        let mut rank: Vec<usize> = (0..n).collect();
        rank.rotate_left(seed.index(n));
        let c = materialize(&ChoiceRule::Responsive(PriorityOrdering::new(rank).unwrap()), &u).unwrap();
        prop_assert!(check_axiom(&c, Axiom::Cwrarp).unwrap().passed());
        prop_assert!(extract_responsive(&c).is_ok());
    }

    #[test]
    fn cwarp_forms_agree(c in (1usize..=4).prop_flat_map(filling_table)) {
        prop_assert_eq!(check_cwarp(&c).passed(), check_cwarp_alt(&c).passed());
    }

    #[test]
    fn failing_checks_carry_replayable_witnesses(c in (1usize..=4).prop_flat_map(filling_table)) {
        for a in Axiom::TABLE_AXIOMS.into_iter().chain([Axiom::CwarpAlt]) {
            let r = check_axiom(&c, a).unwrap();
            match &r.witness {
                Some(w) => {
                    prop_assert!(!r.passed());
                    prop_assert_eq!(w.axiom, a);
                    prop_assert!(w.replay(&c, None), "{:?}", a);
                }
                None => prop_assert!(r.passed()),
            }
        }
    }

    #[test]
    fn insertion_built_lists_pass_insertion((n, lists) in insertion_lists(5)) {
        prop_assert!(check_insertion(&lists).passed());
        for q in 1..n {
            prop_assert!(is_insertion(lists.list(q), lists.list(q + 1)));
        }
        let u = Universe::alphabetic(n).unwrap();
        let c = materialize(&ChoiceRule::CapacityWise(lists), &u).unwrap();
        prop_assert!(check_axiom(&c, Axiom::CapacityFilling).unwrap().passed());
    }

    #[test]
    fn profiles_read_as_lists_satisfy_insertion((_n, p) in sized_profile(6)) {
        prop_assert!(check_insertion(&CapacityWiseLists::from_profile(&p)).passed());
    }

    #[test]
    fn boston_builders_meet_the_requirement(n in 1usize..=6, w in ordering(6), o in ordering(6)) {
        // restrict both orderings to the first n alternatives
        let restrict = |x: &PriorityOrdering| PriorityOrdering::new(x.ranking().filter(|&a| a < n).collect()).unwrap();
        let (w, o) = (restrict(&w), restrict(&o));
        let u = Universe::alphabetic(n).unwrap();
        for rule in BostonRule::ALL {
            let lists = rule.build(&w, &o, n);
            prop_assert!(satisfies_boston_requirement(&lists, &w, &o), "{}", rule.name());
            let c = materialize(&ChoiceRule::CapacityWise(lists.clone()), &u).unwrap();
            prop_assert!(check_axiom(&c, Axiom::CapacityFilling).unwrap().passed(), "{}", rule.name());
            if rule == BostonRule::Rotating {
                prop_assert!(satisfies_paired_zones(&lists, &w, &o));
                prop_assert!(check_insertion(&lists).passed());
            }
        }
    }
}
