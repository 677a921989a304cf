//! Small hand-built choice rules with known axiom profiles, used by tests,
//! the CLI `repro` command and documentation.

use crate::rules::{
    build_compromise, build_walk_open, materialize, responsive_choose, CapacityWiseLists, ChoiceRule,
    ChoiceTable, PriorityOrdering,
};
use crate::universe::{ChoiceSet, Problem, Universe};

fn ord(u: &Universe, ranking: &str) -> PriorityOrdering {
    let labels: Vec<&str> = ranking.split_whitespace().collect();
    PriorityOrdering::from_labels(u, &labels).expect("fixture ordering is a permutation")
}

fn table<F>(u: Universe, f: F) -> ChoiceTable
where
    F: Fn(Problem) -> ChoiceSet + Sync,
{
    ChoiceTable::from_fn(u, f).expect("fixture entries are valid")
}

/// `a ≻ b ≻ c`, always choosing only the top available alternative.
/// Violates capacity filling and nothing else.
pub fn always_top_singleton() -> ChoiceTable {
    let u = Universe::alphabetic(3).unwrap();
    let top = ord(&u, "a b c");
    table(u, move |p| top.top(p.set, 1))
}

/// At capacity 1 with `c` available, the top by `a ≻ b ≻ c`; otherwise
/// responsive to `b ≻ a ≻ c`. Violates gross substitutes only.
pub fn gross_substitutes_violator() -> ChoiceTable {
    let u = Universe::alphabetic(3).unwrap();
    let first = ord(&u, "a b c");
    let second = ord(&u, "b a c");
    table(u, move |p| {
        if p.capacity == 1 && p.set.contains(2) {
            first.top(p.set, 1)
        } else {
            responsive_choose(&second, p)
        }
    })
}

/// Top by `a ≻ b ≻ c` at capacity 1, `{b, c}` from the full set at
/// capacity 2, everything otherwise. Violates monotonicity only.
pub fn monotonicity_violator() -> ChoiceTable {
    let u = Universe::alphabetic(3).unwrap();
    let top = ord(&u, "a b c");
    let full = u.full_set();
    let bc = u.set_of(&["b", "c"]).unwrap();
    table(u, move |p| match p.capacity {
        1 => top.top(p.set, 1),
        2 if p.set == full => bc,
        _ => p.set,
    })
}

/// Universe `a..e` with walk ordering `a b c d e` and open ordering `e b d c a`.
pub fn walk_open_orderings() -> (Universe, PriorityOrdering, PriorityOrdering) {
    let u = Universe::alphabetic(5).unwrap();
    let w = ord(&u, "a b c d e");
    let o = ord(&u, "e b d c a");
    (u, w, o)
}

pub fn walk_open_example_lists() -> CapacityWiseLists {
    let (u, w, o) = walk_open_orderings();
    build_walk_open(&w, &o, u.n())
}

/// The walk-open rule over [`walk_open_orderings`]. Capacity filling, gross
/// substitutes and monotone, but violates IAA.
pub fn walk_open_example() -> ChoiceTable {
    let (u, _, _) = walk_open_orderings();
    materialize(&ChoiceRule::CapacityWise(walk_open_example_lists()), &u).unwrap()
}

/// Responsive to `a b c d e` when `d` is available, otherwise to
/// `a c b d e`. Reveals `b` over `c` and `c` over `b` at capacity 2.
pub fn cwarp_violator() -> ChoiceTable {
    let u = Universe::alphabetic(5).unwrap();
    let with_d = ord(&u, "a b c d e");
    let without_d = ord(&u, "a c b d e");
    table(u, move |p| {
        if p.set.contains(3) {
            responsive_choose(&with_d, p)
        } else {
            responsive_choose(&without_d, p)
        }
    })
}

/// `{a}` whenever `a` is available, otherwise responsive to `a b c`.
pub fn a_alone_when_present() -> ChoiceTable {
    let u = Universe::alphabetic(3).unwrap();
    let rest = ord(&u, "a b c");
    table(u, move |p| {
        if p.set.contains(0) {
            ChoiceSet::singleton(0)
        } else {
            responsive_choose(&rest, p)
        }
    })
}

/// Top by `a b c d` at capacity 1, responsive to `b c d a` above.
pub fn split_first_pick() -> ChoiceTable {
    let u = Universe::alphabetic(4).unwrap();
    let single = ord(&u, "a b c d");
    let many = ord(&u, "b c d a");
    table(u, move |p| {
        if p.capacity == 1 {
            single.top(p.set, 1)
        } else {
            responsive_choose(&many, p)
        }
    })
}

/// Responsive to `a b c d` when `a` is available, otherwise to `a b d c`.
pub fn a_dependent_ordering() -> ChoiceTable {
    let u = Universe::alphabetic(4).unwrap();
    let with_a = ord(&u, "a b c d");
    let without_a = ord(&u, "a b d c");
    table(u, move |p| {
        if p.set.contains(0) {
            responsive_choose(&with_a, p)
        } else {
            responsive_choose(&without_a, p)
        }
    })
}

/// Universe `a b c d x y` with walk ordering `a b c d x y` and open
/// ordering `b c y x d a`.
pub fn compromise_orderings() -> (Universe, PriorityOrdering, PriorityOrdering) {
    let u = Universe::new(["a", "b", "c", "d", "x", "y"]).unwrap();
    let w = ord(&u, "a b c d x y");
    let o = ord(&u, "b c y x d a");
    (u, w, o)
}

/// The compromise rule over [`compromise_orderings`]; violates IAA.
pub fn compromise_example() -> ChoiceTable {
    let (u, w, o) = compromise_orderings();
    let lists = build_compromise(&w, &o, u.n());
    materialize(&ChoiceRule::CapacityWise(lists), &u).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_materialize() {
        for t in [
            always_top_singleton(),
            gross_substitutes_violator(),
            monotonicity_violator(),
            walk_open_example(),
            cwarp_violator(),
            a_alone_when_present(),
            split_first_pick(),
            a_dependent_ordering(),
            compromise_example(),
        ] {
            assert_eq!(t.entries().len(), t.universe().problem_count());
        }
    }

    #[test]
    fn walk_open_entries() {
        let t = walk_open_example();
        let u = t.universe().clone();
        let s = u.set_of(&["a", "c", "d", "e"]).unwrap();
        assert_eq!(t.get(s, 2), u.set_of(&["a", "e"]).unwrap());
        assert_eq!(t.get(s, 3), u.set_of(&["a", "c", "e"]).unwrap());
        let s2 = u.set_of(&["a", "b", "c", "d"]).unwrap();
        assert_eq!(t.get(s2, 2), u.set_of(&["a", "b"]).unwrap());
        assert_eq!(t.get(s2, 3), u.set_of(&["a", "b", "d"]).unwrap());
    }
}
