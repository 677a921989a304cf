//! Capacity-wise lexicographic rules built from a walk-zone ordering `w`
//! and an open ordering `o`.

use super::{CapacityWiseLists, PriorityOrdering};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Zone {
    Walk,
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BostonRule {
    WalkOpen,
    OpenWalk,
    Rotating,
    Compromise,
}

impl BostonRule {
    pub const ALL: [BostonRule; 4] = [
        BostonRule::WalkOpen,
        BostonRule::OpenWalk,
        BostonRule::Rotating,
        BostonRule::Compromise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BostonRule::WalkOpen => "walk_open",
            BostonRule::OpenWalk => "open_walk",
            BostonRule::Rotating => "rotating",
            BostonRule::Compromise => "compromise",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == name)
    }

    /// Zone sequence for capacity `q`.
    pub fn zones(self, q: usize) -> Vec<Zone> {
        use Zone::{Open, Walk};
        let run = |zone, len| std::iter::repeat_n(zone, len);
        match self {
            BostonRule::WalkOpen => run(Walk, q.div_ceil(2)).chain(run(Open, q / 2)).collect(),
            BostonRule::OpenWalk => run(Open, q.div_ceil(2)).chain(run(Walk, q / 2)).collect(),
            BostonRule::Rotating => (0..q).map(|i| if i % 2 == 0 { Walk } else { Open }).collect(),
            BostonRule::Compromise => {
                // q = 4m + k: the remainder widens the leading walk block first,
                // then the open block, then the trailing walk block
                let m = q / 4;
                let k = q % 4;
                let lead = m + usize::from(k >= 1);
                let middle = 2 * m + usize::from(k >= 2);
                let tail = m + usize::from(k >= 3);
                run(Walk, lead)
                    .chain(run(Open, middle))
                    .chain(run(Walk, tail))
                    .collect()
            }
        }
    }

    pub fn build(self, w: &PriorityOrdering, o: &PriorityOrdering, n: usize) -> CapacityWiseLists {
        let per_capacity = (1..=n)
            .map(|q| {
                self.zones(q)
                    .into_iter()
                    .map(|z| match z {
                        Zone::Walk => w.clone(),
                        Zone::Open => o.clone(),
                    })
                    .collect()
            })
            .collect();
        CapacityWiseLists::new(per_capacity).expect("zone lists have length q over one universe")
    }
}

pub fn build_walk_open(w: &PriorityOrdering, o: &PriorityOrdering, n: usize) -> CapacityWiseLists {
    BostonRule::WalkOpen.build(w, o, n)
}

pub fn build_open_walk(w: &PriorityOrdering, o: &PriorityOrdering, n: usize) -> CapacityWiseLists {
    BostonRule::OpenWalk.build(w, o, n)
}

pub fn build_rotating(w: &PriorityOrdering, o: &PriorityOrdering, n: usize) -> CapacityWiseLists {
    BostonRule::Rotating.build(w, o, n)
}

pub fn build_compromise(w: &PriorityOrdering, o: &PriorityOrdering, n: usize) -> CapacityWiseLists {
    BostonRule::Compromise.build(w, o, n)
}

/// Every list entry is `w` or `o`, and at each capacity the counts differ by at most one.
pub fn satisfies_boston_requirement(
    lists: &CapacityWiseLists,
    w: &PriorityOrdering,
    o: &PriorityOrdering,
) -> bool {
    lists.lists().iter().all(|list| {
        let walk = list.iter().filter(|x| *x == w).count();
        let open = list.iter().filter(|x| *x == o).count();
        // w == o counts every entry twice; the difference is then zero
        let only_wo = list.iter().all(|x| x == w || x == o);
        only_wo && (walk as isize - open as isize).abs() <= 1
    })
}

/// Positions `(1,2), (3,4), ...` of every capacity list hold one `w` and one
/// `o` (when the orderings differ), i.e. `≻_l = w` iff `≻_{l+1} = o` for odd `l`.
pub fn satisfies_paired_zones(
    lists: &CapacityWiseLists,
    w: &PriorityOrdering,
    o: &PriorityOrdering,
) -> bool {
    lists.lists().iter().all(|list| {
        list.iter().all(|x| x == w || x == o)
            && list
                .chunks_exact(2)
                .all(|pair| (&pair[0] == w) == (&pair[1] == o))
    })
}
