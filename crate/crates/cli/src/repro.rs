//! Embedded reproduction suite: every worked example replayed against the
//! library, with the stated sets asserted exactly.

use lexichoice::axioms::{check_axiom, iaa_violation_between, is_lexicographic, revealed_pref, Axiom};
use lexichoice::fixtures;
use lexichoice::identify::extract_lex_profile;
use lexichoice::mechanism::{
    da_allocate, demand, find_impossibility_witness, AllocationProblem, CapacityProfile, ChoiceStructure, Item,
    MechanismWitness, PreferenceRelation, Property,
};
use lexichoice::rules::{build_open_walk, build_rotating, BostonRule};
use lexichoice::{materialize, ChoiceRule, ChoiceSet, ChoiceTable, PriorityOrdering, Universe};
use serde_json::{json, Value};

use crate::input::InputError;
use crate::report::{digest, header, Report};

pub const CASES: [&str; 13] = [
    "example_1",
    "appendix_a1",
    "appendix_a2",
    "appendix_a3",
    "appendix_b1",
    "appendix_b2",
    "appendix_b3",
    "appendix_b4",
    "appendix_c",
    "walk_open_iaa",
    "open_walk_iaa",
    "compromise_iaa",
    "impossibility",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseResult {
    pub id: &'static str,
    pub checks: Vec<(String, bool)>,
}

impl CaseResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }
}

#[derive(Default)]
struct Checks(Vec<(String, bool)>);

impl Checks {
    fn expect(&mut self, what: impl Into<String>, ok: bool) {
        self.0.push((what.into(), ok));
    }

    /// `pass` axioms hold; `fail` axioms fail with a witness that replays.
    fn axioms(&mut self, c: &ChoiceTable, pass: &[Axiom], fail: &[Axiom]) {
        for &a in pass {
            let r = check_axiom(c, a).expect("table axiom");
            self.expect(format!("{a} passes"), r.passed());
        }
        for &a in fail {
            let r = check_axiom(c, a).expect("table axiom");
            let replays = r.witness.as_ref().is_some_and(|w| w.replay(c, None));
            self.expect(format!("{a} fails with a replaying witness"), !r.passed() && replays);
        }
    }

    fn entry(&mut self, c: &ChoiceTable, s: &str, q: usize, chosen: &str) {
        let u = c.universe();
        let got = c.get(set(u, s), q);
        self.expect(
            format!("C({},{q}) = {}", u.format_set(set(u, s)), u.format_set(set(u, chosen))),
            got == set(u, chosen),
        );
    }

    fn rejected(&mut self, c: &ChoiceTable, s: &str, q: usize, expected: &str) {
        let u = c.universe();
        let s = set(u, s);
        let got = s.difference(c.get(s, q));
        self.expect(
            format!("R({},{q}) = {}", u.format_set(s), u.format_set(set(u, expected))),
            got == set(u, expected),
        );
    }

    /// `C(S,q+1) ∩ R(S,q)` for both sets, and the pair violates IAA at `q`.
    fn iaa_pair(&mut self, c: &ChoiceTable, s: &str, other: &str, q: usize, newly: (&str, &str)) {
        let u = c.universe();
        let (s, other) = (set(u, s), set(u, other));
        let accepted = |x: ChoiceSet| c.get(x, q + 1).intersection(x.difference(c.get(x, q)));
        for (x, expected) in [(s, newly.0), (other, newly.1)] {
            self.expect(
                format!("C({0},{1}) ∩ R({0},{q}) = {2}", u.format_set(x), q + 1, u.format_set(set(u, expected))),
                accepted(x) == set(u, expected),
            );
        }
        self.expect(
            format!("IAA violated by {} and {} at {q}", u.format_set(s), u.format_set(other)),
            iaa_violation_between(c, s, other, q).is_some(),
        );
    }
}

fn set(u: &Universe, labels: &str) -> ChoiceSet {
    let labels: Vec<&str> = labels.split_whitespace().collect();
    u.set_of(&labels).expect("fixture labels")
}

fn ord(u: &Universe, ranking: &str) -> PriorityOrdering {
    let labels: Vec<&str> = ranking.split_whitespace().collect();
    PriorityOrdering::from_labels(u, &labels).expect("fixture ordering")
}

const LEX: [Axiom; 4] = Axiom::LEXICOGRAPHIC;
use Axiom::{CapacityFilling as CF, Cwarp, GrossSubstitutes as GS, Iaa, Monotonicity as MON};

fn example_1(ch: &mut Checks) {
    let c = fixtures::cwarp_violator();
    let u = c.universe().clone();
    ch.axioms(&c, &[CF, MON, Iaa], &[Cwarp]);
    ch.entry(&c, "a b c d", 1, "a");
    ch.entry(&c, "a b c e", 1, "a");
    ch.entry(&c, "a b c d", 2, "a b");
    ch.entry(&c, "a b c e", 2, "a c");
    let rp = revealed_pref(&c, 2).expect("capacity 2 is in range");
    let (b, cc) = (1, 2);
    ch.expect("b revealed over c and c over b at 2", rp.contains(b, cc) && rp.contains(cc, b));
    let w = check_axiom(&c, Cwarp).and_then(|r| r.witness);
    let on_pair = w.is_some_and(|w| {
        let mut alts = w.alternatives.clone();
        alts.sort();
        alts == [b, cc] && w.observations[1].capacity == 2
    });
    ch.expect(format!("CWARP witness is the {{b,c}} pair at 2 over {}", u.format_set(u.full_set())), on_pair);
}

fn appendix_a1(ch: &mut Checks) {
    let c = fixtures::a_alone_when_present();
    ch.axioms(&c, &[MON, Cwarp], &[CF, Iaa]);
    ch.rejected(&c, "a c", 1, "c");
    ch.rejected(&c, "b c", 1, "c");
    ch.iaa_pair(&c, "a c", "b c", 1, ("", "c"));
}

fn appendix_a2(ch: &mut Checks) {
    let c = fixtures::split_first_pick();
    ch.axioms(&c, &[CF, Cwarp], &[MON, Iaa]);
    ch.entry(&c, "a b c", 1, "a");
    ch.entry(&c, "a b c", 2, "b c");
    ch.rejected(&c, "a c d", 1, "c d");
    ch.rejected(&c, "b c d", 1, "c d");
    ch.iaa_pair(&c, "a c d", "b c d", 1, ("c d", "c"));
}

fn appendix_a3(ch: &mut Checks) {
    let c = fixtures::a_dependent_ordering();
    ch.axioms(&c, &[CF, MON], &[Cwarp, Iaa]);
    ch.rejected(&c, "a c d", 1, "c d");
    ch.rejected(&c, "b c d", 1, "c d");
    ch.iaa_pair(&c, "a c d", "b c d", 1, ("c", "d"));
}

fn appendix_b1(ch: &mut Checks) {
    let c = fixtures::always_top_singleton();
    ch.axioms(&c, &[GS, MON, Iaa, Cwarp], &[CF]);
}

fn appendix_b2(ch: &mut Checks) {
    let c = fixtures::gross_substitutes_violator();
    let u = c.universe().clone();
    ch.axioms(&c, &[CF, MON, Iaa, Cwarp], &[GS]);
    ch.entry(&c, "a b c", 1, "a");
    ch.entry(&c, "a b", 1, "b");
    let rp = revealed_pref(&c, 2).expect("capacity 2 is in range");
    let (b, cc) = (u.index_of("b").unwrap(), u.index_of("c").unwrap());
    ch.expect("revealed preference at 2 is exactly b over c", rp.edges.len() == 1 && rp.contains(b, cc));
}

fn appendix_b3(ch: &mut Checks) {
    let c = fixtures::monotonicity_violator();
    ch.axioms(&c, &[CF, GS, Iaa], &[MON]);
    ch.entry(&c, "a b c", 1, "a");
    ch.entry(&c, "a b c", 2, "b c");
}

fn appendix_b4(ch: &mut Checks) {
    let (u, w, o) = fixtures::walk_open_orderings();
    let (cu, cw, co) = fixtures::compromise_orderings();
    let rules = [
        (BostonRule::WalkOpen, &u, &w, &o),
        (BostonRule::OpenWalk, &u, &w, &o),
        (BostonRule::Compromise, &cu, &cw, &co),
    ];
    for (rule, u, w, o) in rules {
        let c = materialize(&ChoiceRule::CapacityWise(rule.build(w, o, u.n())), u).unwrap();
        for (a, ok) in [CF, GS, MON].map(|a| (a, check_axiom(&c, a).unwrap().passed())) {
            ch.expect(format!("{}: {a} passes", rule.name()), ok);
        }
        let r = check_axiom(&c, Cwarp).unwrap();
        let replays = r.witness.as_ref().is_some_and(|wt| wt.replay(&c, None));
        ch.expect(format!("{}: cwarp fails with a replaying witness", rule.name()), !r.passed() && replays);
    }
    let rotating = materialize(&ChoiceRule::CapacityWise(build_rotating(&w, &o, u.n())), &u).unwrap();
    ch.axioms(&rotating, &[CF, GS, MON, Cwarp], &[]);
}

/// Agents `a..e`, one object `x`, walk-open choice at `x`.
fn appendix_c(ch: &mut Checks) {
    let (u, w, o) = fixtures::walk_open_orderings();
    let rule = ChoiceRule::CapacityWise(lexichoice::rules::build_walk_open(&w, &o, u.n()));
    let cs = ChoiceStructure::uniform(&u, &rule, 1).unwrap();
    let wants = PreferenceRelation::canonical(1);
    let refuses = PreferenceRelation::null_first(1);
    let profile = |out: usize| -> Vec<PreferenceRelation> {
        (0..5).map(|i| if i == out { refuses.clone() } else { wants.clone() }).collect()
    };
    let (b, e) = (u.index_of("b").unwrap(), u.index_of("e").unwrap());
    let (r, r2) = (profile(b), profile(e));
    let problems = [
        AllocationProblem::new(r.clone(), CapacityProfile(vec![2])).unwrap(),
        AllocationProblem::new(r2.clone(), CapacityProfile(vec![2])).unwrap(),
        AllocationProblem::new(r, CapacityProfile(vec![3])).unwrap(),
        AllocationProblem::new(r2, CapacityProfile(vec![3])).unwrap(),
    ];
    let allocations: Vec<_> = problems.iter().map(|p| da_allocate(&cs, p).unwrap()).collect();
    let d = |k: usize| demand(&allocations[k], &problems[k].preferences, 0);
    let x = Item::Object(0);
    ch.expect("q_x=2, R: x held by {a,e}", allocations[0].holders(x) == set(&u, "a e"));
    ch.expect("q_x=2, R': x held by {a,b}", allocations[1].holders(x) == set(&u, "a b"));
    ch.expect("q_x=2: D_x = {c,d} under R", d(0) == set(&u, "c d"));
    ch.expect("q_x=2: D_x = {c,d} under R'", d(1) == set(&u, "c d"));
    ch.expect("q_x=3: D_x = {d} under R", d(2) == set(&u, "d"));
    ch.expect("q_x=3: D_x = {c} under R'", d(3) == set(&u, "c"));
    let witness = MechanismWitness {
        property: Property::WeakIsd,
        problems: problems.to_vec(),
        allocations,
        agent: None,
        object: Some(0),
    };
    ch.expect("weak ISD witness replays", witness.replay(&cs).unwrap_or(false));
}

fn walk_open_sets(ch: &mut Checks, c: &ChoiceTable) {
    ch.axioms(c, &[CF, GS, MON], &[Iaa]);
    ch.rejected(c, "a c d e", 2, "c d");
    ch.rejected(c, "a b c d", 2, "c d");
    ch.rejected(c, "a c d e", 3, "d");
    ch.rejected(c, "a b c d", 3, "c");
    ch.iaa_pair(c, "a c d e", "a b c d", 2, ("c", "d"));
}

fn walk_open_iaa(ch: &mut Checks) {
    let (u, w, o) = fixtures::walk_open_orderings();
    walk_open_sets(ch, &fixtures::walk_open_example());
    let rotating = materialize(&ChoiceRule::CapacityWise(build_rotating(&w, &o, u.n())), &u).unwrap();
    ch.axioms(&rotating, &LEX, &[]);
    ch.expect("rotating is lexicographic and extracts", is_lexicographic(&rotating) && extract_lex_profile(&rotating).is_ok());
}

fn open_walk_iaa(ch: &mut Checks) {
    let (u, w, o) = fixtures::walk_open_orderings();
    let c = materialize(&ChoiceRule::CapacityWise(build_open_walk(&o, &w, u.n())), &u).unwrap();
    walk_open_sets(ch, &c);
}

/// The open ordering leaves `a` unranked; every placement of `a` must give the same sets.
fn compromise_iaa(ch: &mut Checks) {
    let (u, w, _) = fixtures::compromise_orderings();
    let rest = ["b", "c", "y", "x", "d"];
    for pos in 0..=rest.len() {
        let mut ranking = rest.to_vec();
        ranking.insert(pos, "a");
        let o = ord(&u, &ranking.join(" "));
        let c = materialize(&ChoiceRule::CapacityWise(BostonRule::Compromise.build(&w, &o, u.n())), &u).unwrap();
        let mut local = Checks::default();
        local.axioms(&c, &[CF, GS, MON], &[Iaa]);
        local.rejected(&c, "a b c x y", 3, "x y");
        local.rejected(&c, "a b d x y", 3, "x y");
        local.rejected(&c, "a b c x y", 4, "y");
        local.rejected(&c, "a b d x y", 4, "x");
        local.iaa_pair(&c, "a b c x y", "a b d x y", 3, ("x", "y"));
        ch.0.extend(local.0.into_iter().map(|(what, ok)| (format!("a at open position {}: {what}", pos + 1), ok)));
    }
}

fn impossibility(ch: &mut Checks) {
    let (u, w, o) = fixtures::walk_open_orderings();
    let (cu, cw, co) = fixtures::compromise_orderings();
    let structures = [
        (BostonRule::Rotating, &u, &w, &o),
        (BostonRule::WalkOpen, &u, &w, &o),
        (BostonRule::OpenWalk, &u, &w, &o),
        (BostonRule::Compromise, &cu, &cw, &co),
    ];
    for (rule, u, w, o) in structures {
        let cs = ChoiceStructure::uniform(u, &ChoiceRule::CapacityWise(rule.build(w, o, u.n())), 3).unwrap();
        let ok = find_impossibility_witness(&cs).is_ok_and(|iw| {
            let wt = &iw.witness;
            let d = |k: usize| demand(&wt.allocations[k], &wt.problems[k].preferences, iw.a);
            let ij = ChoiceSet::from_indices([iw.i, iw.j]);
            wt.replay(&cs).unwrap_or(false)
                && d(0) == ij
                && d(1) == ij
                && d(2) == ChoiceSet::EMPTY
                && d(3) == ChoiceSet::singleton(iw.j)
        });
        ch.expect(
            format!("{} structure with 3 objects: ISD witness with demands {{i,j}}, {{i,j}}, {{}}, {{j}}", rule.name()),
            ok,
        );
    }
}

pub fn run_case(id: &str) -> Result<CaseResult, InputError> {
    let id = CASES
        .into_iter()
        .find(|c| *c == id)
        .ok_or_else(|| InputError(format!("unknown case `{id}` (expected one of {} or all)", CASES.join(", "))))?;
    let mut ch = Checks::default();
    match id {
        "example_1" => example_1(&mut ch),
        "appendix_a1" => appendix_a1(&mut ch),
        "appendix_a2" => appendix_a2(&mut ch),
        "appendix_a3" => appendix_a3(&mut ch),
        "appendix_b1" => appendix_b1(&mut ch),
        "appendix_b2" => appendix_b2(&mut ch),
        "appendix_b3" => appendix_b3(&mut ch),
        "appendix_b4" => appendix_b4(&mut ch),
        "appendix_c" => appendix_c(&mut ch),
        "walk_open_iaa" => walk_open_iaa(&mut ch),
        "open_walk_iaa" => open_walk_iaa(&mut ch),
        "compromise_iaa" => compromise_iaa(&mut ch),
        "impossibility" => impossibility(&mut ch),
        _ => unreachable!(),
    }
    Ok(CaseResult { id, checks: ch.0 })
}

pub fn repro(which: &str) -> Result<Report, InputError> {
    let ids: Vec<&str> = if which == "all" { CASES.to_vec() } else { vec![which] };
    let results = ids.iter().map(|id| run_case(id)).collect::<Result<Vec<_>, _>>()?;
    let passed = results.iter().filter(|r| r.passed()).count();
    let pass = passed == results.len();
    let mut doc = header("repro", &digest([which.as_bytes()]));
    let cases: Vec<Value> = results
        .iter()
        .map(|r| {
            json!({
                "id": r.id,
                "verdict": if r.passed() { "pass" } else { "fail" },
                "checks": r.checks.iter().map(|(what, ok)| json!({ "check": what, "ok": ok })).collect::<Vec<_>>(),
            })
        })
        .collect();
    doc.insert("cases".into(), json!(cases));
    doc.insert("passed".into(), json!(passed));
    doc.insert("total".into(), json!(results.len()));
    doc.insert("verdict".into(), json!(if pass { "pass" } else { "fail" }));
    let mut text = Vec::new();
    for r in &results {
        text.push(format!("{:<16} {} ({} checks)", r.id, if r.passed() { "pass" } else { "FAIL" }, r.checks.len()));
        text.extend(r.checks.iter().filter(|(_, ok)| !ok).map(|(what, _)| format!("    failed: {what}")));
    }
    text.push(format!("{passed}/{} cases pass", results.len()));
    Ok(Report {
        json: Value::Object(doc),
        text,
        code: if pass { 0 } else { 1 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_case_passes() {
        for id in CASES {
            let r = run_case(id).unwrap();
            let failed: Vec<_> = r.checks.iter().filter(|(_, ok)| !ok).collect();
            assert!(failed.is_empty(), "{id}: {failed:?}");
        }
    }

    #[test]
    fn unknown_case_is_an_input_error() {
        assert!(run_case("appendix_z").is_err());
    }
}
