//! The `check`, `extract`, `da` and `boston-report` commands.

use lexichoice::axioms::{self, check_axiom, check_insertion, is_insertion, is_lexicographic, Axiom, AxiomReport};
use lexichoice::feasibility::{
    check_csarp, check_f_capacity_filling, extract_flex_profile, FChoiceTable, FeasibilityFamily,
};
use lexichoice::identify::{extract_lex_profile, extract_responsive, profiles_equivalent, residual_sets};
use lexichoice::mechanism::{
    check_property, da_allocate, da_allocate_traced, MechanismSpace, PreferenceRelation, Property,
};
use lexichoice::rules::{satisfies_boston_requirement, BostonRule};
use lexichoice::{materialize, ChoiceRule, ChoiceTable, PriorityOrdering, PriorityProfile, Universe};
use serde_json::{json, Value};

use crate::input::{self, parse_document, InputError, Loaded, LoadedRule, LoadedStructure, ProblemSpec, RuleSpec, StructureSpec};
use crate::report::{self, digest, header, Report};

/// A named input file and its bytes.
#[derive(Clone, Copy, Debug)]
pub struct Input<'a> {
    pub name: &'a str,
    pub bytes: &'a [u8],
}

impl<'a> Input<'a> {
    pub fn new(name: &'a str, bytes: &'a [u8]) -> Self {
        Self { name, bytes }
    }

    fn text(&self) -> Result<&'a str, InputError> {
        std::str::from_utf8(self.bytes).map_err(|e| InputError(format!("{}: not UTF-8: {e}", self.name)))
    }
}

/// Profiles times capacity profiles up to which mechanism checks run exhaustively.
const EXHAUSTIVE_BUDGET: usize = 50_000;
const SAMPLED_PROFILES: usize = 256;
const SAMPLED_CAPACITIES: usize = 16;

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn exit_code(pass: bool) -> u8 {
    if pass {
        0
    } else {
        1
    }
}

fn ordering_json(u: &Universe, o: &PriorityOrdering) -> Value {
    json!(o.ranking().map(|i| u.label(i)).collect::<Vec<_>>())
}

fn profile_json(u: &Universe, p: &PriorityProfile) -> Value {
    json!(p.orderings().iter().map(|o| ordering_json(u, o)).collect::<Vec<_>>())
}

/// Axioms run for `all` or when none are requested: the lexicographic
/// characterization, CWARP, and insertion for list-based rules.
fn default_axioms(rule: &LoadedRule) -> Vec<Axiom> {
    match &rule.loaded {
        Loaded::Flex(_) => vec![Axiom::FCapacityFilling, Axiom::Monotonicity, Axiom::Csarp],
        Loaded::Rule { lists, .. } => {
            let mut out = Axiom::LEXICOGRAPHIC.to_vec();
            out.push(Axiom::Cwarp);
            if lists.is_some() {
                out.push(Axiom::Insertion);
            }
            out
        }
    }
}

fn parse_axioms(names: &[String]) -> Result<Vec<Axiom>, InputError> {
    names
        .iter()
        .map(|n| Axiom::from_name(n).ok_or_else(|| InputError(format!("--axioms: unknown axiom `{n}`"))))
        .collect()
}

fn parse_properties(names: &[String]) -> Result<Vec<Property>, InputError> {
    names
        .iter()
        .map(|n| Property::from_name(n).ok_or_else(|| InputError(format!("--axioms: unknown property `{n}`"))))
        .collect()
}

/// `None` or `["all"]` selects the default set.
fn requested(names: Option<&[String]>) -> Option<&[String]> {
    names.filter(|n| !(n.len() == 1 && n[0] == "all"))
}

fn f_table(rule: &LoadedRule, table: &ChoiceTable) -> Result<FChoiceTable, InputError> {
    match &rule.loaded {
        Loaded::Flex(f) => Ok(f.clone()),
        Loaded::Rule { .. } => Ok(FChoiceTable::new(table.clone(), FeasibilityFamily::all_subsets(table.n()))?),
    }
}

fn run_axiom(rule: &LoadedRule, table: &ChoiceTable, axiom: Axiom) -> Result<AxiomReport, InputError> {
    if let Some(r) = check_axiom(table, axiom) {
        return Ok(r);
    }
    Ok(match axiom {
        Axiom::Insertion => check_insertion(
            rule.lists()
                .ok_or_else(|| InputError(format!("insertion needs capacity-indexed lists; `{}` has none", rule.kind)))?,
        ),
        Axiom::FCapacityFilling => check_f_capacity_filling(&f_table(rule, table)?),
        Axiom::Csarp => check_csarp(&f_table(rule, table)?),
        _ => unreachable!("table axioms are handled by check_axiom"),
    })
}

fn is_structure(doc: &Value) -> bool {
    doc.get("objects").is_some()
}

/// Check a rule against axioms, or a choice structure's DA mechanism against
/// mechanism properties.
pub fn check(input: Input, axioms: Option<&[String]>, seed: u64) -> Result<Report, InputError> {
    let doc: Value = parse_document(input.name, input.text()?)?;
    if is_structure(&doc) {
        return check_structure(input, axioms, seed);
    }
    let spec = RuleSpec::parse(input.name, input.text()?)?;
    let rule = spec.load()?;
    let table = rule.table()?;
    let selected = match requested(axioms) {
        Some(names) => parse_axioms(names)?,
        None => default_axioms(&rule),
    };
    let results = selected
        .iter()
        .map(|&a| run_axiom(&rule, &table, a))
        .collect::<Result<Vec<_>, _>>()?;
    let pass = results.iter().all(AxiomReport::passed);
    let u = &rule.universe;

    let mut doc = header("check", &digest([input.bytes]));
    doc.insert("rule".into(), json!({ "kind": rule.kind, "universe": spec.universe }));
    doc.insert(
        "results".into(),
        json!(results.iter().map(|r| report::axiom_json(u, r)).collect::<Vec<_>>()),
    );
    doc.insert("verdict".into(), json!(verdict(pass)));
    let mut text = vec![format!("{} over {}", rule.kind, u.format_set(u.full_set()))];
    text.extend(results.iter().map(|r| report::axiom_line(u, r)));
    text.push(format!("verdict: {}", verdict(pass)));
    Ok(Report {
        json: Value::Object(doc),
        text,
        code: exit_code(pass),
    })
}

fn space_for(n: usize, m: usize, seed: u64) -> Result<(MechanismSpace, Value), InputError> {
    let relations = PreferenceRelation::all(m).len();
    let profiles = relations.checked_pow(n as u32);
    let caps = (n + 1).checked_pow(m as u32);
    let exhaustive = matches!((profiles, caps), (Some(p), Some(c)) if p.saturating_mul(c) <= EXHAUSTIVE_BUDGET);
    let space = if exhaustive {
        MechanismSpace::exhaustive(n, m)?
    } else {
        MechanismSpace::sampled(n, m, SAMPLED_PROFILES, SAMPLED_CAPACITIES, seed)?
    };
    let meta = json!({
        "exhaustive": exhaustive,
        "profiles": space.profiles().len(),
        "capacities": space.capacities().len(),
        "seed": (!exhaustive).then_some(seed),
    });
    Ok((space, meta))
}

fn check_structure(input: Input, properties: Option<&[String]>, seed: u64) -> Result<Report, InputError> {
    let spec: StructureSpec = parse_document(input.name, input.text()?)?;
    let s = spec.load()?;
    let selected = match requested(properties) {
        Some(names) => parse_properties(names)?,
        None => Property::ALL.to_vec(),
    };
    let (space, meta) = space_for(s.structure.n(), s.structure.m(), seed)?;
    let results = selected
        .iter()
        .map(|&p| check_property(&s.structure, &space, p))
        .collect::<Result<Vec<_>, _>>()?;
    let pass = results.iter().all(|r| r.passed());
    let agents = s.structure.agents();

    let mut doc = header("check", &digest([input.bytes]));
    doc.insert(
        "structure".into(),
        json!({ "agents": spec.agents, "objects": spec.objects }),
    );
    doc.insert("space".into(), meta);
    doc.insert(
        "results".into(),
        json!(results
            .iter()
            .map(|r| report::property_json(agents, &s.objects, r))
            .collect::<Vec<_>>()),
    );
    doc.insert("verdict".into(), json!(verdict(pass)));
    let mut text = vec![format!(
        "deferred acceptance, {} agents, {} objects, {} problems",
        s.structure.n(),
        s.structure.m(),
        space.len()
    )];
    text.extend(results.iter().map(report::property_line));
    text.push(format!("verdict: {}", verdict(pass)));
    Ok(Report {
        json: Value::Object(doc),
        text,
        code: exit_code(pass),
    })
}

/// Re-validate every witness of an earlier `check` report against `input`.
pub fn replay(input: Input, previous: Input) -> Result<Report, InputError> {
    let doc: Value = parse_document(input.name, input.text()?)?;
    let old: Value = parse_document(previous.name, previous.text()?)?;
    let results = old
        .get("results")
        .and_then(Value::as_array)
        .ok_or_else(|| InputError(format!("{}: not a check report (no `results`)", previous.name)))?;
    let mut replayed = Vec::new();
    if is_structure(&doc) {
        let spec: StructureSpec = parse_document(input.name, input.text()?)?;
        let s = spec.load()?;
        for (k, r) in results.iter().enumerate() {
            let Some(w) = r.get("witness").filter(|w| !w.is_null()) else { continue };
            let ctx = format!("{}: results[{k}].witness", previous.name);
            let w = report::mechanism_witness_from_json(s.structure.agents(), &s.objects, w, &ctx)?;
            let ok = w.replay(&s.structure)?;
            replayed.push((w.property.name().to_owned(), ok));
        }
    } else {
        let spec = RuleSpec::parse(input.name, input.text()?)?;
        let rule = spec.load()?;
        let table = rule.table()?;
        for (k, r) in results.iter().enumerate() {
            let Some(w) = r.get("witness").filter(|w| !w.is_null()) else { continue };
            let ctx = format!("{}: results[{k}].witness", previous.name);
            let w = report::witness_from_json(&rule.universe, w, &ctx)?;
            let ok = if w.axiom == Axiom::Insertion {
                let q = w.alternatives[0];
                match rule.lists() {
                    Some(l) if (2..=l.n()).contains(&q) => !is_insertion(l.list(q - 1), l.list(q)),
                    _ => false,
                }
            } else {
                let family = match w.axiom {
                    Axiom::FCapacityFilling | Axiom::Csarp => Some(f_table(&rule, &table)?.family().clone()),
                    _ => None,
                };
                w.replay(&table, family.as_ref())
            };
            replayed.push((w.axiom.name().to_owned(), ok));
        }
    }
    let pass = replayed.iter().all(|(_, ok)| *ok);
    let mut out = header("replay", &digest([input.bytes, previous.bytes]));
    out.insert(
        "replayed".into(),
        json!(replayed
            .iter()
            .map(|(name, ok)| json!({ "check": name, "replays": ok }))
            .collect::<Vec<_>>()),
    );
    out.insert("verdict".into(), json!(verdict(pass)));
    let mut text: Vec<String> = replayed
        .iter()
        .map(|(name, ok)| format!("{name:<28} {}", if *ok { "replays" } else { "does not replay" }))
        .collect();
    text.push(format!("{} witnesses, verdict: {}", replayed.len(), verdict(pass)));
    Ok(Report {
        json: Value::Object(out),
        text,
        code: exit_code(pass),
    })
}

/// Recover a priority profile (responsive first, then lexicographic).
pub fn extract(input: Input) -> Result<Report, InputError> {
    let spec = RuleSpec::parse(input.name, input.text()?)?;
    let rule = spec.load()?;
    let table = rule.table()?;
    let u = &rule.universe;
    let mut doc = header("extract", &digest([input.bytes]));
    doc.insert("rule".into(), json!({ "kind": rule.kind, "universe": spec.universe }));
    let mut text = Vec::new();

    let found: Result<(&str, PriorityProfile), lexichoice::Error> = match &rule.loaded {
        Loaded::Flex(f) => extract_flex_profile(f).map(|p| ("flex", p)),
        Loaded::Rule { .. } => match extract_responsive(&table) {
            Ok(o) => Ok(("responsive", PriorityProfile::constant(o))),
            Err(_) => extract_lex_profile(&table).map(|p| ("lexicographic", p)),
        },
    };
    let pass = match found {
        Ok((kind, profile)) => {
            doc.insert("extracted".into(), json!({ "kind": kind, "profile": profile_json(u, &profile) }));
            text.push(format!("extracted {kind} profile:"));
            text.extend(profile.orderings().iter().enumerate().map(|(t, o)| format!("  {}: {}", t + 1, o.format(u))));
            if let Loaded::Rule { profile: Some(input_profile), .. } = &rule.loaded {
                let same = matches!(profiles_equivalent(&table, input_profile, &profile), Ok(true));
                doc.insert("equivalent_to_input".into(), json!(same));
                text.push(format!("equivalent to input profile: {same}"));
            }
            if kind != "flex" {
                let residuals = residual_sets(&table)?;
                doc.insert(
                    "residual_sets".into(),
                    json!(residuals.iter().map(|&s| report::set_json(u, s)).collect::<Vec<_>>()),
                );
            }
            let rebuilt = match kind {
                "flex" => FChoiceTable::from_flex(&profile, rule.family().expect("flex rule").clone(), u)?.table().clone(),
                _ => materialize(&ChoiceRule::Lexicographic(profile), u)?,
            };
            let ok = rebuilt.same_choices(&table);
            doc.insert("rematerializes".into(), json!(ok));
            text.push(format!("re-materializes identically: {ok}"));
            ok
        }
        Err(e) => {
            doc.insert("extracted".into(), Value::Null);
            doc.insert("error".into(), json!(e.to_string()));
            text.push(format!("extraction failed: {e}"));
            let diagnosis: Vec<AxiomReport> = match &rule.loaded {
                Loaded::Flex(f) => vec![check_f_capacity_filling(f), axioms::check_monotonicity(&table), check_csarp(f)],
                Loaded::Rule { .. } => Axiom::LEXICOGRAPHIC
                    .iter()
                    .chain([&Axiom::Cwarp])
                    .filter_map(|&a| check_axiom(&table, a))
                    .collect(),
            };
            let failing: Vec<&AxiomReport> = diagnosis.iter().filter(|r| !r.passed()).collect();
            doc.insert(
                "diagnosis".into(),
                json!(failing.iter().map(|r| report::axiom_json(u, r)).collect::<Vec<_>>()),
            );
            text.extend(failing.iter().map(|r| report::axiom_line(u, r)));
            false
        }
    };
    doc.insert("verdict".into(), json!(verdict(pass)));
    Ok(Report {
        json: Value::Object(doc),
        text,
        code: exit_code(pass),
    })
}

/// Run deferred acceptance on one problem.
pub fn da(structure: Input, problem: Input, trace: bool) -> Result<Report, InputError> {
    let spec: StructureSpec = parse_document(structure.name, structure.text()?)?;
    let s: LoadedStructure = spec.load()?;
    let pspec: ProblemSpec = parse_document(problem.name, problem.text()?)?;
    let agents = s.structure.agents();
    let p = pspec.load(agents, &s.objects)?;
    let (alloc, rounds) = if trace {
        let (a, r) = da_allocate_traced(&s.structure, &p)?;
        (a, Some(r))
    } else {
        (da_allocate(&s.structure, &p)?, None)
    };
    let mut doc = header("da", &digest([structure.bytes, problem.bytes]));
    doc.insert("assignment".into(), report::allocation_json(agents, &s.objects, &alloc));
    doc.insert("holders".into(), report::holders_json(agents, &s.objects, &alloc));
    doc.insert("D_x".into(), report::demand_json(agents, &s.objects, &p, &alloc));
    let mut text: Vec<String> = (0..agents.n())
        .map(|i| format!("{} -> {}", agents.label(i), s.objects.name(alloc.get(i))))
        .collect();
    if let Some(rounds) = rounds {
        let trace: Vec<Value> = rounds
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let proposals: std::collections::BTreeMap<&str, &str> = r
                    .proposals
                    .iter()
                    .map(|&(i, item)| (agents.label(i), s.objects.name(item)))
                    .collect();
                let held: std::collections::BTreeMap<&str, Value> = r
                    .held
                    .iter()
                    .enumerate()
                    .map(|(x, &h)| (s.objects.names()[x].as_str(), report::set_json(agents, h)))
                    .collect();
                json!({
                    "round": k + 1,
                    "proposals": proposals,
                    "held": held,
                    "rejected": report::set_json(agents, r.rejected),
                })
            })
            .collect();
        text.push(format!("{} rounds", rounds.len()));
        doc.insert("rounds".into(), json!(rounds.len()));
        doc.insert("trace".into(), json!(trace));
    }
    Ok(Report {
        json: Value::Object(doc),
        text,
        code: 0,
    })
}

/// The four Boston rules over orderings `w` and `o` against the lexicographic
/// axioms, CWARP, the insertion property and the Boston requirement.
pub fn boston_report(w_in: Input, o_in: Input, n: usize) -> Result<Report, InputError> {
    let w_labels: Vec<String> = parse_document(w_in.name, w_in.text()?)?;
    let o_labels: Vec<String> = parse_document(o_in.name, o_in.text()?)?;
    if w_labels.len() != n {
        return Err(InputError(format!("{}: expected {n} labels, got {}", w_in.name, w_labels.len())));
    }
    let u = Universe::new(w_labels.iter().cloned()).map_err(|e| InputError(format!("{}: {e}", w_in.name)))?;
    let w = input::ordering(&u, &w_labels, w_in.name)?;
    let o = input::ordering(&u, &o_labels, o_in.name)?;
    let columns = [
        Axiom::CapacityFilling,
        Axiom::GrossSubstitutes,
        Axiom::Monotonicity,
        Axiom::Iaa,
        Axiom::Cwarp,
    ];
    let mut rows = Vec::new();
    let mut text = vec![format!(
        "{:<12} {:>4} {:>4} {:>4} {:>4} {:>5} {:>9} {:>6} {:>4}",
        "rule", "cf", "gs", "mon", "iaa", "cwarp", "insertion", "boston", "lex"
    )];
    let mut pass = true;
    for rule in BostonRule::ALL {
        let lists = rule.build(&w, &o, n);
        let table = materialize(&ChoiceRule::CapacityWise(lists.clone()), &u)?;
        let mut results: Vec<AxiomReport> = columns.iter().filter_map(|&a| check_axiom(&table, a)).collect();
        results.push(check_insertion(&lists));
        let boston = satisfies_boston_requirement(&lists, &w, &o);
        let lex = is_lexicographic(&table);
        pass &= boston && results.iter().all(AxiomReport::passed);
        let mark = |ok: bool| if ok { "pass" } else { "FAIL" };
        text.push(format!(
            "{:<12} {:>4} {:>4} {:>4} {:>4} {:>5} {:>9} {:>6} {:>4}",
            rule.name(),
            mark(results[0].passed()),
            mark(results[1].passed()),
            mark(results[2].passed()),
            mark(results[3].passed()),
            mark(results[4].passed()),
            mark(results[5].passed()),
            mark(boston),
            if lex { "yes" } else { "no" }
        ));
        rows.push(json!({
            "rule": rule.name(),
            "results": results.iter().map(|r| report::axiom_json(&u, r)).collect::<Vec<_>>(),
            "boston_requirement": verdict(boston),
            "lexicographic": lex,
        }));
    }
    let mut doc = header("boston-report", &digest([w_in.bytes, o_in.bytes, n.to_string().as_bytes()]));
    doc.insert("w".into(), ordering_json(&u, &w));
    doc.insert("o".into(), ordering_json(&u, &o));
    doc.insert("rules".into(), json!(rows));
    doc.insert("verdict".into(), json!(verdict(pass)));
    Ok(Report {
        json: Value::Object(doc),
        text,
        code: exit_code(pass),
    })
}
