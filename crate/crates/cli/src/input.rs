//! JSON input documents: rules, choice structures and allocation problems.

use std::collections::BTreeMap;
use std::fmt;

use lexichoice::feasibility::{make_family, FChoiceTable, FeasibilityFamily};
use lexichoice::mechanism::{
    AllocationProblem, CapacityProfile, ChoiceStructure, ObjectSpace, PreferenceRelation,
};
use lexichoice::rules::BostonRule;
use lexichoice::{
    materialize, CapacityWiseLists, ChoiceRule, ChoiceSet, ChoiceTable, PriorityOrdering, PriorityProfile,
    Problem, Universe,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Bad input: unreadable file, malformed JSON or a document that does not
/// validate. Maps to exit code 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

impl From<lexichoice::Error> for InputError {
    fn from(e: lexichoice::Error) -> Self {
        InputError(e.to_string())
    }
}

fn at(context: &str, e: impl fmt::Display) -> InputError {
    InputError(format!("{context}: {e}"))
}

/// Parse `text` as a JSON document, reporting syntax and shape errors as
/// `name:line:column: message`.
pub fn parse_document<T: DeserializeOwned>(name: &str, text: &str) -> Result<T, InputError> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let msg = msg.split(" at line ").next().unwrap_or(&msg);
        InputError(format!("{name}:{}:{}: {msg}", e.line(), e.column()))
    })
}

/// One `{S, q, C}` record of an explicit table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRecord {
    #[serde(rename = "S")]
    pub set: Vec<String>,
    pub q: usize,
    #[serde(rename = "C")]
    pub chosen: Vec<String>,
}

/// Everything about a rule except its universe.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleBody {
    /// One ordering per position, best first.
    Lexicographic { profile: Vec<Vec<String>> },
    Responsive { ordering: Vec<String> },
    /// `lists[q-1]` holds the `q` orderings used at capacity `q`.
    CapacityWise { lists: Vec<Vec<Vec<String>>> },
    Table { table: Vec<TableRecord> },
    /// `rule` is one of `walk_open`, `open_walk`, `rotating`, `compromise`.
    Boston { rule: String, w: Vec<String>, o: Vec<String> },
    /// Feasibility-constrained rule: the family's maximal sets plus either a
    /// profile (greedy feasible picking) or an explicit table.
    Flex {
        family: Vec<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        profile: Option<Vec<Vec<String>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table: Option<Vec<TableRecord>>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub universe: Vec<String>,
    #[serde(flatten)]
    pub body: RuleBody,
}

/// Rule after validation against its universe.
#[derive(Clone, Debug)]
pub enum Loaded {
    Rule {
        rule: ChoiceRule,
        /// Capacity-indexed lists, when the rule was given that way.
        lists: Option<CapacityWiseLists>,
        /// A profile the rule is known to be lexicographic for.
        profile: Option<PriorityProfile>,
    },
    Flex(FChoiceTable),
}

#[derive(Clone, Debug)]
pub struct LoadedRule {
    pub universe: Universe,
    /// `lexicographic`, `boston:rotating`, ...
    pub kind: String,
    pub loaded: Loaded,
}

impl LoadedRule {
    pub fn table(&self) -> Result<ChoiceTable, InputError> {
        match &self.loaded {
            Loaded::Rule { rule, .. } => Ok(materialize(rule, &self.universe)?),
            Loaded::Flex(f) => Ok(f.table().clone()),
        }
    }

    pub fn family(&self) -> Option<&FeasibilityFamily> {
        match &self.loaded {
            Loaded::Flex(f) => Some(f.family()),
            Loaded::Rule { .. } => None,
        }
    }

    pub fn lists(&self) -> Option<&CapacityWiseLists> {
        match &self.loaded {
            Loaded::Rule { lists, .. } => lists.as_ref(),
            Loaded::Flex(_) => None,
        }
    }
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

pub fn ordering(u: &Universe, labels: &[String], context: &str) -> Result<PriorityOrdering, InputError> {
    if labels.len() != u.n() {
        return Err(at(
            context,
            format!("ordering lists {} labels but the universe has {}", labels.len(), u.n()),
        ));
    }
    PriorityOrdering::from_labels(u, &strs(labels)).map_err(|e| at(context, e))
}

fn profile(u: &Universe, orderings: &[Vec<String>], context: &str) -> Result<PriorityProfile, InputError> {
    let orderings = orderings
        .iter()
        .enumerate()
        .map(|(k, o)| ordering(u, o, &format!("{context}[{k}]")))
        .collect::<Result<Vec<_>, _>>()?;
    PriorityProfile::new(orderings).map_err(|e| at(context, e))
}

pub fn set(u: &Universe, labels: &[String], context: &str) -> Result<ChoiceSet, InputError> {
    let mut out = ChoiceSet::EMPTY;
    for l in labels {
        let i = u.index_of(l).map_err(|e| at(context, e))?;
        if out.contains(i) {
            return Err(at(context, format!("label `{l}` repeated")));
        }
        out.insert(i);
    }
    Ok(out)
}

/// Labels of `set`, sorted by label.
pub fn labels(u: &Universe, set: ChoiceSet) -> Vec<String> {
    let mut out: Vec<String> = set.iter().map(|i| u.label(i).to_owned()).collect();
    out.sort();
    out
}

fn table(u: &Universe, records: &[TableRecord], context: &str) -> Result<ChoiceTable, InputError> {
    let mut entries = Vec::with_capacity(records.len());
    for (k, r) in records.iter().enumerate() {
        let ctx = format!("{context}[{k}]");
        let s = set(u, &r.set, &format!("{ctx}.S"))?;
        let c = set(u, &r.chosen, &format!("{ctx}.C"))?;
        if s.is_empty() || !(1..=u.n()).contains(&r.q) {
            return Err(at(&ctx, format!("problem (S, q={}) is outside the domain", r.q)));
        }
        entries.push((Problem::new(s, r.q), c));
    }
    ChoiceTable::from_entries(u.clone(), entries).map_err(|e| table_error(u, context, e))
}

fn table_error(u: &Universe, context: &str, e: lexichoice::Error) -> InputError {
    use lexichoice::Error as E;
    let p = |p: &Problem| format!("S={:?}, q={}", labels(u, p.set), p.capacity);
    match &e {
        E::MissingEntry(problem) => at(context, format!("no record for {}", p(problem))),
        E::InvalidEntry { problem, reason } => at(context, format!("record for {}: {reason}", p(problem))),
        _ => at(context, e),
    }
}

fn family(u: &Universe, sets: &[Vec<String>], context: &str) -> Result<FeasibilityFamily, InputError> {
    let maximal = sets
        .iter()
        .enumerate()
        .map(|(k, s)| set(u, s, &format!("{context}[{k}]")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(make_family(u.n(), &maximal))
}

fn boston_rule(name: &str) -> Result<BostonRule, InputError> {
    BostonRule::from_name(name).ok_or_else(|| {
        InputError(format!(
            "rule: unknown Boston rule `{name}` (expected walk_open, open_walk, rotating or compromise)"
        ))
    })
}

impl RuleBody {
    pub fn kind_name(&self) -> String {
        match self {
            RuleBody::Lexicographic { .. } => "lexicographic".into(),
            RuleBody::Responsive { .. } => "responsive".into(),
            RuleBody::CapacityWise { .. } => "capacity_wise".into(),
            RuleBody::Table { .. } => "table".into(),
            RuleBody::Boston { rule, .. } => format!("boston:{rule}"),
            RuleBody::Flex { .. } => "flex".into(),
        }
    }

    pub fn load(&self, u: &Universe) -> Result<Loaded, InputError> {
        let n = u.n();
        Ok(match self {
            RuleBody::Lexicographic { profile: p } => {
                let p = profile(u, p, "profile")?;
                Loaded::Rule {
                    rule: ChoiceRule::Lexicographic(p.clone()),
                    lists: Some(CapacityWiseLists::from_profile(&p)),
                    profile: Some(p),
                }
            }
            RuleBody::Responsive { ordering: o } => {
                let o = ordering(u, o, "ordering")?;
                let p = PriorityProfile::constant(o.clone());
                Loaded::Rule {
                    rule: ChoiceRule::Responsive(o),
                    lists: Some(CapacityWiseLists::from_profile(&p)),
                    profile: Some(p),
                }
            }
            RuleBody::CapacityWise { lists } => {
                let per_q = lists
                    .iter()
                    .enumerate()
                    .map(|(k, l)| {
                        l.iter()
                            .enumerate()
                            .map(|(t, o)| ordering(u, o, &format!("lists[{k}][{t}]")))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let lists = CapacityWiseLists::new(per_q).map_err(|e| at("lists", e))?;
                if lists.n() != n {
                    return Err(at("lists", format!("expected {n} capacity levels, got {}", lists.n())));
                }
                Loaded::Rule {
                    rule: ChoiceRule::CapacityWise(lists.clone()),
                    lists: Some(lists),
                    profile: None,
                }
            }
            RuleBody::Table { table: records } => Loaded::Rule {
                rule: ChoiceRule::Table(table(u, records, "table")?),
                lists: None,
                profile: None,
            },
            RuleBody::Boston { rule, w, o } => {
                let which = boston_rule(rule)?;
                let w = ordering(u, w, "w")?;
                let o = ordering(u, o, "o")?;
                let lists = which.build(&w, &o, n);
                let profile = (which == BostonRule::Rotating)
                    .then(|| PriorityProfile::new(lists.list(n).to_vec()))
                    .transpose()?;
                Loaded::Rule {
                    rule: ChoiceRule::CapacityWise(lists.clone()),
                    lists: Some(lists),
                    profile,
                }
            }
            RuleBody::Flex {
                family: sets,
                profile: p,
                table: records,
            } => {
                let f = family(u, sets, "family")?;
                match (p, records) {
                    (Some(p), None) => {
                        let p = profile(u, p, "profile")?;
                        Loaded::Flex(FChoiceTable::from_flex(&p, f, u)?)
                    }
                    (None, Some(records)) => {
                        let t = table(u, records, "table")?;
                        Loaded::Flex(FChoiceTable::new(t, f).map_err(|e| at("table", e))?)
                    }
                    _ => return Err(InputError("flex rule needs exactly one of `profile` or `table`".into())),
                }
            }
        })
    }

    /// Same rule with set-valued fields sorted by label and table records in
    /// canonical problem order.
    fn canonicalize(&self, u: &Universe) -> Result<RuleBody, InputError> {
        let sort_records = |records: &[TableRecord]| -> Result<Vec<TableRecord>, InputError> {
            let mut keyed = records
                .iter()
                .map(|r| {
                    let s = set(u, &r.set, "table.S")?;
                    let c = set(u, &r.chosen, "table.C")?;
                    Ok(((s.bits(), r.q), TableRecord { set: labels(u, s), q: r.q, chosen: labels(u, c) }))
                })
                .collect::<Result<Vec<_>, InputError>>()?;
            keyed.sort_by_key(|(k, _)| *k);
            Ok(keyed.into_iter().map(|(_, r)| r).collect())
        };
        Ok(match self {
            RuleBody::Table { table } => RuleBody::Table { table: sort_records(table)? },
            RuleBody::Flex { family, profile, table } => {
                let mut family = family
                    .iter()
                    .map(|s| Ok(labels(u, set(u, s, "family")?)))
                    .collect::<Result<Vec<_>, InputError>>()?;
                family.sort();
                family.dedup();
                RuleBody::Flex {
                    family,
                    profile: profile.clone(),
                    table: table.as_deref().map(sort_records).transpose()?,
                }
            }
            other => other.clone(),
        })
    }
}

impl RuleSpec {
    pub fn parse(name: &str, text: &str) -> Result<Self, InputError> {
        parse_document(name, text)
    }

    pub fn universe(&self) -> Result<Universe, InputError> {
        Universe::new(self.universe.iter().cloned()).map_err(|e| at("universe", e))
    }

    pub fn load(&self) -> Result<LoadedRule, InputError> {
        let universe = self.universe()?;
        let loaded = self.body.load(&universe)?;
        Ok(LoadedRule {
            universe,
            kind: self.body.kind_name(),
            loaded,
        })
    }

    /// Compact JSON with sorted keys, sets sorted by label and table records
    /// in canonical order. Stable under parse/serialize round trips.
    pub fn canonical_json(&self) -> Result<String, InputError> {
        let u = self.universe()?;
        let canonical = RuleSpec {
            universe: self.universe.clone(),
            body: self.body.canonicalize(&u)?,
        };
        let value = serde_json::to_value(&canonical).map_err(|e| InputError(e.to_string()))?;
        Ok(value.to_string())
    }
}

/// Agents, objects and one choice rule per object (or one shared rule).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub agents: Vec<String>,
    pub objects: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleBody>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<BTreeMap<String, RuleBody>>,
}

#[derive(Clone, Debug)]
pub struct LoadedStructure {
    pub objects: ObjectSpace,
    pub structure: ChoiceStructure,
}

impl StructureSpec {
    pub fn load(&self) -> Result<LoadedStructure, InputError> {
        let agents = Universe::new(self.agents.iter().cloned()).map_err(|e| at("agents", e))?;
        let objects = ObjectSpace::new(self.objects.iter().cloned()).map_err(|e| at("objects", e))?;
        let rule_of = |body: &RuleBody, ctx: &str| -> Result<ChoiceRule, InputError> {
            match body.load(&agents).map_err(|e| at(ctx, e))? {
                Loaded::Rule { rule, .. } => Ok(rule),
                Loaded::Flex(_) => Err(at(ctx, "flex rules cannot drive deferred acceptance")),
            }
        };
        let rules = match (&self.rule, &self.rules) {
            (Some(body), None) => vec![rule_of(body, "rule")?; objects.m()],
            (None, Some(map)) => {
                if let Some(extra) = map.keys().find(|k| !self.objects.contains(k)) {
                    return Err(at("rules", format!("unknown object `{extra}`")));
                }
                self.objects
                    .iter()
                    .map(|x| {
                        let body = map.get(x).ok_or_else(|| at("rules", format!("no rule for object `{x}`")))?;
                        rule_of(body, &format!("rules.{x}"))
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            _ => return Err(InputError("structure needs exactly one of `rule` or `rules`".into())),
        };
        let structure = ChoiceStructure::from_rules(&agents, &rules)?;
        Ok(LoadedStructure { objects, structure })
    }
}

/// Preferences `R` (agent → ranking of objects and `∅`, best first) and
/// capacities `q` (object → capacity).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(rename = "R")]
    pub preferences: BTreeMap<String, Vec<String>>,
    pub q: BTreeMap<String, usize>,
}

impl ProblemSpec {
    pub fn load(&self, agents: &Universe, objects: &ObjectSpace) -> Result<AllocationProblem, InputError> {
        if let Some(extra) = self.preferences.keys().find(|a| agents.index_of(a).is_err()) {
            return Err(at("R", format!("unknown agent `{extra}`")));
        }
        if let Some(extra) = self.q.keys().find(|x| !objects.names().contains(x)) {
            return Err(at("q", format!("unknown object `{extra}`")));
        }
        let preferences = agents
            .labels()
            .iter()
            .map(|a| {
                let ctx = format!("R.{a}");
                let ranking = self.preferences.get(a).ok_or_else(|| at("R", format!("no ranking for agent `{a}`")))?;
                let order = ranking
                    .iter()
                    .map(|name| objects.parse_item(name).map_err(|e| at(&ctx, e)))
                    .collect::<Result<Vec<_>, _>>()?;
                PreferenceRelation::new(order).map_err(|e| at(&ctx, e))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let caps = objects
            .names()
            .iter()
            .map(|x| self.q.get(x).copied().ok_or_else(|| at("q", format!("no capacity for object `{x}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AllocationProblem::new(preferences, CapacityProfile(caps))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: &str = r#"{
        "universe": ["a", "b"],
        "kind": "table",
        "table": [
            {"S": ["b", "a"], "q": 2, "C": ["b", "a"]},
            {"S": ["a"], "q": 1, "C": ["a"]},
            {"S": ["b"], "q": 1, "C": ["b"]},
            {"S": ["a", "b"], "q": 1, "C": ["b"]},
            {"S": ["a"], "q": 2, "C": ["a"]},
            {"S": ["b"], "q": 2, "C": ["b"]}
        ]
    }"#;

    #[test]
    fn canonical_form_is_stable() {
        let spec = RuleSpec::parse("t.json", TABLE).unwrap();
        let once = spec.canonical_json().unwrap();
        let twice = RuleSpec::parse("c.json", &once).unwrap().canonical_json().unwrap();
        assert_eq!(once, twice);
        assert!(once.starts_with(r#"{"kind":"table","table":[{"C":["a"],"S":["a"],"q":1}"#));
    }

    #[test]
    fn missing_record_names_the_problem() {
        let text = TABLE.replace(r#"{"S": ["b"], "q": 2, "C": ["b"]}"#, r#"{"S": ["b"], "q": 1, "C": []}"#);
        let err = RuleSpec::parse("t.json", &text).unwrap().load().unwrap_err();
        assert!(err.0.contains("duplicate"), "{err}");
        let text = TABLE.replace(",\n            {\"S\": [\"b\"], \"q\": 2, \"C\": [\"b\"]}", "");
        let err = RuleSpec::parse("t.json", &text).unwrap().load().unwrap_err();
        assert_eq!(err.0, r#"table: no record for S=["b"], q=2"#);
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let err = RuleSpec::parse("bad.json", "{\n  \"universe\": [\"a\",,]\n}").unwrap_err();
        assert!(err.0.starts_with("bad.json:2:"), "{err}");
    }

    #[test]
    fn unknown_labels_are_located() {
        let text = r#"{"universe": ["a","b"], "kind": "responsive", "ordering": ["a","z"]}"#;
        let err = RuleSpec::parse("r.json", text).unwrap().load().unwrap_err();
        assert_eq!(err.0, "ordering: unknown label `z`");
    }

    #[test]
    fn structure_and_problem_load() {
        let s: StructureSpec = parse_document(
            "s.json",
            r#"{"agents":["a","b"],"objects":["x"],"rule":{"kind":"responsive","ordering":["b","a"]}}"#,
        )
        .unwrap();
        let s = s.load().unwrap();
        let p: ProblemSpec = parse_document("p.json", r#"{"R":{"a":["x","∅"],"b":["x","∅"]},"q":{"x":1}}"#).unwrap();
        let p = p.load(s.structure.agents(), &s.objects).unwrap();
        assert_eq!(p.capacities.0, vec![1]);
        let missing: ProblemSpec = parse_document("p.json", r#"{"R":{"a":["x","∅"]},"q":{"x":1}}"#).unwrap();
        assert!(missing.load(s.structure.agents(), &s.objects).is_err());
    }
}
