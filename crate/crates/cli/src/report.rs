//! JSON encoding of verdicts, witnesses and allocations, and decoding of
//! witnesses for replay. Keys come out sorted and sets as sorted label arrays.

use std::collections::BTreeMap;

use lexichoice::axioms::{Axiom, AxiomReport, Observation, Witness};
use lexichoice::mechanism::{
    Allocation, AllocationProblem, Item, MechanismReport, MechanismWitness, ObjectSpace, Property,
};
use lexichoice::{ChoiceSet, Universe};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::input::{labels, set, InputError};

pub const TOOL: &str = "lexichoice";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A finished command: the JSON document, its text rendering and the exit code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub json: Value,
    pub text: Vec<String>,
    pub code: u8,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("values serialize");
                s.push('\n');
                s
            }
            Format::Text => {
                let mut s = self.text.join("\n");
                s.push('\n');
                s
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

/// SHA-256 over the inputs, each prefixed by its length.
pub fn digest<'a>(inputs: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut h = Sha256::new();
    for bytes in inputs {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

/// Common header fields.
pub fn header(command: &str, input_digest: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("command".into(), json!(command));
    m.insert("input_sha256".into(), json!(input_digest));
    m.insert("tool".into(), json!({ "name": TOOL, "version": VERSION }));
    m
}

pub fn set_json(u: &Universe, s: ChoiceSet) -> Value {
    json!(labels(u, s))
}

pub fn witness_json(u: &Universe, w: &Witness) -> Value {
    let observations: Vec<Value> = w
        .observations
        .iter()
        .map(|o| json!({ "S": set_json(u, o.set), "q": o.capacity, "C": set_json(u, o.chosen) }))
        .collect();
    let mut v = json!({
        "axiom": w.axiom.name(),
        "observations": observations,
        "text": w.describe(u),
    });
    if w.axiom == Axiom::Insertion {
        v["capacity"] = json!(w.alternatives[0]);
    } else {
        let alts: Vec<&str> = w.alternatives.iter().map(|&a| u.label(a)).collect();
        v["alternatives"] = json!(alts);
    }
    v
}

pub fn axiom_json(u: &Universe, r: &AxiomReport) -> Value {
    json!({
        "axiom": r.axiom.name(),
        "verdict": r.verdict.name(),
        "problems_checked": r.problems_checked,
        "witness": r.witness.as_ref().map(|w| witness_json(u, w)),
    })
}

pub fn axiom_line(u: &Universe, r: &AxiomReport) -> String {
    match &r.witness {
        None => format!("{:<20} {}", r.axiom.name(), r.verdict.name()),
        Some(w) => format!("{:<20} {}  {}", r.axiom.name(), r.verdict.name(), w.describe(u)),
    }
}

fn str_field<'a>(v: &'a Value, key: &str, ctx: &str) -> Result<&'a str, InputError> {
    v.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| InputError(format!("{ctx}: missing string field `{key}`")))
}

fn label_list(v: &Value, ctx: &str) -> Result<Vec<String>, InputError> {
    v.as_array()
        .and_then(|a| a.iter().map(|x| x.as_str().map(str::to_owned)).collect())
        .ok_or_else(|| InputError(format!("{ctx}: expected an array of labels")))
}

/// Inverse of [`witness_json`].
pub fn witness_from_json(u: &Universe, v: &Value, ctx: &str) -> Result<Witness, InputError> {
    let name = str_field(v, "axiom", ctx)?;
    let axiom = Axiom::from_name(name).ok_or_else(|| InputError(format!("{ctx}: unknown axiom `{name}`")))?;
    let observations = v
        .get("observations")
        .and_then(Value::as_array)
        .ok_or_else(|| InputError(format!("{ctx}: missing `observations`")))?
        .iter()
        .enumerate()
        .map(|(k, o)| {
            let c = format!("{ctx}.observations[{k}]");
            let s = set(u, &label_list(&o["S"], &c)?, &c)?;
            let chosen = set(u, &label_list(&o["C"], &c)?, &c)?;
            let capacity = o["q"]
                .as_u64()
                .ok_or_else(|| InputError(format!("{c}: missing `q`")))? as usize;
            Ok(Observation { set: s, capacity, chosen })
        })
        .collect::<Result<Vec<_>, InputError>>()?;
    let alternatives = if axiom == Axiom::Insertion {
        let q = v["capacity"]
            .as_u64()
            .ok_or_else(|| InputError(format!("{ctx}: missing `capacity`")))?;
        vec![q as usize]
    } else {
        label_list(&v["alternatives"], ctx)?
            .iter()
            .map(|l| u.index_of(l).map_err(|e| InputError(format!("{ctx}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?
    };
    Ok(Witness {
        axiom,
        observations,
        alternatives,
    })
}

pub fn item_name(objects: &ObjectSpace, item: Item) -> String {
    objects.name(item).to_owned()
}

pub fn allocation_json(agents: &Universe, objects: &ObjectSpace, a: &Allocation) -> Value {
    let map: BTreeMap<&str, String> = (0..agents.n())
        .map(|i| (agents.label(i), item_name(objects, a.get(i))))
        .collect();
    json!(map)
}

pub fn holders_json(agents: &Universe, objects: &ObjectSpace, a: &Allocation) -> Value {
    let map: BTreeMap<&str, Value> = (0..objects.m())
        .map(|x| (objects.names()[x].as_str(), set_json(agents, a.holders(Item::Object(x)))))
        .collect();
    json!(map)
}

pub fn demand_json(agents: &Universe, objects: &ObjectSpace, p: &AllocationProblem, a: &Allocation) -> Value {
    let map: BTreeMap<&str, Value> = (0..objects.m())
        .map(|x| {
            let d = lexichoice::mechanism::demand(a, &p.preferences, x);
            (objects.names()[x].as_str(), set_json(agents, d))
        })
        .collect();
    json!(map)
}

pub fn problem_json(agents: &Universe, objects: &ObjectSpace, p: &AllocationProblem) -> Value {
    let prefs: BTreeMap<&str, Vec<String>> = (0..agents.n())
        .map(|i| {
            let ranking = p.preferences[i].order().iter().map(|&it| item_name(objects, it)).collect();
            (agents.label(i), ranking)
        })
        .collect();
    let caps: BTreeMap<&str, usize> = (0..objects.m())
        .map(|x| (objects.names()[x].as_str(), p.capacities.get(x)))
        .collect();
    json!({ "R": prefs, "q": caps })
}

pub fn mechanism_witness_json(agents: &Universe, objects: &ObjectSpace, w: &MechanismWitness) -> Value {
    let steps: Vec<Value> = w
        .problems
        .iter()
        .zip(&w.allocations)
        .map(|(p, a)| {
            let mut v = problem_json(agents, objects, p);
            v["assignment"] = allocation_json(agents, objects, a);
            v["D_x"] = demand_json(agents, objects, p, a);
            v
        })
        .collect();
    json!({
        "property": w.property.name(),
        "agent": w.agent.map(|i| agents.label(i)),
        "object": w.object.map(|x| objects.names()[x].as_str()),
        "problems": steps,
    })
}

pub fn property_json(agents: &Universe, objects: &ObjectSpace, r: &MechanismReport) -> Value {
    json!({
        "property": r.property.name(),
        "verdict": r.verdict.name(),
        "problems_checked": r.problems_checked,
        "exhaustive": r.exhaustive,
        "witness": r.witness.as_ref().map(|w| mechanism_witness_json(agents, objects, w)),
    })
}

pub fn property_line(r: &MechanismReport) -> String {
    let mut s = format!("{:<28} {}", r.property.name(), r.verdict.name());
    if let Some(w) = &r.witness {
        s.push_str(&format!("  ({} problems in witness)", w.problems.len()));
    }
    s
}

/// Inverse of [`mechanism_witness_json`], given the structure's agents and objects.
pub fn mechanism_witness_from_json(
    agents: &Universe,
    objects: &ObjectSpace,
    v: &Value,
    ctx: &str,
) -> Result<MechanismWitness, InputError> {
    use crate::input::ProblemSpec;
    let name = str_field(v, "property", ctx)?;
    let property =
        Property::from_name(name).ok_or_else(|| InputError(format!("{ctx}: unknown property `{name}`")))?;
    let agent = match v.get("agent").and_then(Value::as_str) {
        Some(l) => Some(agents.index_of(l).map_err(|e| InputError(format!("{ctx}: {e}")))?),
        None => None,
    };
    let object = match v.get("object").and_then(Value::as_str) {
        Some(x) => match objects.parse_item(x).map_err(|e| InputError(format!("{ctx}: {e}")))? {
            Item::Object(x) => Some(x),
            Item::Null => return Err(InputError(format!("{ctx}: witness object cannot be the null object"))),
        },
        None => None,
    };
    let mut problems = Vec::new();
    let mut allocations = Vec::new();
    for (k, step) in v
        .get("problems")
        .and_then(Value::as_array)
        .ok_or_else(|| InputError(format!("{ctx}: missing `problems`")))?
        .iter()
        .enumerate()
    {
        let c = format!("{ctx}.problems[{k}]");
        let spec = ProblemSpec {
            preferences: serde_json::from_value(step["R"].clone()).map_err(|e| InputError(format!("{c}.R: {e}")))?,
            q: serde_json::from_value(step["q"].clone()).map_err(|e| InputError(format!("{c}.q: {e}")))?,
        };
        let problem = spec.load(agents, objects).map_err(|e| InputError(format!("{c}: {e}")))?;
        let assignment: BTreeMap<String, String> = serde_json::from_value(step["assignment"].clone())
            .map_err(|e| InputError(format!("{c}.assignment: {e}")))?;
        let items = agents
            .labels()
            .iter()
            .map(|a| {
                let name = assignment
                    .get(a)
                    .ok_or_else(|| InputError(format!("{c}.assignment: no entry for `{a}`")))?;
                objects.parse_item(name).map_err(|e| InputError(format!("{c}.assignment: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        problems.push(problem);
        allocations.push(Allocation { assignment: items });
    }
    Ok(MechanismWitness {
        property,
        problems,
        allocations,
        agent,
        object,
    })
}
