use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lexichoice::fixtures;
use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lexichoice"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn verdicts(report: &Value) -> Vec<(String, String)> {
    report["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["axiom"].as_str().unwrap().to_owned(), r["verdict"].as_str().unwrap().to_owned()))
        .collect()
}

/// Serialize a table as a `table` rule document.
fn table_doc(t: &lexichoice::ChoiceTable) -> String {
    let u = t.universe();
    let labels = |s: lexichoice::ChoiceSet| -> Vec<&str> { s.iter().map(|i| u.label(i)).collect() };
    let records: Vec<Value> = t
        .iter()
        .map(|(p, c)| json!({ "S": labels(p.set), "q": p.capacity, "C": labels(c) }))
        .collect();
    json!({ "universe": u.labels(), "kind": "table", "table": records }).to_string()
}

#[test]
fn rotating_passes_every_default_axiom() {
    let out = run(&["check", path_str(&data("rotating.json"))]);
    assert_eq!(code(&out), 0);
    let r = json_of(&out);
    assert_eq!(r["verdict"], "pass");
    let names: Vec<String> = verdicts(&r).into_iter().map(|(a, _)| a).collect();
    assert_eq!(names, ["capacity_filling", "gross_substitutes", "monotonicity", "iaa", "cwarp", "insertion"]);
}

#[test]
fn walk_open_fails_iaa_with_the_proof_sets() {
    let out = run(&["check", path_str(&data("walk_open.json")), "--axioms", "iaa"]);
    assert_eq!(code(&out), 1);
    let r = json_of(&out);
    let w = &r["results"][0]["witness"];
    let obs: Vec<(Value, u64, Value)> = w["observations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| (o["S"].clone(), o["q"].as_u64().unwrap(), o["C"].clone()))
        .collect();
    assert_eq!(
        obs,
        [
            (json!(["a", "b", "c", "d"]), 2, json!(["a", "b"])),
            (json!(["a", "b", "c", "d"]), 3, json!(["a", "b", "d"])),
            (json!(["a", "c", "d", "e"]), 2, json!(["a", "e"])),
            (json!(["a", "c", "d", "e"]), 3, json!(["a", "c", "e"])),
        ]
    );
}

#[test]
fn input_errors_exit_2() {
    let out = run(&["check", path_str(&data("missing_record.json"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains(r#"no record for S=["a", "b"], q=2"#));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"universe\": [\"a\"]\n  \"kind\": \"table\"\n}").unwrap();
    let out = run(&["check", path_str(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json:3:"));

    assert_eq!(code(&run(&["check", "/nonexistent/rule.json"])), 2);
    assert_eq!(code(&run(&["check", path_str(&data("rotating.json")), "--axioms", "nonsense"])), 2);
}

#[test]
fn extract_recovers_an_equivalent_profile() {
    let out = run(&["extract", path_str(&data("rotating.json"))]);
    assert_eq!(code(&out), 0);
    let r = json_of(&out);
    assert_eq!(r["extracted"]["kind"], "lexicographic");
    assert_eq!(r["equivalent_to_input"], true);
    assert_eq!(r["rematerializes"], true);

    let out = run(&["extract", path_str(&data("lex.json"))]);
    assert_eq!(code(&out), 0);
    assert_eq!(json_of(&out)["equivalent_to_input"], true);
}

#[test]
fn extract_responsive_gives_a_constant_profile() {
    let r = json_of(&run(&["extract", path_str(&data("responsive.json"))]));
    assert_eq!(r["extracted"]["kind"], "responsive");
    let order = json!(["b", "c", "a"]);
    assert_eq!(r["extracted"]["profile"], json!([order, order, order]));
}

#[test]
fn extract_reports_the_cwarp_violation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("example.json");
    std::fs::write(&path, table_doc(&fixtures::cwarp_violator())).unwrap();
    let out = run(&["extract", path_str(&path)]);
    assert_eq!(code(&out), 1);
    let r = json_of(&out);
    assert!(r["extracted"].is_null());
    let failing: Vec<&str> = r["diagnosis"].as_array().unwrap().iter().map(|d| d["axiom"].as_str().unwrap()).collect();
    assert!(failing.contains(&"cwarp"), "{failing:?}");
}

#[test]
fn da_reproduces_the_single_object_example() {
    let out = run(&[
        "da",
        path_str(&data("walk_open_structure.json")),
        path_str(&data("appendix_c_problem.json")),
        "--trace",
    ]);
    assert_eq!(code(&out), 0);
    let r = json_of(&out);
    assert_eq!(r["holders"]["x"], json!(["a", "e"]));
    assert_eq!(r["D_x"]["x"], json!(["c", "d"]));
    let rounds = r["rounds"].as_u64().unwrap();
    assert!((1..=6).contains(&rounds));
    assert_eq!(r["trace"].as_array().unwrap().len() as u64, rounds);
}

#[test]
fn da_with_everyone_preferring_null_assigns_null() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.json");
    std::fs::write(&problem, r#"{"R":{"a":["∅","x","y"],"b":["∅","y","x"],"c":["∅","x","y"]},"q":{"x":3,"y":3}}"#)
        .unwrap();
    let out = run(&["da", path_str(&data("rotating_structure.json")), path_str(&problem)]);
    assert_eq!(code(&out), 0);
    assert_eq!(json_of(&out)["assignment"], json!({ "a": "∅", "b": "∅", "c": "∅" }));
}

type BostonRow = (String, Vec<(String, String)>, String);

fn boston_rows(r: &Value) -> Vec<BostonRow> {
    r["rules"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| {
            (
                row["rule"].as_str().unwrap().to_owned(),
                verdicts(row),
                row["boston_requirement"].as_str().unwrap().to_owned(),
            )
        })
        .collect()
}

#[test]
fn boston_report_over_the_fixture_orderings() {
    let out = run(&["boston-report", path_str(&data("w.json")), path_str(&data("o.json")), "5"]);
    assert_eq!(code(&out), 1);
    for (rule, results, boston) in boston_rows(&json_of(&out)) {
        assert_eq!(boston, "pass");
        let failing: Vec<&str> = results.iter().filter(|(_, v)| v == "fail").map(|(a, _)| a.as_str()).collect();
        match rule.as_str() {
            "walk_open" | "open_walk" => assert_eq!(failing, ["iaa", "cwarp"], "{rule}"),
            _ => assert!(failing.is_empty(), "{rule}: {failing:?}"),
        }
    }
}

#[test]
fn boston_report_degenerate_cases_pass() {
    let out = run(&["boston-report", path_str(&data("w.json")), path_str(&data("w.json")), "5"]);
    assert_eq!(code(&out), 0);
    let r = json_of(&out);
    let rows = boston_rows(&r);
    assert!(rows.iter().all(|(_, results, _)| results == &rows[0].1));

    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.json");
    std::fs::write(&one, r#"["a"]"#).unwrap();
    assert_eq!(code(&run(&["boston-report", path_str(&one), path_str(&one), "1"])), 0);
    assert_eq!(code(&run(&["boston-report", path_str(&one), path_str(&one), "2"])), 2);
}

#[test]
fn repro_cases() {
    let out = run(&["repro", "appendix_c"]);
    assert_eq!(code(&out), 0);
    let r = json_of(&out);
    assert_eq!(r["cases"][0]["id"], "appendix_c");
    assert_eq!(r["cases"][0]["verdict"], "pass");

    let out = run(&["repro", "all"]);
    assert_eq!(code(&out), 0);
    let r = json_of(&out);
    assert_eq!(r["passed"], 13);
    assert_eq!(r["total"], 13);

    assert_eq!(code(&run(&["repro", "appendix_z"])), 2);
}

#[test]
fn witnesses_replay_in_a_fresh_process_and_tampering_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let rule = data("walk_open.json");
    let out = run(&["check", path_str(&rule), "--output", path_str(&report)]);
    assert_eq!(code(&out), 1);
    let out = run(&["check", path_str(&rule), "--replay-witness", path_str(&report)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json_of(&out)["replayed"].as_array().unwrap().len(), 2);

    let mut doc: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    doc["results"][3]["witness"]["observations"][0]["C"] = json!(["a", "c"]);
    std::fs::write(&report, doc.to_string()).unwrap();
    let out = run(&["check", path_str(&rule), "--replay-witness", path_str(&report)]);
    assert_eq!(code(&out), 1);
}

#[test]
fn mechanism_witnesses_replay() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let structure = data("rotating_structure.json");
    let out = run(&["check", path_str(&structure), "--axioms", "isd,weak_isd", "--output", path_str(&report)]);
    assert_eq!(code(&out), 1);
    let r: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["space"]["exhaustive"], true);
    assert_eq!(r["results"][1]["verdict"], "pass");
    let out = run(&["check", path_str(&structure), "--replay-witness", path_str(&report)]);
    assert_eq!(code(&out), 0);
}

#[test]
fn sampled_spaces_follow_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let structure = dir.path().join("s.json");
    std::fs::write(
        &structure,
        r#"{"agents":["a","b","c","d"],"objects":["x","y","z"],
            "rule":{"kind":"responsive","ordering":["a","b","c","d"]}}"#,
    )
    .unwrap();
    let go = |seed: &str| run(&["check", path_str(&structure), "--axioms", "strategy_proofness", "--seed", seed]);
    let (a, b) = (go("3"), go("3"));
    assert_eq!(a.stdout, b.stdout);
    let r = json_of(&a);
    assert_eq!(r["space"]["exhaustive"], false);
    assert_eq!(r["space"]["seed"], 3);
    assert_eq!(r["results"][0]["verdict"], "pass");
}

#[test]
fn flex_rules_check_and_extract() {
    let out = run(&["check", path_str(&data("flex.json"))]);
    assert_eq!(code(&out), 0);
    let names: Vec<String> = verdicts(&json_of(&out)).into_iter().map(|(a, _)| a).collect();
    assert_eq!(names, ["f_capacity_filling", "monotonicity", "csarp"]);
    let out = run(&["extract", path_str(&data("flex.json"))]);
    assert_eq!(code(&out), 0);
    assert_eq!(json_of(&out)["extracted"]["kind"], "flex");
}

#[test]
fn text_format_and_env_jobs() {
    let out = bin()
        .args(["check", path_str(&data("rotating.json")), "--format", "text"])
        .env("LEXICHOICE_JOBS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("boston:rotating over {a,b,c,d,e}\n"));
    assert!(text.ends_with("verdict: pass\n"));
}

#[test]
fn timing_goes_to_stderr_only() {
    let plain = run(&["repro", "example_1"]);
    let timed = run(&["repro", "example_1", "--timing"]);
    assert_eq!(plain.stdout, timed.stdout);
    assert!(String::from_utf8_lossy(&timed.stderr).starts_with("elapsed: "));
}
