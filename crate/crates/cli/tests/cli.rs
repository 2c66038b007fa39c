use std::io::Write;
use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_amalgam")).args(args).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let report = if stdout.trim().is_empty() { Value::Null } else { serde_json::from_str(&stdout).unwrap() };
    (out.status.code().unwrap(), report, String::from_utf8(out.stderr).unwrap())
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timingMs");
    v
}

#[test]
fn solve_satisfiable_path() {
    let (code, r, _) = run(&["solve", "--template", &fixture("rg.json"), "--instance", &fixture("tri.json")]);
    assert_eq!(code, 0);
    assert_eq!(r["verdict"], "Sat");
    assert_eq!(r["command"], "solve");
    let edges = r["artifacts"]["solution"]["structure"]["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 3);
    assert_eq!(r["artifacts"]["solution"]["structure"]["size"], 3);
}

#[test]
fn solve_unsatisfiable_triangle() {
    for strategy in ["greedy", "paper-faithful"] {
        let args = ["solve", "--template", &fixture("h3.json"), "--instance", &fixture("k3.json"), "--strategy", strategy];
        let (code, r, _) = run(&args);
        assert_eq!(code, 1);
        assert_eq!(r["verdict"], "Unsat");
    }
    let (code, r, _) = run(&["oracle", "--template", &fixture("h3.json"), "--instance", &fixture("k3.json")]);
    assert_eq!((code, r["verdict"].as_str()), (1, Some("Unsat")));
}

#[test]
fn analyze_finds_the_xor_pair() {
    let args = ["analyze", "--template", &fixture("rg.json"), "--relations", &fixture("xor.json"), "--budget", "1000"];
    let (code, r, _) = run(&args);
    assert_eq!(code, 1);
    assert_eq!(r["verdict"], "NonUniform");
    let w = r["artifacts"]["witness"].as_array().unwrap();
    let ends: Vec<(String, String)> =
        w.iter().map(|x| (x["from"][0].as_str().unwrap().into(), x["to"][0].as_str().unwrap().into())).collect();
    assert!(ends.contains(&("E".into(), "N".into())));
    assert!(ends.contains(&("N".into(), "E".into())));
}

#[test]
fn check_chain_verdicts() {
    let (code, r, _) = run(&["check-chain", "--ops", &fixture("proj1.json")]);
    assert_eq!(code, 1);
    assert_eq!(r["verdict"], "Invalid");
    assert_eq!(r["artifacts"]["result"]["equation"], 4);
    assert_eq!((r["artifacts"]["result"]["x"].as_u64(), r["artifacts"]["result"]["y"].as_u64()), (Some(0), Some(1)));
    let (code, r, _) = run(&["check-chain", "--ops", &fixture("majority.json")]);
    assert_eq!((code, r["verdict"].as_str()), (0, Some("Valid")));
}

#[test]
fn derive_then_verify() {
    let (code, r, _) = run(&["derive", "--template", &fixture("rg.json"), "--relations", &fixture("xor.json")]);
    assert_eq!(code, 0);
    let cert = r["artifacts"]["certificate"].clone();
    assert_eq!(cert["claimedConclusion"], "not preserved by any chain of quasi directed Jónsson operations");

    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(file, "{cert}").unwrap();
    let path = file.path().to_string_lossy().into_owned();
    let (code, r, _) = run(&["verify", "--template", &fixture("rg.json"), "--certificate", &path]);
    assert_eq!((code, r["verdict"].as_str()), (0, Some("Valid")));

    let mut tampered = cert.clone();
    tampered["finalRelation"]["orbits"].as_array_mut().unwrap().pop();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(file, "{tampered}").unwrap();
    let path = file.path().to_string_lossy().into_owned();
    let (code, r, _) = run(&["verify", "--template", &fixture("rg.json"), "--certificate", &path]);
    assert_eq!((code, r["verdict"].as_str()), (1, Some("Invalid")));
}

#[test]
fn uniform_relations_have_no_obstruction() {
    let (code, r, _) = run(&["derive", "--template", &fixture("rg.json"), "--relations", &fixture("same.json")]);
    assert_eq!((code, r["verdict"].as_str()), (1, Some("NoObstruction")));
    let (code, r, _) = run(&["analyze", "--template", &fixture("rg.json"), "--relations", &fixture("same.json")]);
    assert_eq!((code, r["verdict"].as_str()), (0, Some("Uniform")));
}

#[test]
fn budget_exhaustion_exits_three() {
    let args = ["analyze", "--template", &fixture("rg.json"), "--relations", &fixture("same.json"), "--budget", "1"];
    let (code, r, _) = run(&args);
    assert_eq!((code, r["verdict"].as_str()), (3, Some("BudgetExhausted")));
}

#[test]
fn minimality_and_orbits() {
    let (code, r, _) = run(&["minimality", "--template", &fixture("h3.json"), "--instance", &fixture("k3.json")]);
    assert_eq!((code, r["verdict"].as_str()), (1, Some("Trivial")));
    let (code, r, _) = run(&["minimality", "--template", &fixture("rg.json"), "--instance", &fixture("tri.json")]);
    assert_eq!((code, r["verdict"].as_str()), (0, Some("NonTrivial")));
    let (code, r, _) = run(&["orbits", "--template", &fixture("h3.json"), "--k", "3"]);
    assert_eq!(code, 0);
    // Three-vertex labels of H_3: all partitions, colorings without the E-triangle.
    assert_eq!(r["artifacts"]["count"], 14);
}

#[test]
fn usage_and_input_errors_exit_two() {
    let (code, _, err) = run(&["solve", "--template", &fixture("rg.json")]);
    assert_eq!(code, 2);
    assert!(err.contains("--instance"));
    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, 2);
    let (code, _, err) = run(&["solve", "--template", &fixture("missing.json"), "--instance", &fixture("tri.json")]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"));
    let (code, _, _) = run(&["solve", "--template", &fixture("tri.json"), "--instance", &fixture("tri.json")]);
    assert_eq!(code, 2);
}

#[test]
fn reports_are_deterministic() {
    let args = ["derive", "--template", &fixture("rg.json"), "--relations", &fixture("xor.json")];
    let a = without_timing(run(&args).1);
    let b = without_timing(run(&args).1);
    assert_eq!(a, b);
}

#[test]
fn pretty_keeps_the_payload() {
    let args = ["solve", "--template", &fixture("rg.json"), "--instance", &fixture("tri.json")];
    let (_, plain, _) = run(&args);
    let mut pretty_args = args.to_vec();
    pretty_args.push("--pretty");
    let (_, pretty, err) = run(&pretty_args);
    assert_eq!(without_timing(plain), without_timing(pretty));
    assert!(err.contains("Sat"));
}
