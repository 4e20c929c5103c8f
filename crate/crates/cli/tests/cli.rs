use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    format!("{}/../../docs/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn pcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcalc")).args(args).output().expect("pcalc runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Runs a command with `--json` into a scratch file and returns the report.
fn report(args: &[&str], name: &str) -> Value {
    let path = tmp(name);
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap();
    full.extend(["--json", p]);
    let out = pcalc(&full);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap()
}

fn write_module(name: &str, text: &str) -> String {
    let path = tmp(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const CORNER: &str = r#"{"field":{"prime":3},"poset":{"grid":{"shape":[2,2]}},"dims":{"1,1":1}}"#;
const ZERO: &str = r#"{"field":{"prime":2},"poset":{"grid":{"shape":[3,2]}}}"#;

#[test]
fn analyze_matches_goldens() {
    for name in ["ex1", "ex2", "ex4"] {
        let input = fixture(&format!("{name}.json"));
        let out = tmp(&format!("{name}.analyze.json"));
        let status = pcalc(&["analyze", &input, "--json", out.to_str().unwrap()]);
        assert_eq!(code(&status), 0);
        let golden = fs::read(fixture(&format!("golden/{name}.analyze.json"))).unwrap();
        assert_eq!(fs::read(&out).unwrap(), golden, "{name} report differs from its golden file");
    }
}

#[test]
fn ex1_blocks_match_golden() {
    let out = tmp("ex1.blocks.json");
    let status = pcalc(&["decompose", &fixture("ex1.json"), "--json", out.to_str().unwrap()]);
    assert_eq!(code(&status), 0);
    assert_eq!(fs::read(&out).unwrap(), fs::read(fixture("golden/ex1.blocks.json")).unwrap());
}

#[test]
fn analyze_verdicts() {
    let ex1 = report(&["analyze", &fixture("ex1.json")], "a1.json");
    assert_eq!(ex1["codegree"]["1"]["holds"], true);
    assert_eq!(ex1["middle_exact"]["2"]["holds"], true);
    let ex2 = report(&["analyze", &fixture("ex2.json")], "a2.json");
    assert_eq!(ex2["codegree"]["1"]["holds"], true);
    assert_eq!(ex2["degree"]["1"]["holds"], false);
    assert_eq!(ex2["middle_exact"]["3"]["holds"], false);
    let ex4 = report(&["analyze", &fixture("ex4.json")], "a4.json");
    for k in ["2", "3"] {
        assert_eq!(ex4["middle_exact"][k]["holds"], true);
    }
    assert_eq!(ex4["projective"]["holds"], false);
    assert_eq!(ex4["injective"]["holds"], false);
}

#[test]
fn approx_writes_the_approximation() {
    let out = tmp("t1.json");
    let ex1 = fixture("ex1.json");
    let status = pcalc(&["approx", &ex1, "--codegree", "1", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&status), 0);
    let written: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let input: Value = serde_json::from_str(&fs::read_to_string(&ex1).unwrap()).unwrap();
    assert_eq!(written["dims"], input["dims"]);

    let corner = write_module("corner.json", CORNER);
    let r = report(&["approx", &corner, "--codegree", "1"], "corner.approx.json");
    assert!(r["dims"].as_object().unwrap().values().all(|d| d == 0));

    let r = report(&["approx", &ex1, "--codegree", "0"], "const.json");
    let dims: Vec<&Value> = r["dims"].as_object().unwrap().values().collect();
    assert!(dims.iter().all(|&d| d == dims[0]), "T_0 F should be constant: {dims:?}");
}

#[test]
fn decompose_modes() {
    let ex1 = &fixture("ex1.json");
    let r = report(&["decompose", ex1, "--mode", "split"], "split.json");
    assert_eq!(r["summands"].as_array().unwrap().len(), 2);
    let r = report(&["decompose", ex1, "--mode", "bkc"], "bkc.json");
    let labels: Vec<&str> = r["summands"].as_array().unwrap().iter().map(|s| s["label"].as_str().unwrap()).collect();
    assert_eq!(labels.len(), 3);
    assert!(labels[0].starts_with('B') && labels[1].starts_with('K') && labels[2].starts_with('C'));
    let r = report(&["decompose", ex1, "--mode", "free"], "free.json");
    assert_eq!(r["found"], false);
}

#[test]
fn lift_round_trips() {
    let r = report(&["lift", &fixture("ex1.json")], "lift1.json");
    assert_eq!(r["roundtrip"]["h0_is_t1"], true);
    assert_eq!(r["roundtrip"]["h0_is_module"], true);
    let r = report(&["lift", &fixture("hook.json")], "lift_hook.json");
    assert_eq!(r["roundtrip"]["h0_is_t1"], true);
    assert_eq!(r["roundtrip"]["h0_is_module"], false);
    let zero = write_module("zero.json", ZERO);
    let r = report(&["lift", &zero], "lift_zero.json");
    for e in r["elements"].as_object().unwrap().values() {
        assert_eq!(e["dims"]["0"], 0);
        assert_eq!(e["dims"]["1"], 0);
    }
}

#[test]
fn koszul_on_a_named_cube() {
    let r = report(&["koszul", &fixture("ex2.json"), "--top", "1,1,1", "--cover", "0,1,1;1,0,1;1,1,0"], "koszul.json");
    assert_eq!(r["cubes"][0]["homology"]["2"], 1);
    assert_eq!(r["cubes"][0]["middle_exact"], false);
}

#[test]
fn check_is_deterministic_per_seed() {
    let args = ["check", "--suite", "exactness", "--trials", "5", "--seed", "7"];
    let a = report(&args, "check_a.json");
    let b = report(&args, "check_b.json");
    assert_eq!(a, b);
    assert_eq!(a["ok"], true);
    let empty = report(&["check", "--trials", "0"], "check_empty.json");
    assert_eq!(empty["ok"], true);
}

#[test]
fn gen_is_deterministic_and_parses() {
    let a = pcalc(&["gen", "--grid", "3x2", "--prime", "5", "--seed", "9"]);
    let b = pcalc(&["gen", "--grid", "3x2", "--prime", "5", "--seed", "9"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let path = write_module("gen.json", &String::from_utf8(a.stdout).unwrap());
    assert_eq!(code(&pcalc(&["analyze", &path])), 0);
}

#[test]
fn exit_code_contract() {
    let ex1 = &fixture("ex1.json");
    let hook = fixture("hook.json");
    let ex2 = fixture("ex2.json");
    let ex4 = fixture("ex4.json");
    let not_commuting = write_module(
        "noncommuting.json",
        r#"{"field":{"prime":2},"poset":{"grid":{"shape":[2,2]}},
            "dims":{"0,0":1,"0,1":1,"1,0":1,"1,1":1},
            "maps":{"0,0->0,1":[[1]],"0,0->1,0":[[1]],"0,1->1,1":[[1]],"1,0->1,1":[[0]]}}"#,
    );
    let bad_prime = write_module("bad_prime.json", r#"{"field":{"prime":6},"poset":{"grid":{"shape":[2]}}}"#);
    let not_json = write_module("not_json.json", "{");
    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["analyze", ex1], 0),
        (vec!["check", "--suite", "homotopy", "--trials", "2", "--inject-fault"], 1),
        (vec!["analyze", &not_json], 2),
        (vec!["analyze", &bad_prime], 2),
        (vec!["analyze", &not_commuting], 2),
        (vec!["analyze", "/does/not/exist.json"], 2),
        (vec!["koszul", ex1, "--top", "2,2", "--cover", "1,1;2,1"], 2),
        (vec!["analyze"], 2),
        (vec!["decompose", &hook, "--mode", "split"], 3),
        (vec!["decompose", ex1, "--mode", "blocks", "--side", "degree"], 3),
        (vec!["decompose", &ex4, "--mode", "bkc"], 4),
        (vec!["lift", &ex2], 4),
    ];
    for (args, expected) in cases {
        let out = pcalc(&args);
        assert_eq!(code(&out), expected, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        if expected >= 2 && args.len() > 1 {
            let diag: Value = serde_json::from_slice(&out.stderr).expect("diagnostics are JSON");
            assert_eq!(diag["exit_code"], expected);
        }
    }
}
