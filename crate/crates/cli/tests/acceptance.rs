//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::fs;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use pcalc_core::suites::{
    approximation_properties, bkc_properties, block_roundtrip, exactness_cross_checks, homotopy_properties,
    layer_properties, PropertyResult, SuiteConfig,
};
use serde_json::Value;

const SEED: u64 = 42;
const EXAMPLE_LIMIT: Duration = Duration::from_secs(1);
const SUITE_LIMIT: Duration = Duration::from_secs(60);

fn fixture(name: &str) -> String {
    format!("{}/../../docs/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn pcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcalc")).args(args).output().expect("pcalc runs")
}

/// Runs a command and returns its exit code and JSON report (if written).
fn run_report(args: &[&str], tag: &str) -> (i32, Option<Value>) {
    let path = format!("{}/acceptance-{tag}.json", env!("CARGO_TARGET_TMPDIR"));
    let _ = fs::remove_file(&path);
    let mut full = args.to_vec();
    full.extend(["--json", &path]);
    let out = pcalc(&full);
    let report = fs::read_to_string(&path).ok().map(|t| serde_json::from_str(&t).expect("report is JSON"));
    (out.status.code().unwrap_or(-1), report)
}

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<String, String> {
    let t = start.elapsed();
    ensure(t < limit, format!("took {:.2}s, limit {:.0}s", t.as_secs_f64(), limit.as_secs_f64()))?;
    Ok(format!("{:.2}s", t.as_secs_f64()))
}

fn suite_verdict(results: &[PropertyResult], start: Instant) -> Verdict {
    for r in results {
        ensure(r.failed == 0, format!("{}: {} failures, first: {:?}", r.name, r.failed, r.first_failure))?;
        ensure(r.passed > 0, format!("{}: every trial was skipped", r.name))?;
    }
    let time = within(start, SUITE_LIMIT)?;
    let counts: Vec<String> =
        results.iter().map(|r| format!("{} {}/{}", r.name, r.passed, r.passed + r.skipped)).collect();
    Ok(format!("{}; {time}", counts.join(", ")))
}

fn block_set(summand: &Value) -> (String, Vec<String>) {
    let mut elements: Vec<String> =
        summand["elements"].as_array().unwrap().iter().map(|e| e.as_str().unwrap().to_string()).collect();
    elements.sort();
    (summand["kind"].as_str().unwrap().to_string(), elements)
}

fn rect(xs: std::ops::RangeInclusive<usize>, ys: std::ops::RangeInclusive<usize>) -> Vec<String> {
    let mut out: Vec<String> = xs.flat_map(|x| ys.clone().map(move |y| format!("{x},{y}"))).collect();
    out.sort();
    out
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let ex1 = fixture("ex1.json");
    let (code, r) = run_report(&["analyze", &ex1], "c1-analyze");
    ensure(code == 0, format!("analyze exited {code}"))?;
    ensure(r.unwrap()["codegree"]["1"]["holds"] == true, "codegree 1 is not reported true")?;
    let (code, r) = run_report(&["decompose", &ex1, "--mode", "blocks"], "c1-blocks");
    ensure(code == 0, format!("decompose exited {code}"))?;
    let r = r.unwrap();
    ensure(r["iso_verified"] == true, "isomorphism not verified")?;
    let mut got: Vec<(String, Vec<String>)> = r["summands"].as_array().unwrap().iter().map(block_set).collect();
    got.sort();
    let mut want = vec![
        ("vertical".to_string(), rect(1..=2, 0..=2)),
        ("horizontal".to_string(), rect(0..=2, 2..=2)),
        ("death".to_string(), rect(0..=1, 0..=1)),
    ];
    want.sort();
    ensure(got == want, format!("blocks {got:?}"))?;
    Ok(format!("codegree 1, blocks death/vertical/horizontal as expected; {}", within(start, EXAMPLE_LIMIT)?))
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let (code, r) = run_report(&["analyze", &fixture("ex2.json")], "c2");
    ensure(code == 0, format!("analyze exited {code}"))?;
    let r = r.unwrap();
    ensure(r["codegree"]["1"]["holds"] == true, "codegree 1 is not true")?;
    let degree = &r["degree"]["1"];
    ensure(degree["holds"] == false, "degree 1 is not false")?;
    ensure(degree["witness"]["cover"].as_array().map(Vec::len) == Some(2), "degree witness is not a square")?;
    let me3 = &r["middle_exact"]["3"];
    ensure(me3["holds"] == false, "3-middle-exact is not false")?;
    let w = &me3["witness"];
    ensure(w["cube"]["top"] == "1,1,1", format!("3-cube witness {w}"))?;
    ensure(w["homology"]["2"] == 1, format!("Koszul H2 is {}", w["homology"]["2"]))?;
    Ok(format!(
        "codegree 1, degree 1 fails on square {}, Koszul H2 = 1 on the full cube; {}",
        degree["witness"],
        within(start, EXAMPLE_LIMIT)?
    ))
}

fn criterion_3() -> Verdict {
    let ex4 = fixture("ex4.json");
    let (code, r) = run_report(&["analyze", &ex4], "c3");
    ensure(code == 0, format!("analyze exited {code}"))?;
    let r = r.unwrap();
    for k in ["2", "3"] {
        ensure(r["middle_exact"][k]["holds"] == true, format!("{k}-middle-exact is not true"))?;
    }
    for key in ["projective", "injective"] {
        ensure(r[key]["holds"] == false, format!("{key} is not false"))?;
    }
    ensure(r["bidegree"]["1"]["holds"] == false, "bidegree 1 is not false")?;
    let (code, _) = run_report(&["decompose", &ex4, "--mode", "bkc"], "c3-bkc");
    ensure(code == 4, format!("bkc exited {code}, expected 4"))?;
    Ok("2- and 3-middle-exact, not projective/injective/bidegree 1, bkc exits 4".into())
}

fn corpus(trials: usize) -> SuiteConfig {
    SuiteConfig { seed: SEED, trials, max_shape: vec![4, 4, 3], primes: vec![2, 5], inject_fault: false }
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    suite_verdict(&approximation_properties(&corpus(200)), start)
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    suite_verdict(&layer_properties(&corpus(200)), start)
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    suite_verdict(&[block_roundtrip(SEED, 100, &[2, 3, 5])], start)
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    suite_verdict(&bkc_properties(SEED, 50, &[2, 3, 5]), start)
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    suite_verdict(&homotopy_properties(SEED, 100, &[4, 4], &[2, 3, 5]), start)
}

fn criterion_9() -> Verdict {
    let start = Instant::now();
    let cfg =
        SuiteConfig { seed: SEED, trials: 1000, max_shape: vec![4, 4, 3], primes: vec![2, 3, 5], inject_fault: false };
    suite_verdict(&exactness_cross_checks(&cfg), start)
}

fn criterion_10() -> Verdict {
    for name in ["ex1", "ex2", "ex4"] {
        let golden = fs::read(fixture(&format!("golden/{name}.analyze.json"))).map_err(|e| e.to_string())?;
        for run in 0..2 {
            let path = format!("{}/acceptance-golden-{name}-{run}.json", env!("CARGO_TARGET_TMPDIR"));
            let out = pcalc(&["analyze", &fixture(&format!("{name}.json")), "--json", &path]);
            ensure(out.status.success(), format!("{name}: analyze failed"))?;
            ensure(
                fs::read(&path).map_err(|e| e.to_string())? == golden,
                format!("{name} run {run} differs from golden"),
            )?;
        }
    }
    Ok("EX1, EX2, EX4 reports byte-identical to goldens over two runs".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("EX1 codegree 1 and block decomposition", criterion_1),
        ("EX2 verdicts and Koszul witness", criterion_2),
        ("EX4 verdicts and bkc refusal", criterion_3),
        ("approximations have their (co)degree, counits invertible", criterion_4),
        ("layers are homogeneous", criterion_5),
        ("block round trip on 5x5", criterion_6),
        ("B+K+C decomposition and free/cofree recovery", criterion_7),
        ("homotopy lift round trip", criterion_8),
        ("exactness cross-checks", criterion_9),
        ("golden reports are deterministic", criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {:>2}: {name} ({detail})", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL criterion {:>2}: {name} ({why})", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
