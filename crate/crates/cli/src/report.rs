//! Report construction. Reports are `serde_json::Value`s whose maps are
//! sorted by key, so identical inputs serialize to identical bytes.

use pcalc_core::calculus::{
    codegree_approx, degree_approx, is_bidegree_with, is_codegree_with, is_degree_with, is_injective, is_projective,
};
use pcalc_core::chainhtpy::{homotopy_lift_t1, verify_h0_roundtrip};
use pcalc_core::decompose::{
    an_interval_decompose, bidegree1_interval_decompose, bkc_decompose, block_decompose, cofree_structure,
    free_structure, middle_exact_split, BlockSide, DecompositionReport, Structure, SummandKind,
};
use pcalc_core::exactness::{is_2_middle_exact, is_k_middle_exact, koszul, KoszulWitness};
use pcalc_core::lattice::{cube_from_cover, enumerate_cubes_with, CubeDiagram, CubeMode, CubeOptions, FinitePoset};
use pcalc_core::persmod::PersistenceModule;
use pcalc_core::suites::SuiteReport;
use pcalc_core::{Check, Result};
use serde_json::{json, Map, Value};

use crate::modfile::{matrix_rows, ModuleFile};

/// A JSON report plus the lines of its human-readable summary.
pub struct Output {
    pub json: Value,
    pub summary: Vec<String>,
    /// Set when a property check failed (exit code 1).
    pub failed: bool,
}

fn per_element(f: &PersistenceModule, value: impl Fn(usize) -> Value) -> Value {
    let poset = f.poset();
    Value::Object(poset.elements().map(|x| (poset.label(x).to_string(), value(x))).collect())
}

fn labels(poset: &FinitePoset, xs: &[usize]) -> Value {
    json!(xs.iter().map(|&x| poset.label(x)).collect::<Vec<_>>())
}

fn cube_json(poset: &FinitePoset, cube: &CubeDiagram) -> Value {
    json!({ "top": poset.label(cube.top), "cover": labels(poset, &cube.cover) })
}

fn verdict<W>(check: Result<Check<W>>, witness: impl Fn(&W) -> Value) -> Value {
    match check {
        Ok(Check::Holds) => json!({ "holds": true }),
        Ok(Check::Fails(w)) => json!({ "holds": false, "witness": witness(&w) }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn holds(v: &Value) -> String {
    match (v.get("holds"), v.get("error")) {
        (Some(Value::Bool(b)), _) => b.to_string(),
        (_, Some(e)) => format!("error ({})", e.as_str().unwrap_or("")),
        _ => "?".into(),
    }
}

fn koszul_witness(poset: &FinitePoset, w: &KoszulWitness) -> Value {
    json!({ "cube": cube_json(poset, &w.cube), "homology": homology_json(&w.homology) })
}

fn homology_json(table: &[(i32, usize)]) -> Value {
    Value::Object(table.iter().map(|(i, h)| (i.to_string(), json!(h))).collect())
}

pub fn analyze(f: &PersistenceModule, max_n: usize, opts: &CubeOptions) -> Output {
    let poset = f.poset();
    let prof = poset.profile();
    let lattice = json!({
        "is_lattice": prof.is_lattice,
        "is_distributive": prof.is_distributive,
        "bottom": prof.bottom.map(|x| poset.label(x)),
        "top": prof.top.map(|x| poset.label(x)),
        "join_irreducibles": labels(poset, &prof.join_irreducibles),
        "meet_irreducibles": labels(poset, &prof.meet_irreducibles),
        "max_jdim": prof.max_jdim(),
        "max_mdim": prof.max_mdim(),
    });
    let cube = |c: &CubeDiagram| cube_json(poset, c);
    let mut codegree = Map::new();
    let mut degree = Map::new();
    for n in 1..=max_n.max(1) {
        codegree.insert(n.to_string(), verdict(is_codegree_with(f, n, opts), cube));
        degree.insert(n.to_string(), verdict(is_degree_with(f, n, opts), cube));
    }
    let bidegree = verdict(is_bidegree_with(f, 1, opts), cube);
    let top_k = prof.max_jdim().unwrap_or(1) + 1;
    let mut middle = Map::new();
    for k in 2..=top_k.max(2) {
        middle.insert(
            k.to_string(),
            verdict(is_k_middle_exact(f, k, CubeMode::Full, opts), |w| koszul_witness(poset, w)),
        );
    }
    let square = verdict(is_2_middle_exact(f), |&(x, y)| json!([poset.label(x), poset.label(y)]));
    let element = |x: &usize| json!(poset.label(*x));
    let projective = verdict(is_projective(f), element);
    let injective = verdict(is_injective(f), element);

    let mut summary = vec![format!(
        "poset: {} elements, {} covers, lattice={}, distributive={}",
        poset.len(),
        poset.covers().len(),
        prof.is_lattice,
        prof.is_distributive
    )];
    for (n, v) in &codegree {
        summary.push(format!("codegree {n}: {}", holds(v)));
    }
    for (n, v) in &degree {
        summary.push(format!("degree {n}: {}", holds(v)));
    }
    summary.push(format!("bidegree 1: {}", holds(&bidegree)));
    summary.push(format!("2-middle-exact (squares): {}", holds(&square)));
    for (k, v) in &middle {
        summary.push(format!("{k}-middle-exact: {}", holds(v)));
    }
    summary.push(format!("projective: {}", holds(&projective)));
    summary.push(format!("injective: {}", holds(&injective)));

    let json = json!({
        "command": "analyze",
        "field": { "prime": f.prime() },
        "poset": poset_json(poset),
        "lattice": lattice,
        "dims": per_element(f, |x| json!(f.dim(x))),
        "codegree": codegree,
        "degree": degree,
        "bidegree": { "1": bidegree },
        "middle_exact": middle,
        "middle_exact_squares": square,
        "projective": projective,
        "injective": injective,
    });
    Output { json, summary, failed: false }
}

fn poset_json(poset: &FinitePoset) -> Value {
    json!({
        "kind": if poset.is_grid() { "grid" } else { "explicit" },
        "shape": poset.shape(),
        "elements": poset.len(),
        "covers": poset.covers().len(),
    })
}

pub enum ApproxKind {
    Codegree(usize),
    Degree(usize),
}

pub fn approx(f: &PersistenceModule, kind: &ApproxKind) -> Result<(Output, ModuleFile)> {
    let (result, name, n) = match *kind {
        ApproxKind::Codegree(n) => (codegree_approx(f, n)?, "codegree", n),
        ApproxKind::Degree(n) => (degree_approx(f, n)?, "degree", n),
    };
    let module = ModuleFile::from_module(&result.approx);
    let map_name = if name == "codegree" { "counit" } else { "unit" };
    let json = json!({
        "command": "approx",
        "side": name,
        "n": n,
        "dims": per_element(&result.approx, |x| json!(result.approx.dim(x))),
        "module": serde_json::to_value(&module).expect("module file serializes"),
        map_name: per_element(f, |x| json!(matrix_rows(result.map.component(x)))),
    });
    let total: usize = result.approx.dims().iter().sum();
    let summary = vec![
        format!("{} approximation, n = {n}: total dimension {total} (input {})", name, f.total_dim()),
        format!("{map_name} invertible: {}", result.map.is_iso()),
    ];
    Ok((Output { json, summary, failed: false }, module))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecomposeMode {
    Blocks,
    Intervals,
    Bkc,
    Bidegree1,
    Split,
    Free,
    Cofree,
}

fn summand_json(f: &PersistenceModule, s: &pcalc_core::decompose::Summand) -> Value {
    let poset = f.poset();
    let (kind, elements) = match &s.kind {
        SummandKind::Interval(es) => ("interval", Some(labels(poset, es))),
        SummandKind::Block(b) => (b.kind.name(), Some(labels(poset, &b.elements(poset)))),
        SummandKind::Generator(a) => ("generator", Some(json!(poset.label(*a)))),
        SummandKind::Cogenerator(a) => ("cogenerator", Some(json!(poset.label(*a)))),
        SummandKind::Opaque => ("module", None),
    };
    let mut obj = json!({
        "label": s.label,
        "kind": kind,
        "dims": per_element(&s.module, |x| json!(s.module.dim(x))),
    });
    if let Some(es) = elements {
        obj["elements"] = es;
    }
    obj
}

fn report_json(f: &PersistenceModule, mode: &str, r: &DecompositionReport) -> (Value, Vec<String>) {
    let summands: Vec<Value> = r.summands.iter().map(|s| summand_json(f, s)).collect();
    let mut summary = vec![format!("{mode}: {} summands, isomorphism verified", r.summands.len())];
    summary.extend(r.summands.iter().map(|s| format!("  {}", s.label)));
    (json!({ "command": "decompose", "mode": mode, "iso_verified": true, "summands": summands }), summary)
}

pub fn decompose(f: &PersistenceModule, mode: DecomposeMode, side: BlockSide) -> Result<Output> {
    let (json, summary) = match mode {
        DecomposeMode::Blocks => {
            let (json, mut summary) = report_json(f, "blocks", &block_decompose(f, side)?);
            summary[0] =
                format!("{} ({} side)", summary[0], if side == BlockSide::Codegree { "codegree" } else { "degree" });
            (json, summary)
        }
        DecomposeMode::Intervals => report_json(f, "intervals", &an_interval_decompose(f)?),
        DecomposeMode::Bkc => report_json(f, "bkc", &bkc_decompose(f)?),
        DecomposeMode::Bidegree1 => report_json(f, "bidegree1", &bidegree1_interval_decompose(f)?),
        DecomposeMode::Split => {
            let s = middle_exact_split(f)?;
            let (mut json, summary) = report_json(f, "split", &s.report);
            json["degrees_verified"] = json!({ "codegree_part": "codegree 1", "degree_part": "degree 1" });
            (json, summary)
        }
        DecomposeMode::Free | DecomposeMode::Cofree => {
            let free = mode == DecomposeMode::Free;
            let name = if free { "free" } else { "cofree" };
            match if free { free_structure(f)? } else { cofree_structure(f)? } {
                Structure::NotFound => (
                    json!({ "command": "decompose", "mode": name, "found": false }),
                    vec![format!("{name}: the module is not {name}")],
                ),
                Structure::Found { multiplicities, report } => {
                    let (mut json, summary) = report_json(f, name, &report);
                    json["found"] = json!(true);
                    json["multiplicities"] = Value::Object(
                        multiplicities.iter().map(|&(a, m)| (f.poset().label(a).to_string(), json!(m))).collect(),
                    );
                    (json, summary)
                }
            }
        }
    };
    Ok(Output { json, summary, failed: false })
}

pub fn koszul_report(
    f: &PersistenceModule,
    k: usize,
    cube: Option<(usize, Vec<usize>)>,
    opts: &CubeOptions,
) -> Result<Output> {
    let poset = f.poset();
    let cubes = match cube {
        Some((top, cover)) => vec![cube_from_cover(poset, top, &cover)?],
        None => enumerate_cubes_with(poset, k, CubeMode::Full, opts)?,
    };
    let mut failing = 0;
    let entries: Vec<Value> = cubes
        .iter()
        .map(|c| {
            let kc = koszul(f, c);
            let table = kc.homology_table();
            let internal_zero = table.iter().all(|&(i, h)| i == 0 || i == c.k as i32 || h == 0);
            if !internal_zero {
                failing += 1;
            }
            json!({
                "cube": cube_json(poset, c),
                "dims": (0..=c.k as i32).map(|i| kc.dim(i)).collect::<Vec<_>>(),
                "homology": homology_json(&table),
                "middle_exact": internal_zero,
            })
        })
        .collect();
    let summary = vec![format!("{} cubes, {} with internal homology", cubes.len(), failing)];
    let json = json!({ "command": "koszul", "k": k, "cubes": entries });
    Ok(Output { json, summary, failed: false })
}

pub fn lift(f: &PersistenceModule) -> Result<Output> {
    let lifted = homotopy_lift_t1(f)?;
    let rt = verify_h0_roundtrip(f)?;
    let elements = per_element(f, |x| {
        let c = lifted.object(x);
        json!({
            "dims": { "0": c.dim(0), "1": c.dim(1) },
            "homology": { "0": c.homology(0), "1": c.homology(1) },
        })
    });
    let json = json!({
        "command": "lift",
        "elements": elements,
        "roundtrip": {
            "h0_is_t1": rt.h0_is_t1,
            "h0_is_module": rt.plain_lift_recovers,
            "middle_exact_recovery": rt.recovers_module,
        },
    });
    let summary = vec![
        format!("H0 of the lift = T1 F: {}", rt.h0_is_t1),
        format!("H0 of the lift = F: {}", rt.plain_lift_recovers),
        match rt.recovers_module {
            Some(b) => format!("middle-exact: lift with H0 = F found and verified: {b}"),
            None => "not middle-exact: no lift recovers F".into(),
        },
    ];
    Ok(Output { json, summary, failed: false })
}

pub fn check(reports: &[SuiteReport], seed: u64, trials: usize) -> Output {
    let mut failed = false;
    let mut summary = Vec::new();
    let suites: Map<String, Value> = reports
        .iter()
        .map(|r| {
            let props: Map<String, Value> = r
                .properties
                .iter()
                .map(|p| {
                    failed |= !p.ok();
                    summary.push(format!(
                        "{:<10} {:<42} {} passed {:>4} failed {:>3} skipped {:>4}  ({:.2}s)",
                        r.suite.name(),
                        p.name,
                        if p.ok() { "ok  " } else { "FAIL" },
                        p.passed,
                        p.failed,
                        p.skipped,
                        p.elapsed.as_secs_f64()
                    ));
                    if let Some(w) = &p.first_failure {
                        summary.push(format!("           first failure: {w}"));
                    }
                    (
                        p.name.to_string(),
                        json!({ "passed": p.passed, "failed": p.failed, "skipped": p.skipped, "first_failure": p.first_failure }),
                    )
                })
                .collect();
            (r.suite.name().to_string(), Value::Object(props))
        })
        .collect();
    let json = json!({ "command": "check", "seed": seed, "trials": trials, "suites": suites, "ok": !failed });
    Output { json, summary, failed }
}
