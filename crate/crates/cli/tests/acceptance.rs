//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the test
//! harness so the lines always print. Failures only change the exit code when
//! `ACCEPTANCE_STRICT` is set.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use causal_audit::adjustment::{all_sufficient_sets, minimal_sufficient_sets, CausalQuery, EffectKind, Verdict};
use causal_audit::discovery::{bic_graph, dag_to_cpdag, ges, shd, sufficient_stats, GesConfig};
use causal_audit::estimator::{fallout_experiment, metrics, metrics_with, NrmseNorm};
use causal_audit::graph::{d_separated, MixedGraph, NodeSet};
use causal_audit::presets::{building_query_spec, building_scm, fallout_arms};
use causal_audit::scm::{sample, scm_graph, ScmSpec, ScmVariable};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn dsep_oracle() -> Outcome {
    let start = Instant::now();
    let (mut checked, mut mismatches) = (0usize, 0usize);
    for g in dag_corpus() {
        let n = g.node_count();
        let table = PathTable::new(&g);
        for code in 0..4usize.pow(n as u32) {
            let (mut xs, mut ys, mut z) = (NodeSet::new(), NodeSet::new(), NodeSet::new());
            let mut c = code;
            for v in 0..n {
                match c % 4 {
                    1 => xs.insert(v),
                    2 => ys.insert(v),
                    3 => z.insert(v),
                    _ => false,
                };
                c /= 4;
            }
            if xs.is_empty() || ys.is_empty() {
                continue;
            }
            let want = xs.iter().all(|&x| ys.iter().all(|&y| table.pair_separated(&g, x, y, &z)));
            if d_separated(&g, &xs, &ys, &z).unwrap() != want {
                mismatches += 1;
            }
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 60.0,
        format!("{checked} triples over 200 DAGs, {mismatches} mismatches, {secs:.1} s (limit 60 s)"),
    )
}

fn adjustment_oracle() -> Outcome {
    let (mut queries, mut bad) = (0usize, 0usize);
    for g in dag_corpus() {
        let table = PathTable::new(&g);
        let n = g.node_count();
        for kind in [EffectKind::Total, EffectKind::Direct] {
            for x in 0..n {
                for y in (0..n).filter(|&y| y != x) {
                    let cands: Vec<usize> = (0..n).filter(|v| *v != x && *v != y).collect();
                    let q = CausalQuery::from_indices(&g, NodeSet::from([x]), y, cands.iter().copied().collect(), kind)
                        .unwrap();
                    let want: Vec<NodeSet> = subsets(&cands)
                        .filter(|z| match kind {
                            EffectKind::Total => oracle_backdoor(&g, &table, x, y, z),
                            EffectKind::Direct => oracle_single_door(&g, &table, x, y, z),
                        })
                        .collect();
                    let mut got: Vec<NodeSet> = all_sufficient_sets(&g, &q).unwrap().into_iter().map(|s| s.members).collect();
                    let mut sorted_want = want.clone();
                    sorted_want.sort();
                    got.sort();
                    let minimal = minimal_sufficient_sets(&g, &q).unwrap();
                    let minimal_ok = minimal.iter().all(|m| {
                        m.minimal
                            && want.contains(&m.members)
                            && !want.iter().any(|w| w.len() < m.members.len() && w.is_subset(&m.members))
                    }) && minimal.len()
                        == want.iter().filter(|w| !want.iter().any(|v| v.len() < w.len() && v.is_subset(w))).count();
                    if got != sorted_want || !minimal_ok {
                        bad += 1;
                    }
                    queries += 1;
                }
            }
        }
    }
    outcome(bad == 0, format!("{queries} queries (total and direct), {bad} disagreements with the powerset oracle"))
}

fn var(name: &str, parents: &[(&str, f64)]) -> ScmVariable {
    ScmVariable {
        name: name.into(),
        parents: parents.iter().map(|(p, _)| p.to_string()).collect(),
        coefficients: parents.iter().map(|(_, c)| *c).collect(),
        intercept: 0.0,
        noise_std: 1.0,
    }
}

fn spec(variables: Vec<ScmVariable>) -> ScmSpec {
    ScmSpec { format_version: 1, variables, ranges: BTreeMap::new() }
}

fn ges_run(s: &ScmSpec, seed: u64) -> (bool, Duration) {
    let data = sample(s, 10_000, seed);
    let start = Instant::now();
    let learned = ges(&data, &GesConfig::default()).unwrap();
    let t = start.elapsed();
    (shd(&learned, &dag_to_cpdag(&scm_graph(s)).unwrap()).unwrap() == 0, t)
}

fn ges_recovery() -> Outcome {
    let chain = spec(vec![var("A", &[]), var("B", &[("A", 1.0)]), var("C", &[("B", 1.0)])]);
    let collider = spec(vec![var("A", &[]), var("B", &[]), var("C", &[("A", 1.0), ("B", 1.0)])]);
    let mut slowest = Duration::ZERO;
    let mut tally = |runs: Vec<(ScmSpec, u64)>| {
        runs.iter()
            .filter(|(s, seed)| {
                let (ok, t) = ges_run(s, *seed);
                slowest = slowest.max(t);
                ok
            })
            .count()
    };
    let c = tally((0..10).map(|s| (chain.clone(), 500 + s)).collect());
    let k = tally((0..10).map(|s| (collider.clone(), 600 + s)).collect());
    let r = tally((0..10).map(|s| (random_scm(s, 5 + (s as usize % 2), 0.4, 0.8, 1.5), 700 + s)).collect());
    outcome(
        c >= 9 && k >= 9 && r >= 9 && slowest < Duration::from_secs(5),
        format!(
            "SHD 0: chain {c}/10, collider {k}/10, random 5-6 node {r}/10; slowest run {:.3} s (limit 5 s)",
            slowest.as_secs_f64()
        ),
    )
}

fn score_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    let mut classes_checked = 0;
    for n in 2..=4 {
        let mut classes: BTreeMap<String, Vec<MixedGraph>> = BTreeMap::new();
        for g in all_dags(n) {
            classes.entry(format!("{:?}", dag_to_cpdag(&g).unwrap().edges())).or_default().push(g);
        }
        for seed in 0..5 {
            let data = sample(&random_scm(100 + seed, n, 0.6, 0.5, 1.5), 500, seed);
            let stats = sufficient_stats(&data);
            for members in classes.values() {
                let first = bic_graph(&stats, &members[0], 1.0).unwrap();
                for g in members {
                    worst = worst.max((bic_graph(&stats, g, 1.0).unwrap() - first).abs());
                }
                classes_checked += 1;
            }
        }
    }
    outcome(worst < 1e-9, format!("{classes_checked} class/dataset pairs on 2-4 nodes, max BIC gap {worst:.2e} (limit 1e-9)"))
}

fn fallout() -> Outcome {
    let start = Instant::now();
    let report = fallout_experiment(&building_scm(), &building_query_spec(), &fallout_arms().arms, 50_000, 7).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let arm = |n: &str| report.arm(n).unwrap();
    let (one, two, val) = (arm("Scenario I"), arm("Scenario II"), arm("Validation"));
    let pass = (two.estimated_effect - 1.0).abs() <= 0.05
        && (one.estimated_effect + 1.0).abs() <= 0.05
        && (val.estimated_effect + 1.0).abs() <= 0.05
        && (one.estimated_effect - report.true_ace).abs() <= 0.05
        && (one.cv_r2 - two.cv_r2).abs() <= 0.15
        && [one.audit_verdict, two.audit_verdict, val.audit_verdict] == [Verdict::Unbiased, Verdict::Biased, Verdict::Unbiased]
        && secs < 30.0;
    outcome(
        pass,
        format!(
            "true {:+.3}; I {:+.4}, II {:+.4}, Validation {:+.4}; cvR2 I {:.3} vs II {:.3}; verdicts {}/{}/{}; {secs:.1} s",
            report.true_ace,
            one.estimated_effect,
            two.estimated_effect,
            val.estimated_effect,
            one.cv_r2,
            two.cv_r2,
            one.audit_verdict.as_str(),
            two.audit_verdict.as_str(),
            val.audit_verdict.as_str(),
        ),
    )
}

fn minimal_set_cli() -> Outcome {
    let building = support::data("building.graph");
    let args: Vec<String> = [
        "adjust", "sets", building.to_str().unwrap(), "--exposure", "InsulationStandard,HeatingSystem", "--outcome",
        "EUIHeating", "--minimal", "--effect-kind", "direct",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let out = support::run_cli(&args);
    let sets: Vec<Vec<String>> = serde_json::from_str::<Value>(&out.stdout)
        .ok()
        .and_then(|v| serde_json::from_value(v["sets"].clone()).ok())
        .unwrap_or_default();
    let target = vec!["ConstructionArea".to_string(), "FloorHeight".into(), "Volume".into()];
    outcome(out.code == 0 && sets.contains(&target), format!("minimal sets {sets:?}"))
}

fn metric_definitions() -> Outcome {
    let mut ok = true;
    let m = metrics(&[100.0, 200.0], &[110.0, 190.0]).unwrap();
    let smape = m.smape;
    ok &= (smape - 0.5 * (20.0 / 210.0 + 20.0 / 390.0)).abs() < 1e-9;
    let y = [3.0, 5.0, 9.0, 11.0];
    let p = metrics(&y, &y).unwrap();
    ok &= p.r2 == 1.0 && p.nrmse == 0.0 && p.smape == 0.0;
    ok &= metrics(&y, &[7.0; 4]).unwrap().r2.abs() < 1e-9;
    let r = metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
    ok &= (r.r2 - 0.5).abs() < 1e-9 && (r.nrmse - (1.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-9;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut cases = 0;
    for _ in 0..2000 {
        let n = rng.gen_range(2..30);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..50.0)).collect();
        let yhat: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..50.0)).collect();
        let alpha = rng.gen_range(0.01..100.0);
        let (Ok(a), Ok(b)) = (metrics(&y, &yhat), metrics(&yhat, &y)) else { continue };
        let scaled = |v: &[f64]| v.iter().map(|x| alpha * x).collect::<Vec<_>>();
        ok &= metrics(&y, &y).map(|m| m.r2 == 1.0).unwrap_or(false);
        ok &= (a.smape - b.smape).abs() < 1e-12 && (0.0..=2.0).contains(&a.smape);
        for norm in [NrmseNorm::Mean, NrmseNorm::Range] {
            let base = metrics_with(&y, &yhat, norm).unwrap().nrmse;
            let s = metrics_with(&scaled(&y), &scaled(&yhat), norm).unwrap().nrmse;
            ok &= (base - s).abs() <= 1e-9 * base.max(1.0);
        }
        cases += 1;
    }
    outcome(ok, format!("SMAPE example {smape:.10}; identities held on {cases} random vector pairs"))
}

fn cli_http_parity() -> Outcome {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let cases = support::cases();
    let mut failing = Vec::new();
    for case in &cases {
        let (cli, http, golden) = rt.block_on(support::run_case(case));
        if cli != http || cli != golden {
            failing.push(case.name);
        }
    }
    outcome(
        failing.is_empty() && cases.len() >= 10,
        format!("{} golden inputs, identical canonical JSON on both surfaces; mismatches {failing:?}", cases.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("d-separation oracle equivalence", dsep_oracle),
        ("adjustment-set correctness", adjustment_oracle),
        ("GES recovery", ges_recovery),
        ("score equivalence", score_equivalence),
        ("fallout reproduction", fallout),
        ("minimal set {ConstructionArea, FloorHeight, Volume}", minimal_set_cli),
        ("metric definitions", metric_definitions),
        ("CLI/HTTP parity", cli_http_parity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let r = check();
        println!("{} {name}: {}", if r.pass { "PASS" } else { "FAIL" }, r.detail);
        failed += usize::from(!r.pass);
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
