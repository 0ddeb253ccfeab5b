//! One line per acceptance criterion; exits nonzero if any fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context};
use elusive_core::catalog::{entries, is_mersenne_prime, parse_words};
use elusive_core::constructions::{
    a5_on_15, build_a5_mixed, build_mersenne_fp, build_sl2_quotient, build_split_control, m11_on_12,
    psl2_dihedral,
};
use elusive_core::degrees::generate_catalog;
use elusive_core::linear::a5_u_coverage;
use elusive_core::polycirculant::{witness_for, WITNESS_BUDGET};
use elusive_core::presentation::{coset_enumerate, DEFAULT_MAX_COSETS};
use elusive_core::verify::{
    certify, certify_mersenne_extension, replay_witness, sylow_correspondence, ElusivenessCertificate, Verdict,
    VerifyOptions,
};
use elusive_core::{PermGroup, Permutation};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use serde_json::Value;

type Criterion = fn() -> anyhow::Result<String>;

fn elusive(args: &[&str]) -> anyhow::Result<std::process::Output> {
    Ok(Command::new(env!("CARGO_BIN_EXE_elusive")).args(args).output()?)
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stage_ok(cert: &ElusivenessCertificate, name: &str) -> anyhow::Result<String> {
    let s = cert.stages.iter().find(|s| s.name == name).with_context(|| format!("no stage {name}"))?;
    ensure!(s.passed, "stage {name} failed: {}", s.detail);
    Ok(s.detail.clone())
}

fn sl2_7_2() -> anyhow::Result<String> {
    let dir = tempfile::tempdir()?;
    let bundle = dir.path().join("g.json");
    let cert = dir.path().join("c.json");
    let out = elusive(&["construct", "sl2-quotient", "--p", "7", "--k", "2", "--out", arg(&bundle)])?;
    ensure!(out.status.success(), "construct exited {:?}", out.status.code());
    let g: Value = serde_json::from_str(&fs::read_to_string(&bundle)?)?;
    ensure!(g["degree"] == 196 && g["order"] == 57624, "degree {} order {}", g["degree"], g["order"]);
    let out = elusive(&["verify", arg(&bundle), "--workers", "1", "--out", arg(&cert)])?;
    ensure!(out.status.code() == Some(0), "verify exited {:?}", out.status.code());
    let c: ElusivenessCertificate = serde_json::from_str(&fs::read_to_string(&cert)?)?;
    ensure!(c.overall == Verdict::Elusive, "overall {:?}", c.overall);
    ensure!(
        c.per_prime.iter().all(|v| v.method == "brute-force+structured" && v.verdict == Verdict::Elusive),
        "methods {:?}",
        c.per_prime.iter().map(|v| &v.method).collect::<Vec<_>>()
    );
    let scan = stage_ok(&c, "scan")?;
    ensure!(scan.starts_with("57624 elements"), "scan covered {scan}");
    Ok("degree 196, order 57624, scan and structure agree".into())
}

fn sl2_7_3() -> anyhow::Result<String> {
    let g = build_sl2_quotient(7, 3)?;
    ensure!(g.degree == 67228, "degree {}", g.degree);
    let c = certify(&g, VerifyOptions::default())?;
    let n = stage_ok(&c, "order-p-elements")?;
    stage_ok(&c, "conjugation-into-stabilizer")?;
    ensure!(c.failed_stages().is_empty(), "failed stages");
    ensure!(c.overall == Verdict::Elusive, "overall {:?}", c.overall);
    Ok(format!("degree 67228; {n}"))
}

fn mersenne_7() -> anyhow::Result<String> {
    let b = build_mersenne_fp(7)?;
    let c = certify_mersenne_extension(&b, VerifyOptions::default())?;
    let q = stage_ok(&c, "quotient-order")?;
    ensure!(q.contains("has 168 elements"), "{q}");
    let s = stage_ok(&c, "sylow-scan")?;
    ensure!(s.starts_with("2401 elements") && s.ends_with(" 0 outside"), "{s}");
    let f = stage_ok(&c, "form-preservation")?;
    ensure!(f.contains("all 343 vectors"), "{f}");
    stage_ok(&c, "non-split")?;
    ensure!(c.failed_stages().is_empty() && c.overall == Verdict::Elusive, "overall {:?}", c.overall);
    let d = psl2_dihedral(7)?;
    ensure!(d.degree == 28, "degree {}", d.degree);
    let dc = certify(&d, VerifyOptions::default())?;
    for (r, want) in [(2, Verdict::Elusive), (3, Verdict::Elusive), (7, Verdict::NotElusive)] {
        let v = dc.per_prime.iter().find(|v| v.prime == r).with_context(|| format!("no verdict at {r}"))?;
        ensure!(v.verdict == want && v.method == "brute-force", "PSL2(7) on 28 points at {r}: {v:?}");
    }
    Ok("|G| = 168, |W| = 2401, Q preserved, elusive and non-split".into())
}

fn correspondence() -> anyhow::Result<String> {
    for p in [3, 7] {
        let r = sylow_correspondence(p, DEFAULT_MAX_COSETS)?;
        ensure!(r.forward && r.backward && r.round_trip, "p = {p}: {r:?}");
        ensure!(r.order_asc == p.pow(4) && r.order_xyz == p.pow(4), "p = {p}: {r:?}");
    }
    Ok("relators hold both ways at p = 3, 7; orders 81 and 2401".into())
}

fn a5_mixed() -> anyhow::Result<String> {
    for (stab, degree) in [("Y", 225), ("W", 450)] {
        let g = build_a5_mixed(stab)?;
        ensure!(g.degree == degree && g.order == 607_500, "{stab}: degree {} order {}", g.degree, g.order);
        let c = certify(&g, VerifyOptions::default())?;
        ensure!(
            c.per_prime.iter().all(|v| v.verdict == Verdict::Elusive && v.method.contains("brute-force")),
            "{stab}: {:?}",
            c.per_prime
        );
        stage_ok(&c, "order-3-5-in-N")?;
        let scan = stage_ok(&c, "scan")?;
        ensure!(scan.starts_with("607500 elements"), "{stab}: {scan}");
    }
    Ok("225 and 450 cosets, order 607500, elusive, order 3/5 elements in N".into())
}

fn coverage() -> anyhow::Result<String> {
    let r = a5_u_coverage()?;
    let large = ["1,3,5", "1,4,6", "2,3,6", "2,4,5"];
    let (mut pairs, mut triples, mut quads) = (0, 0, 0);
    for (key, &order) in &r.intersections {
        let want = match key.split(',').count() {
            2 => {
                pairs += 1;
                9
            }
            3 => {
                triples += 1;
                if large.contains(&key.as_str()) {
                    9
                } else {
                    3
                }
            }
            4 => {
                quads += 1;
                3
            }
            _ => continue,
        };
        ensure!(order == want, "|U_{{{key}}}| = {order}, want {want}");
    }
    ensure!((pairs, triples, quads) == (15, 20, 15), "counted {pairs} pairs, {triples} triples, {quads} quadruples");
    ensure!(r.union_order == 81 && r.inclusion_exclusion == 81, "union {}", r.union_order);
    Ok("pairs 9, triples 9/3, quadruples 3, union 81".into())
}

fn reference() -> anyhow::Result<String> {
    let a = a5_on_15()?;
    let ac = certify(&a, VerifyOptions::default())?;
    ensure!(
        ac.verdict_for(2) == Some(Verdict::Elusive)
            && ac.verdict_for(3) == Some(Verdict::NotElusive)
            && ac.verdict_for(5) == Some(Verdict::NotElusive),
        "A5 on 15: {:?}",
        ac.per_prime
    );
    let m = m11_on_12()?;
    ensure!(m.degree == 12 && m.order == 7920, "M11 degree {} order {}", m.degree, m.order);
    let mc = certify(&m, VerifyOptions::default())?;
    ensure!(mc.overall == Verdict::Elusive, "M11 overall {:?}", mc.overall);
    ensure!(mc.derangement_orders.iter().all(|o| [4, 8].contains(o)), "M11 {:?}", mc.derangement_orders);
    Ok(format!("A5 on 15 only 2-elusive; M11 derangement orders {:?}", mc.derangement_orders))
}

fn controls() -> anyhow::Result<String> {
    let s = build_split_control(7)?;
    ensure!(s.degree == 196, "degree {}", s.degree);
    let sc = certify(&s, VerifyOptions::default())?;
    let v = sc.per_prime.iter().find(|v| v.prime == 7).context("no verdict at 7")?;
    let x = s.build_group()?;
    let w = v.witness.as_ref().context("no witness")?;
    ensure!(v.verdict == Verdict::NotElusive, "split control at 7: {:?}", v.verdict);
    ensure!(replay_witness(&x, v) && w.order() == 7 && w.is_derangement() && x.contains(w), "witness does not replay");
    let q = build_sl2_quotient(5, 2)?;
    let qc = certify(&q, VerifyOptions::default())?;
    ensure!(qc.verdict_for(3) == Some(Verdict::NotElusive), "p = 5 at 3: {:?}", qc.verdict_for(3));
    Ok("split control has an order 7 derangement; p = 5 quotient has an order 3 one".into())
}

fn witnesses() -> anyhow::Result<String> {
    let g196 = build_sl2_quotient(7, 2)?;
    let g225 = build_a5_mixed("Y")?;
    let mut parts = Vec::new();
    for (g, e, prime) in [(&g196, "bottom", 7u64), (&g225, "U", 3), (&g225, "V", 5)] {
        let start = Instant::now();
        let r = witness_for(g, Some(e), WITNESS_BUDGET)?;
        let w = &r.witness;
        ensure!(r.conditions.holds(), "degree {} E={e}: conditions {:?}", g.degree, r.conditions.failures);
        ensure!(w.prime == prime && w.checks.order == prime && w.sigma.order() == prime, "E={e}: prime {}", w.prime);
        ensure!(w.sigma.is_derangement() && w.checks.fixed_points == 0, "E={e}: sigma has fixed points");
        ensure!(w.checks.preserves_e_orbitals && r.preserves_x_orbitals, "E={e}: orbitals not preserved");
        ensure!(!r.in_x, "E={e}: sigma lies in X");
        ensure!(start.elapsed() <= Duration::from_secs(120), "E={e}: took {:?}", start.elapsed());
        parts.push(format!("{}/{e}: order {prime}", g.degree));
    }
    Ok(parts.join(", "))
}

fn catalog() -> anyhow::Result<String> {
    let cat = generate_catalog(500)?;
    let values: Vec<u64> = cat.iter().map(|e| e.value).collect();
    for v in [12, 196, 225, 450] {
        ensure!(values.contains(&v), "{v} missing");
    }
    for e in cat.iter().filter(|e| e.provenance.is_classical()) {
        ensure!(e.value % 4 == 0, "{} not divisible by 4", e.value);
        ensure!(
            (2..=e.value).any(|q| e.value % q == 0 && is_mersenne_prime(q)),
            "{} has no Mersenne prime factor",
            e.value
        );
    }
    let e225 = cat.iter().find(|e| e.value == 225).context("225 missing")?;
    ensure!(e225.value % 2 == 1 && !e225.provenance.is_classical(), "225 misfiled as {}", e225.provenance);
    let a = elusive(&["catalog", "--bound", "500"])?;
    let b = elusive(&["catalog", "--bound", "500"])?;
    ensure!(a.status.success() && a.stdout == b.stdout, "catalog runs differ");
    Ok(format!("{} entries up to 500, runs byte-identical", cat.len()))
}

fn perm(n: usize) -> impl Strategy<Value = Permutation> {
    Just((0..n as u32).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|v| Permutation::from_images(v).unwrap())
}

fn properties() -> anyhow::Result<String> {
    let config = || Config {
        cases: 256,
        failure_persistence: None,
        ..Config::default()
    };
    let triples = (1usize..=10).prop_flat_map(|n| prop::collection::vec(perm(n), 3));
    TestRunner::new(config())
        .run(&triples, |v| {
            let (a, b, c) = (&v[0], &v[1], &v[2]);
            prop_assert_eq!(a.mul(b).mul(c), a.mul(&b.mul(c)));
            prop_assert!(a.mul(&a.inverse()).is_identity());
            prop_assert_eq!(a.conjugate(b).order(), a.order());
            Ok(())
        })
        .map_err(|e| anyhow::anyhow!("permutation laws: {e}"))?;
    let pairs = (1usize..=8).prop_flat_map(|n| prop::collection::vec(perm(n), 2));
    TestRunner::new(config())
        .run(&pairs, |v| {
            let g = PermGroup::new(&v).unwrap();
            prop_assert_eq!(g.order(), g.elements(100_000).unwrap().count() as u128);
            Ok(())
        })
        .map_err(|e| anyhow::anyhow!("random groups: {e}"))?;
    for c in [psl2_dihedral(7)?, a5_on_15()?, m11_on_12()?, build_sl2_quotient(7, 2)?] {
        let g = c.build_group()?;
        ensure!(g.order() == g.elements(100_000)?.count() as u128, "{}: BSGS order differs", c.name);
    }
    let mut cases = Vec::new();
    for e in entries(7)? {
        let words = e.subgroups.values().next().cloned().unwrap_or_default();
        let sub = parse_words(&e.presentation, &words)?;
        let n = coset_enumerate(&e.presentation, &sub, DEFAULT_MAX_COSETS)?.count();
        cases.push((e.name, e.presentation, sub, n));
    }
    let sizes: Vec<usize> = cases.iter().map(|c| c.1.relators().len()).collect();
    let orders = (0..cases.len())
        .prop_flat_map(move |i| (Just(i), Just((0..sizes[i]).collect::<Vec<_>>()).prop_shuffle()));
    TestRunner::new(Config { cases: 32, ..config() })
        .run(&orders, |(i, order)| {
            let (name, pres, sub, n) = &cases[i];
            let m = coset_enumerate(&pres.with_relator_order(&order), sub, DEFAULT_MAX_COSETS).unwrap().count();
            prop_assert_eq!(m, *n, "{}", name);
            Ok(())
        })
        .map_err(|e| anyhow::anyhow!("relator order: {e}"))?;
    Ok(format!("permutation laws, BSGS orders, coset counts over {} presentations", cases.len()))
}

const CRITERIA: [(&str, u64, Criterion); 11] = [
    ("sl2-quotient (7,2): degree 196, scan and structure agree", 30, sl2_7_2),
    ("sl2-quotient (7,3): degree 67228, structured certificate", 300, sl2_7_3),
    ("mersenne-fp p=7: quotient, Sylow scan, form, non-split", 60, mersenne_7),
    ("two presentations of the order p^4 group agree at p = 3, 7", 60, correspondence),
    ("a5-mixed Y and W: 225 and 450 points, elusive", 180, a5_mixed),
    ("A5 coverage arithmetic of M in U", 60, coverage),
    ("reference groups A5 on 15 and M11 on 12", 5, reference),
    ("negative controls", 60, controls),
    ("dissection witnesses of orders 7, 3, 5", 360, witnesses),
    ("degree catalog up to 500", 60, catalog),
    ("property suites", 300, properties),
];

fn main() -> ExitCode {
    let mut failed = 0;
    for (i, (name, limit, run)) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let result = run().and_then(|detail| {
            let t = start.elapsed();
            if t > Duration::from_secs(*limit) {
                bail!("took {:.1}s, limit {limit}s", t.as_secs_f64());
            }
            Ok(detail)
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2}: PASS  {name} ({secs:.1}s): {detail}", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name} ({secs:.1}s): {e:#}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {} failed", CRITERIA.len() - failed, failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
