use anyhow::ensure;
use elusive_core::constructions::{
    a5_on_15, build_a5_mixed_with, build_mersenne_fp, build_sl2_quotient, build_split_control, m11_on_12,
    psl2_dihedral, ConstructedGroup,
};
use elusive_core::degrees::generate_catalog;
use elusive_core::linear::a5_u_coverage;
use elusive_core::polycirculant::witness_for;
use elusive_core::verify::{
    certify, certify_mersenne_extension, replay_witness, sylow_correspondence, ElusivenessCertificate, Verdict,
    VerifyOptions,
};

pub struct Outcome {
    pub instance: String,
    pub claim: String,
    pub passed: bool,
    pub detail: String,
}

type Check = fn(VerifyOptions, u64) -> anyhow::Result<String>;

const CHECKS: [(&str, &str, Check); 10] = [
    ("sl2-quotient p=7 k=2", "degree 196, order 57624, elusive by scan and by structure", sl2_72),
    ("sl2-quotient p=7 k=3", "degree 67228, elusive by structure", sl2_73),
    ("mersenne-fp p=7", "elusive non-split extension; PSL2(7) on 28 points is 2- and 3-elusive only", mersenne_7),
    ("sylow presentations p=3,7", "the two presentations define isomorphic groups of order p^4", correspondence),
    ("a5-mixed Y and W", "degrees 225 and 450, order 607500, elusive", a5_mixed),
    ("A5 coverage of M in U", "intersection orders as listed and a union of 81 vectors", coverage),
    ("reference groups", "A5 on 15 points only 2-elusive; M11 on 12 points elusive", reference),
    ("negative controls", "split control not 7-elusive; sl2-quotient p=5 not 3-elusive", controls),
    ("dissection witnesses", "order 7, 3, 5 witnesses outside X preserving every orbital", witnesses),
    ("degree catalog", "12, 196, 225, 450 present up to 500; classical entries divisible by 4", catalog),
];

pub fn run_all(opts: VerifyOptions, budget: u64) -> Vec<Outcome> {
    CHECKS
        .iter()
        .map(|(instance, claim, check)| {
            let (passed, detail) = match check(opts, budget) {
                Ok(d) => (true, d),
                Err(e) => (false, format!("{e:#}")),
            };
            Outcome {
                instance: instance.to_string(),
                claim: claim.to_string(),
                passed,
                detail,
            }
        })
        .collect()
}

pub fn markdown(outcomes: &[Outcome]) -> String {
    let mut s = String::from("# Verification summary\n\n| # | Instance | Claim | Result | Detail |\n|---|---|---|---|---|\n");
    for (i, o) in outcomes.iter().enumerate() {
        s.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            i + 1,
            o.instance,
            o.claim,
            if o.passed { "pass" } else { "FAIL" },
            o.detail.replace('|', "\\|")
        ));
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    s.push_str(&format!("\n{} of {} checks passed.\n", outcomes.len() - failed, outcomes.len()));
    s
}

fn clean(cert: &ElusivenessCertificate, g: &ConstructedGroup) -> anyhow::Result<()> {
    let failed: Vec<&str> = cert.failed_stages().iter().map(|s| s.name.as_str()).collect();
    ensure!(failed.is_empty(), "failed stages: {}", failed.join(", "));
    if let Some(m) = cert.expectation_mismatch(&g.metadata.expectation) {
        anyhow::bail!("{m}");
    }
    Ok(())
}

fn sl2_72(opts: VerifyOptions, _: u64) -> anyhow::Result<String> {
    let g = build_sl2_quotient(7, 2)?;
    ensure!(g.degree == 196 && g.order == 57624, "degree {} order {}", g.degree, g.order);
    let cert = certify(&g, VerifyOptions { brute_force: true, ..opts })?;
    clean(&cert, &g)?;
    ensure!(cert.overall == Verdict::Elusive, "overall {:?}", cert.overall);
    ensure!(
        cert.per_prime.iter().all(|v| v.method == "brute-force+structured"),
        "scan and structure did not both run"
    );
    Ok("both methods agree on every prime".into())
}

fn sl2_73(opts: VerifyOptions, _: u64) -> anyhow::Result<String> {
    let g = build_sl2_quotient(7, 3)?;
    ensure!(g.degree == 67228, "degree {}", g.degree);
    let cert = certify(&g, opts)?;
    clean(&cert, &g)?;
    ensure!(cert.overall == Verdict::Elusive, "overall {:?}", cert.overall);
    Ok(format!("{} stages passed", cert.stages.len()))
}

fn mersenne_7(opts: VerifyOptions, _: u64) -> anyhow::Result<String> {
    let b = build_mersenne_fp(7)?;
    let cert = certify_mersenne_extension(&b, opts)?;
    let failed: Vec<&str> = cert.failed_stages().iter().map(|s| s.name.as_str()).collect();
    ensure!(failed.is_empty(), "failed stages: {}", failed.join(", "));
    ensure!(cert.overall == Verdict::Elusive, "overall {:?}", cert.overall);
    ensure!(cert.stages.iter().any(|s| s.name == "non-split" && s.passed), "non-split stage missing");
    let d = psl2_dihedral(7)?;
    let dc = certify(&d, opts)?;
    ensure!(d.degree == 28, "dihedral quotient degree {}", d.degree);
    ensure!(
        dc.verdict_for(2) == Some(Verdict::Elusive)
            && dc.verdict_for(3) == Some(Verdict::Elusive)
            && dc.verdict_for(7) == Some(Verdict::NotElusive),
        "PSL2(7) on 28 points verdicts {:?}",
        dc.per_prime.iter().map(|v| (v.prime, v.verdict)).collect::<Vec<_>>()
    );
    Ok(format!("{} stages passed", cert.stages.len()))
}

fn correspondence(opts: VerifyOptions, _: u64) -> anyhow::Result<String> {
    for p in [3, 7] {
        let r = sylow_correspondence(p, opts.max_cosets)?;
        ensure!(r.passed(), "p = {p}: {r:?}");
    }
    Ok("relators hold both ways; orders 81 and 2401".into())
}

fn a5_mixed(opts: VerifyOptions, _: u64) -> anyhow::Result<String> {
    for (stab, degree) in [("Y", 225), ("W", 450)] {
        let g = build_a5_mixed_with(stab, opts.max_cosets)?;
        ensure!(g.degree == degree && g.order == 607_500, "{stab}: degree {} order {}", g.degree, g.order);
        let cert = certify(&g, opts)?;
        clean(&cert, &g)?;
        ensure!(cert.overall == Verdict::Elusive, "{stab}: overall {:?}", cert.overall);
    }
    Ok("both actions elusive".into())
}

fn coverage(_: VerifyOptions, _: u64) -> anyhow::Result<String> {
    let r = a5_u_coverage()?;
    ensure!(r.passed && r.union_order == 81, "{:?}", r.failures);
    Ok(format!("union {}", r.union_order))
}

fn reference(opts: VerifyOptions, _: u64) -> anyhow::Result<String> {
    let a = a5_on_15()?;
    let ac = certify(&a, opts)?;
    clean(&ac, &a)?;
    ensure!(ac.non_elusive_primes() == vec![3, 5], "A5 non-elusive primes {:?}", ac.non_elusive_primes());
    let m = m11_on_12()?;
    let mc = certify(&m, opts)?;
    clean(&mc, &m)?;
    ensure!(mc.overall == Verdict::Elusive, "M11 overall {:?}", mc.overall);
    ensure!(
        mc.derangement_orders.iter().all(|o| [4, 8].contains(o)),
        "M11 derangement orders {:?}",
        mc.derangement_orders
    );
    Ok(format!("M11 derangement orders {:?}", mc.derangement_orders))
}

fn controls(opts: VerifyOptions, _: u64) -> anyhow::Result<String> {
    let s = build_split_control(7)?;
    let sc = certify(&s, opts)?;
    clean(&sc, &s)?;
    let x = s.build_group()?;
    let v = sc.per_prime.iter().find(|v| v.prime == 7).ok_or_else(|| anyhow::anyhow!("no verdict at 7"))?;
    ensure!(v.verdict == Verdict::NotElusive && replay_witness(&x, v), "split control at 7: {v:?}");
    let q = build_sl2_quotient(5, 2)?;
    let qc = certify(&q, opts)?;
    clean(&qc, &q)?;
    ensure!(qc.verdict_for(3) == Some(Verdict::NotElusive), "p = 5 verdict at 3 {:?}", qc.verdict_for(3));
    Ok("derangement witnesses replayed".into())
}

fn witnesses(opts: VerifyOptions, budget: u64) -> anyhow::Result<String> {
    let g196 = build_sl2_quotient(7, 2)?;
    let g225 = build_a5_mixed_with("Y", opts.max_cosets)?;
    let mut parts = Vec::new();
    for (g, e, prime) in [(&g196, "bottom", 7), (&g225, "U", 3), (&g225, "V", 5)] {
        let r = witness_for(g, Some(e), budget)?;
        ensure!(r.passed(), "degree {} E={e}: witness failed", g.degree);
        ensure!(r.witness.prime == prime, "degree {} E={e}: prime {}", g.degree, r.witness.prime);
        parts.push(format!("{}/{e}/{prime}", g.degree));
    }
    Ok(parts.join(", "))
}

fn catalog(_: VerifyOptions, _: u64) -> anyhow::Result<String> {
    let a = generate_catalog(500)?;
    let b = generate_catalog(500)?;
    ensure!(serde_json::to_string(&a)? == serde_json::to_string(&b)?, "catalog not deterministic");
    for v in [12, 196, 225, 450] {
        ensure!(a.iter().any(|e| e.value == v), "{v} missing");
    }
    ensure!(a.iter().all(|e| !e.provenance.is_classical() || e.value % 4 == 0), "classical entry not divisible by 4");
    Ok(format!("{} entries", a.len()))
}
