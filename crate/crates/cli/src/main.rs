mod bundle;
mod suite;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use elusive_core::constructions::{self, ConstructedGroup, MersenneFpBundle};
use elusive_core::degrees::{density_report, generate_catalog};
use elusive_core::polycirculant::{witness_for, WITNESS_BUDGET};
use elusive_core::presentation::DEFAULT_MAX_COSETS;
use elusive_core::verify::{certify, certify_mersenne_extension, ElusivenessCertificate, VerifyOptions, SCAN_CAP};
use serde::Serialize;

use bundle::Bundle;

#[derive(Parser, Debug)]
#[command(name = "elusive", version, about = "Build, certify and catalog elusive permutation groups")]
struct Cli {
    /// Coset enumeration limit.
    #[arg(long, global = true, env = "ELUSIVE_MAX_COSETS", default_value_t = DEFAULT_MAX_COSETS as u64,
          value_parser = clap::value_parser!(u64).range(1..))]
    max_cosets: u64,
    /// Limit on the number of group elements a brute-force scan may visit.
    #[arg(long, global = true, env = "ELUSIVE_MAX_ENUM", default_value_t = SCAN_CAP as u64,
          value_parser = clap::value_parser!(u64).range(1..))]
    max_enum: u64,
    /// Number of choice combinations the witness search may try.
    #[arg(long, global = true, env = "ELUSIVE_BUDGET", default_value_t = WITNESS_BUDGET,
          value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
    /// Worker threads for element scans (default: all cores).
    #[arg(long, global = true, env = "ELUSIVE_WORKERS", value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true, env = "ELUSIVE_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a group and write its bundle as JSON.
    Construct {
        #[arg(value_enum)]
        name: ConstructName,
        /// Prime parameter.
        #[arg(long, env = "ELUSIVE_P")]
        p: Option<u64>,
        /// Exponent for sl2-quotient.
        #[arg(long, env = "ELUSIVE_K")]
        k: Option<u32>,
        /// Point stabilizer for a5-mixed.
        #[arg(long, env = "ELUSIVE_STAB", value_enum)]
        stab: Option<Stab>,
    },
    /// Certify a bundle (or an array of bundles) and compare with its expectation.
    Verify {
        bundle: PathBuf,
        /// Also classify every element of groups above the scan cap.
        #[arg(long, env = "ELUSIVE_BRUTE_FORCE")]
        brute_force: bool,
    },
    /// Build a dissection witness from a subgroup E of a bundle.
    Witness {
        bundle: PathBuf,
        /// Subgroup E to dissect; the bundle's default when absent.
        #[arg(long = "E", env = "ELUSIVE_E", value_enum)]
        e: Option<EChoice>,
    },
    /// List known elusive degrees up to a bound.
    Catalog {
        #[arg(long, env = "ELUSIVE_BOUND", default_value_t = 1000)]
        bound: u64,
        #[arg(long, env = "ELUSIVE_FORMAT", value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run every built-in instance and write a Markdown summary.
    VerifyAll,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConstructName {
    Sl2Quotient,
    A5Mixed,
    MersenneFp,
    SplitControl,
    Reference,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Stab {
    #[value(name = "Y")]
    Y,
    #[value(name = "W")]
    W,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EChoice {
    #[value(name = "bottom")]
    Bottom,
    #[value(name = "U")]
    U,
    #[value(name = "V")]
    V,
}

impl EChoice {
    fn key(self) -> &'static str {
        match self {
            EChoice::Bottom => "bottom",
            EChoice::U => "U",
            EChoice::V => "V",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Exit statuses: expectations met, a verified mismatch, or anything else going wrong.
const EXIT_OK: u8 = 0;
const EXIT_MISMATCH: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w as usize)
            .build_global()
            .context("configuring worker pool")?;
    }
    match &cli.command {
        Command::Construct { name, p, k, stab } => cmd_construct(cli, *name, *p, *k, *stab),
        Command::Verify { bundle, brute_force } => cmd_verify(cli, bundle, *brute_force),
        Command::Witness { bundle, e } => cmd_witness(cli, bundle, *e),
        Command::Catalog { bound, format } => cmd_catalog(cli, *bound, *format),
        Command::VerifyAll => cmd_verify_all(cli),
    }
}

fn verify_options(cli: &Cli, brute_force: bool) -> VerifyOptions {
    VerifyOptions {
        brute_force,
        scan_cap: cli.max_enum as u128,
        max_cosets: cli.max_cosets as usize,
    }
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `body` to `--out` and the summary to stdout, or the body to stdout
/// and the summary to stderr.
fn emit(out: Option<&Path>, body: &str, summary: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
            print!("{summary}");
        }
        None => {
            print!("{body}");
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn require<T>(value: Option<T>, flag: &str, name: &str) -> anyhow::Result<T> {
    value.with_context(|| format!("{name} needs --{flag}"))
}

fn group_summary(g: &ConstructedGroup) -> String {
    let exp = &g.metadata.expectation;
    let elusive = match exp.elusive {
        Some(true) => "elusive".to_string(),
        Some(false) => format!("not elusive at {:?}", exp.non_elusive_primes),
        None => "no claim".to_string(),
    };
    let mut s = format!("{:<14} {}\n", "name", g.name);
    for (k, v) in [
        ("degree", g.degree.to_string()),
        ("formula", g.metadata.degree_formula.clone()),
        ("order", g.order.to_string()),
        ("stabilizer", g.stabilizer_order.to_string()),
        ("N order", g.n_order.to_string()),
        ("E choices", g.e_choices.keys().cloned().collect::<Vec<_>>().join(",")),
        ("expectation", elusive),
        ("hash", g.hash.clone()),
    ] {
        s.push_str(&format!("{k:<14} {v}\n"));
    }
    s
}

fn fp_summary(b: &MersenneFpBundle) -> String {
    let mut s = format!("{:<14} {}\n", "name", b.name);
    for (k, v) in [
        ("p", b.p.to_string()),
        ("degree", b.degree.to_string()),
        ("formula", b.metadata.degree_formula.clone()),
        ("order", b.metadata.claimed_order.to_string()),
        ("extension", b.metadata.extension.clone().unwrap_or_default()),
        ("hash", b.hash.clone()),
    ] {
        s.push_str(&format!("{k:<14} {v}\n"));
    }
    s
}

fn cmd_construct(
    cli: &Cli,
    name: ConstructName,
    p: Option<u64>,
    k: Option<u32>,
    stab: Option<Stab>,
) -> anyhow::Result<u8> {
    let (body, summary) = match name {
        ConstructName::Sl2Quotient => {
            let g = constructions::build_sl2_quotient(require(p, "p", "sl2-quotient")?, require(k, "k", "sl2-quotient")?)?;
            (to_json(&g)?, group_summary(&g))
        }
        ConstructName::A5Mixed => {
            let stab = match require(stab, "stab", "a5-mixed")? {
                Stab::Y => "Y",
                Stab::W => "W",
            };
            let g = constructions::build_a5_mixed_with(stab, cli.max_cosets as usize)?;
            (to_json(&g)?, group_summary(&g))
        }
        ConstructName::MersenneFp => {
            let b = constructions::build_mersenne_fp(require(p, "p", "mersenne-fp")?)?;
            (to_json(&b)?, fp_summary(&b))
        }
        ConstructName::SplitControl => {
            let g = constructions::build_split_control(require(p, "p", "split-control")?)?;
            (to_json(&g)?, group_summary(&g))
        }
        ConstructName::Reference => {
            let gs = constructions::build_reference_groups()?;
            let summary = gs.iter().map(group_summary).collect::<Vec<_>>().join("\n");
            (to_json(&gs)?, summary)
        }
    };
    emit(cli.out.as_deref(), &body, &summary)?;
    Ok(EXIT_OK)
}

fn certify_bundle(b: &Bundle, opts: VerifyOptions) -> anyhow::Result<(ElusivenessCertificate, Option<String>)> {
    let (cert, expectation, extension) = match b {
        Bundle::Group(g) => (certify(g, opts)?, &g.metadata.expectation, None),
        Bundle::Fp(f) => {
            f.verify_hash()?;
            (certify_mersenne_extension(f, opts)?, &f.metadata.expectation, f.metadata.extension.as_deref())
        }
    };
    let mut problems: Vec<String> = cert.expectation_mismatch(expectation).into_iter().collect();
    problems.extend(cert.failed_stages().iter().map(|s| format!("stage {} failed: {}", s.name, s.detail)));
    if extension == Some("non-split") && !cert.stages.iter().any(|s| s.name == "non-split" && s.passed) {
        problems.push("extension was not shown to be non-split".into());
    }
    let problem = (!problems.is_empty()).then(|| problems.join("; "));
    Ok((cert, problem))
}

fn cert_summary(cert: &ElusivenessCertificate, problem: Option<&str>) -> String {
    let verdicts: Vec<String> = cert
        .per_prime
        .iter()
        .map(|v| format!("{}:{}({})", v.prime, serde_json::to_value(v.verdict).unwrap().as_str().unwrap(), v.method))
        .collect();
    let overall = serde_json::to_value(cert.overall).unwrap();
    let mut s = format!(
        "{} degree {} order {}: {} [{}]\n",
        cert.subject,
        cert.degree,
        cert.group_order,
        overall.as_str().unwrap_or_default(),
        verdicts.join(" ")
    );
    match problem {
        None => s.push_str("  expectation met\n"),
        Some(p) => s.push_str(&format!("  MISMATCH: {p}\n")),
    }
    s
}

fn cmd_verify(cli: &Cli, path: &Path, brute_force: bool) -> anyhow::Result<u8> {
    let (bundles, is_array) = bundle::load(path)?;
    let opts = verify_options(cli, brute_force);
    let mut certs = Vec::new();
    let mut summary = String::new();
    let mut code = EXIT_OK;
    for b in &bundles {
        let (cert, problem) = certify_bundle(b, opts)?;
        if problem.is_some() {
            code = EXIT_MISMATCH;
        }
        summary.push_str(&cert_summary(&cert, problem.as_deref()));
        certs.push(cert);
    }
    let body = if is_array { to_json(&certs)? } else { to_json(&certs[0])? };
    emit(cli.out.as_deref(), &body, &summary)?;
    Ok(code)
}

fn cmd_witness(cli: &Cli, path: &Path, e: Option<EChoice>) -> anyhow::Result<u8> {
    let (bundles, _) = bundle::load(path)?;
    let [Bundle::Group(g)] = bundles.as_slice() else {
        bail!("witness needs a single permutation group bundle");
    };
    let report = witness_for(g, e.map(EChoice::key), cli.budget)?;
    let w = &report.witness;
    let summary = format!(
        "{} E={}: sigma of order {} with {} fixed points, {} classes, E-orbitals {}, X-orbitals {}, in X {}\n  {}\n",
        report.subject,
        report.e_choice,
        w.checks.order,
        w.checks.fixed_points,
        w.classes.len(),
        if w.checks.preserves_e_orbitals { "preserved" } else { "broken" },
        if report.preserves_x_orbitals { "preserved" } else { "broken" },
        report.in_x,
        if report.passed() { "witness verified" } else { "witness FAILED" },
    );
    emit(cli.out.as_deref(), &to_json(&report)?, &summary)?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_MISMATCH })
}

#[derive(Serialize)]
struct CatalogRow<'a> {
    value: u64,
    family: String,
    factorization: &'a str,
}

fn cmd_catalog(cli: &Cli, bound: u64, format: Format) -> anyhow::Result<u8> {
    let entries = generate_catalog(bound)?;
    let density = density_report(bound)?;
    let body = match format {
        Format::Json => to_json(&serde_json::json!({ "entries": entries, "density": density }))?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for e in &entries {
                w.serialize(CatalogRow {
                    value: e.value,
                    family: e.provenance.to_string(),
                    factorization: &e.factorization,
                })?;
            }
            if entries.is_empty() {
                w.write_record(["value", "family", "factorization"])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    let fmt_opt = |v: Option<u64>| v.map_or("none".to_string(), |v| v.to_string());
    let summary = format!(
        "{}: {} up to {} (ratio {}); smallest odd {}, smallest twice odd {}\n",
        density.label,
        density.count,
        density.bound,
        density.ratio,
        fmt_opt(density.smallest_odd),
        fmt_opt(density.smallest_twice_odd),
    );
    emit(cli.out.as_deref(), &body, &summary)?;
    Ok(EXIT_OK)
}

fn cmd_verify_all(cli: &Cli) -> anyhow::Result<u8> {
    let outcomes = suite::run_all(verify_options(cli, false), cli.budget);
    let report = suite::markdown(&outcomes);
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let summary = format!("{} checks, {} failed\n", outcomes.len(), failed);
    emit(cli.out.as_deref(), &report, &summary)?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_MISMATCH })
}
