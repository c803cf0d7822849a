//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! The large campaign keeps its compile cache under the cargo test tmpdir so
//! repeated invocations only pay for execution. `IDOL_ACCEPTANCE_FRESH=1`
//! wipes it first. Exits non-zero when any criterion fails.

mod support;

use std::path::{Path, PathBuf};
use std::time::Instant;

use idol::campaign::{self, run_campaign, run_dol_baseline, CampaignConfig, CampaignOutcome};
use idol::compile::{config_matrix, Compiler, MatrixOptions};
use idol::corpus::EntryStatus;
use idol::mutate::{apply, discover_sites, TransformKind};
use idol::oracle::{BugReport, Classification};
use idol::syntax;

const UNITS: usize = 500;
const CORPUS_SIZE: usize = 520;
const CORPUS_SEED: u64 = 2026;

struct Board {
    failed: usize,
}

impl Board {
    fn record(&mut self, n: u32, name: &str, result: Result<String, String>) {
        match result {
            Ok(note) => println!("PASS  {n}. {name}: {note}"),
            Err(why) => {
                self.failed += 1;
                println!("FAIL  {n}. {name}: {why}");
            }
        }
    }
}

fn ensure(cond: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(why())
    }
}

fn solc(version: &str) -> Result<PathBuf, String> {
    support::solc(version).ok_or_else(|| format!("solc {version} not installed (scripts/install-solc.sh)"))
}

fn work_dir() -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn fixture_config(corpus: &str, version: &str, out: &Path) -> Result<CampaignConfig, String> {
    Ok(CampaignConfig {
        corpus: support::fixture(corpus),
        solc: vec![solc(version)?],
        seed: 1,
        units: 1,
        budget: 8,
        jobs: 1,
        out: out.to_path_buf(),
        ..CampaignConfig::default()
    })
}

/// Clears everything in `out` but the compile cache.
fn clear_outputs(out: &Path) {
    for name in ["campaign.json", "corpus.index.json", "findings"] {
        let p = out.join(name);
        let _ = std::fs::remove_dir_all(&p);
        let _ = std::fs::remove_file(&p);
    }
}

fn big_config(out: &Path) -> Result<CampaignConfig, String> {
    let corpus = work_dir().join("corpus");
    support::gen::write_corpus(&corpus, CORPUS_SIZE, CORPUS_SEED).map_err(|e| e.to_string())?;
    Ok(CampaignConfig {
        corpus,
        solc: vec![solc("0.8.30")?],
        seed: 7,
        units: UNITS,
        budget: 3,
        out: out.to_path_buf(),
        ..CampaignConfig::default()
    })
}

fn criterion_1(o: &CampaignOutcome) -> Result<String, String> {
    let c = &o.report.counts;
    ensure(c.units_processed >= UNITS, || format!("only {} units processed", c.units_processed))?;
    ensure(c.mutants > 0, || "no mutants produced".into())?;
    ensure(c.equivalence_failed == 0 && c.equivalence_passed == c.mutants, || {
        format!("{} of {} mutants failed the equivalence check", c.equivalence_failed, c.mutants)
    })?;
    Ok(format!("{} units, {} mutants, all equivalent at O0", c.units_processed, c.mutants))
}

fn criterion_2() -> Result<String, String> {
    let solc = solc("0.8.30")?;
    let compiler = Compiler::new(&solc).map_err(|e| e.to_string())?;
    let configs = config_matrix(&solc, &MatrixOptions::default());
    for (input, golden, kind) in [
        ("licm.sol", "licm.golden.sol", TransformKind::ReverseLicm),
        ("loop_inversion.sol", "loop_inversion.golden.sol", TransformKind::ReverseLoopInversion),
    ] {
        let src = support::read_fixture(input);
        let ast = syntax::parse(&src).map_err(|e| e.to_string())?;
        let sites = discover_sites(&ast, &src, kind);
        ensure(sites.len() == 1, || format!("{input}: {} sites", sites.len()))?;
        let (mutant, _) = apply(&src, kind, &sites[0], 0).map_err(|e| e.to_string())?;
        ensure(mutant == support::read_fixture(golden), || format!("{input}: output differs from {golden}"))?;
        for cfg in &configs {
            let res = compiler.compile(&mutant, cfg).map_err(|e| e.to_string())?;
            ensure(res.is_ok(), || format!("{golden} fails under {}", cfg.label()))?;
        }
    }
    Ok(format!("2 goldens byte-exact, compiled under {} configs", configs.len()))
}

fn criterion_3(o: &CampaignOutcome) -> Result<String, String> {
    let b = o.report.count(Classification::Behavioral);
    ensure(b == 0, || format!("{b} behavioral findings on solc 0.8.30"))?;
    Ok(format!(
        "0 behavioral findings over {} units ({} compile divergences)",
        o.report.counts.units_processed,
        o.report.count(Classification::CompileDivergence)
    ))
}

fn criterion_4(reduced: &mut Vec<BugReport>) -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let started = Instant::now();
    let bad = run_campaign(&fixture_config("keccak", "0.8.2", &tmp.path().join("a"))?).map_err(|e| e.to_string())?;
    let bad_secs = started.elapsed().as_secs_f64();
    let good = run_campaign(&fixture_config("keccak", "0.8.3", &tmp.path().join("b"))?).map_err(|e| e.to_string())?;
    let n_bad = bad.report.count(Classification::Behavioral);
    ensure(n_bad == 1 && bad.findings.len() == 1, || format!("{n_bad} behavioral findings on 0.8.2"))?;
    ensure(good.findings.is_empty(), || format!("{} findings on 0.8.3", good.findings.len()))?;
    let pair = bad.findings[0].signature.config_pair.clone();
    ensure(pair.0 == "O0" && pair.1 != "O0", || format!("finding is between {} and {}", pair.0, pair.1))?;
    ensure(bad_secs < 60.0, || format!("campaign took {bad_secs:.1}s"))?;
    reduced.extend(bad.findings);
    Ok(format!("1 finding ({} vs {}) on 0.8.2 in {bad_secs:.1}s, 0 on 0.8.3", pair.0, pair.1))
}

fn criterion_5(reduced: &mut Vec<BugReport>) -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = fixture_config("separation", "0.8.2", tmp.path())?;
    let dol = run_dol_baseline(&cfg).map_err(|e| e.to_string())?;
    let idol = run_campaign(&cfg).map_err(|e| e.to_string())?;
    let (d, i) = (dol.report.count(Classification::Behavioral), idol.report.count(Classification::Behavioral));
    ensure(d == 0, || format!("DOL found {d}"))?;
    ensure(i >= 1, || "IDOL found nothing".into())?;
    reduced.extend(idol.findings.into_iter().filter(|f| f.classification == Classification::Behavioral));
    Ok(format!("DOL {d}, IDOL {i}"))
}

fn criterion_6(first: &CampaignOutcome, cfg: &CampaignConfig) -> Result<String, String> {
    clear_outputs(&cfg.out);
    let second = run_campaign(cfg).map_err(|e| e.to_string())?;
    campaign::write_outputs(&second, &cfg.out).map_err(|e| e.to_string())?;
    ensure(first.report.stable_json() == second.report.stable_json(), || "reports differ after stripping timing".into())?;
    ensure(first.report.signature_ids() == second.report.signature_ids(), || "signature sets differ".into())?;
    let audit: (u64, u64) = second
        .report
        .timing
        .compiler
        .values()
        .fold((0, 0), |(a, m), s| (a + s.audited, m + s.audit_mismatches));
    ensure(audit.1 == 0, || format!("{} cache audit mismatches", audit.1))?;
    Ok(format!(
        "identical reports and {} signatures; {} cached artifacts re-audited, 0 mismatches",
        second.report.signature_ids().len(),
        audit.0
    ))
}

fn criterion_7(o: &CampaignOutcome, corpus: &Path) -> Result<String, String> {
    let mut files: Vec<PathBuf> = o
        .index
        .iter()
        .flat_map(|idx| idx.entries.iter().filter(|e| e.status == EntryStatus::Valid).map(|e| corpus.join(&e.path)))
        .collect();
    let fixtures = idol::corpus::list_sources(&support::fixture("")).map_err(|e| e.to_string())?;
    files.extend(fixtures.into_iter().map(|(_, p)| p));
    for f in &files {
        let src = std::fs::read_to_string(f).map_err(|e| e.to_string())?;
        let ast = syntax::parse(&src).map_err(|e| format!("{}: {e}", f.display()))?;
        let printed = syntax::reprint(&src, &ast).map_err(|e| format!("{}: {e}", f.display()))?;
        ensure(printed == src, || format!("{} does not round-trip", f.display()))?;
    }
    Ok(format!("{} files round-trip byte-exactly", files.len()))
}

fn criterion_8(findings: &[BugReport]) -> Result<String, String> {
    ensure(!findings.is_empty(), || "no behavioral findings to reduce".into())?;
    let mut notes = Vec::new();
    for f in findings {
        let solc = solc("0.8.2")?;
        let compiler = Compiler::new(&solc).map_err(|e| e.to_string())?;
        let min = campaign::reduce(f, &compiler).map_err(|e| format!("{}: {e}", f.id))?;
        let original = f.mutant.unit.source.len();
        ensure(min.len() <= original, || format!("{}: reduced to {} bytes from {original}", f.id, min.len()))?;
        let mut shrunk = f.clone();
        shrunk.mutant.unit.source = min.clone();
        let replay = campaign::replay(&shrunk, &compiler).map_err(|e| e.to_string())?;
        let d = replay.detail.ok_or_else(|| format!("{}: reduced program no longer diverges", f.id))?;
        ensure(
            d.field == f.detail.field && d.left_config == f.detail.left_config && d.right_config == f.detail.right_config,
            || format!("{}: reduced divergence is {:?} {}/{}", f.id, d.field, d.left_config, d.right_config),
        )?;
        notes.push(format!("{original}->{} bytes", min.len()));
    }
    Ok(format!("{} reproducers keep field and config pair ({})", findings.len(), notes.join(", ")))
}

fn main() {
    let mut board = Board { failed: 0 };
    let out = work_dir().join("run");
    if std::env::var_os("IDOL_ACCEPTANCE_FRESH").is_some() {
        let _ = std::fs::remove_dir_all(&out);
    }
    clear_outputs(&out);

    let started = Instant::now();
    let big = big_config(&out).and_then(|cfg| {
        let outcome = run_campaign(&cfg).map_err(|e| e.to_string())?;
        campaign::write_outputs(&outcome, &cfg.out).map_err(|e| e.to_string())?;
        Ok((cfg, outcome))
    });
    let big_secs = started.elapsed().as_secs_f64();
    eprintln!("large campaign took {big_secs:.0}s");

    let mut reducible = Vec::new();
    match &big {
        Ok((_, o)) => board.record(1, "mutants equivalent at O0", criterion_1(o)),
        Err(e) => board.record(1, "mutants equivalent at O0", Err(e.clone())),
    }
    board.record(2, "goldens match and compile", criterion_2());
    match &big {
        Ok((_, o)) => board.record(3, "no false positives on 0.8.30", criterion_3(o)),
        Err(e) => board.record(3, "no false positives on 0.8.30", Err(e.clone())),
    }
    board.record(4, "keccak witness", criterion_4(&mut reducible));
    board.record(5, "mutation separates from plain differential", criterion_5(&mut reducible));
    match &big {
        Ok((cfg, o)) => board.record(6, "determinism", criterion_6(o, cfg)),
        Err(e) => board.record(6, "determinism", Err(e.clone())),
    }
    match &big {
        Ok((cfg, o)) => board.record(7, "parse/print round trip", criterion_7(o, &cfg.corpus)),
        Err(e) => board.record(7, "parse/print round trip", Err(e.clone())),
    }
    board.record(8, "reduction keeps the bug", criterion_8(&reducible));

    println!("{} of 8 criteria passed", 8 - board.failed);
    if board.failed > 0 {
        std::process::exit(1);
    }
}
