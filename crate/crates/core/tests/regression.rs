mod support;

use std::path::Path;

use idol::campaign::{reduce, run_campaign, run_dol_baseline, CampaignConfig, CampaignOutcome};
use idol::compile::Compiler;
use idol::oracle::Classification;

fn config(corpus: &str, solc: &str, out: &Path) -> CampaignConfig {
    CampaignConfig {
        corpus: support::fixture(corpus),
        solc: vec![support::require_solc(solc)],
        seed: 1,
        units: 1,
        budget: 8,
        jobs: 1,
        out: out.to_path_buf(),
        ..CampaignConfig::default()
    }
}

fn behavioral(o: &CampaignOutcome) -> usize {
    o.report.count(Classification::Behavioral)
}

fn assert_sound(o: &CampaignOutcome) {
    assert_eq!(o.report.count(Classification::MutantNonequivalence), 0, "{}", o.report.to_json());
}

#[test]
fn keccak_witness_diverges_on_0_8_2() {
    let out = tempfile::tempdir().unwrap();
    let o = run_campaign(&config("keccak", "0.8.2", out.path())).unwrap();
    assert_sound(&o);
    assert_eq!(behavioral(&o), 1, "{}", o.report.to_json());
    let f = &o.findings[0];
    assert_eq!(f.signature.config_pair.0, "O0");
    assert_eq!(o.report.exit_code, 10);
}

#[test]
fn keccak_witness_is_clean_on_0_8_3() {
    let out = tempfile::tempdir().unwrap();
    let o = run_campaign(&config("keccak", "0.8.3", out.path())).unwrap();
    assert_sound(&o);
    assert_eq!(o.findings.len(), 0, "{}", o.report.to_json());
    assert_eq!(o.report.exit_code, 0);
}

#[test]
fn separation_fixture_needs_mutation() {
    let out = tempfile::tempdir().unwrap();
    let cfg = config("separation", "0.8.2", out.path());
    let dol = run_dol_baseline(&cfg).unwrap();
    assert_eq!(behavioral(&dol), 0, "{}", dol.report.to_json());
    let idol = run_campaign(&cfg).unwrap();
    assert_sound(&idol);
    assert!(behavioral(&idol) >= 1, "{}", idol.report.to_json());
}

#[test]
fn reduced_reproducers_keep_the_bug_class() {
    let out = tempfile::tempdir().unwrap();
    let cfg = config("separation", "0.8.2", out.path());
    let idol = run_campaign(&cfg).unwrap();
    let compiler = Compiler::new(&cfg.solc[0]).unwrap();
    let f = idol.findings.iter().find(|f| f.classification == Classification::Behavioral).unwrap();
    let min = reduce(f, &compiler).unwrap();
    assert!(min.len() <= f.mutant.unit.source.len());
    println!("{min}");
}
