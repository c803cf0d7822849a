mod support;

use std::path::Path;

use idol::campaign::{run_campaign, CampaignConfig};
use idol::compile::{config_matrix, CompileConfig, CompileFailure, Compiler, MatrixOptions};
use idol::execute::{self, Status};
use idol::oracle::{self, Equivalence, Field, Verdict};

fn compile_o0(compiler: &Compiler, src: &str) -> idol::compile::CompiledArtifact {
    compiler.compile(src, &CompileConfig::baseline(compiler.solc_path())).unwrap().unwrap()
}

#[test]
fn constant_function_returns_five_everywhere() {
    let Some(solc) = support::solc("0.8.30") else { return };
    let src = "contract Five {\n    function five() public pure returns (uint256) {\n        return 5;\n    }\n}\n";
    let compiler = Compiler::new(&solc).unwrap();
    let configs = config_matrix(&solc, &MatrixOptions::default());
    let plan = execute::plan_calls(&compile_o0(&compiler, src).abi, 0, 2).unwrap();
    let mut traces = Vec::new();
    for cfg in &configs {
        let art = compiler.compile(src, cfg).unwrap().unwrap();
        let trace = execute::run(&art, &plan).unwrap();
        assert_eq!(trace.calls.len(), 2);
        for call in &trace.calls {
            assert_eq!(call.status, Status::Success);
            assert_eq!(call.return_data.0, {
                let mut w = vec![0u8; 32];
                w[31] = 5;
                w
            });
        }
        traces.push(trace);
    }
    let pairs: Vec<_> = configs.iter().zip(&traces).collect();
    assert_eq!(oracle::compare(&pairs).unwrap(), Verdict::Agree);
}

#[test]
fn loop_inversion_fixture_agrees_on_storage() {
    let Some(solc) = support::solc("0.8.30") else { return };
    let src = support::read_fixture("loop_inversion.sol");
    let mutant = support::read_fixture("loop_inversion.golden.sol");
    let compiler = Compiler::new(&solc).unwrap();
    let configs = config_matrix(&solc, &MatrixOptions::default());
    let plan = execute::plan_calls(&compile_o0(&compiler, &src).abi, 9, 3).unwrap();
    let mut digests = Vec::new();
    for text in [&src, &mutant] {
        let traces: Vec<_> = configs
            .iter()
            .map(|cfg| execute::run(&compiler.compile(text, cfg).unwrap().unwrap(), &plan).unwrap())
            .collect();
        let pairs: Vec<_> = configs.iter().zip(&traces).collect();
        assert_eq!(oracle::compare(&pairs).unwrap(), Verdict::Agree);
        digests.push(traces.iter().map(|t| t.calls.last().unwrap().storage_digest.clone()).collect::<Vec<_>>());
    }
    assert_eq!(digests[0], digests[1]);
}

#[test]
fn equivalence_check_catches_a_broken_rewrite() {
    let Some(solc) = support::solc("0.8.30") else { return };
    let parent = "contract M {
    uint256 public x;

    function f(uint256 y) public {
        x = y + 1;
        for (uint256 i = 0; i < 0; i++) {
        }
    }
}
";
    // The assignment moved into a loop that never runs.
    let broken = parent.replace("        x = y + 1;\n", "").replace("i++) {\n", "i++) {\n            x = y + 1;\n");
    // Same code with a rewritten literal.
    let sound = parent.replace("y + 1", "y + (3 - 2)");
    let compiler = Compiler::new(&solc).unwrap();
    let p = compile_o0(&compiler, parent);
    let plan = execute::plan_calls(&p.abi, 4, 3).unwrap();
    let base = execute::run(&p, &plan).unwrap();
    let check = |text: &str| oracle::check_mutant_equivalence(&base, &execute::run(&compile_o0(&compiler, text), &plan).unwrap()).unwrap();
    assert_eq!(check(&sound), Equivalence::Equivalent);
    match check(&broken) {
        Equivalence::Nonequivalent { detail } => assert!(matches!(detail.field, Field::ReturnData | Field::StorageDigest), "{detail:?}"),
        Equivalence::Equivalent => panic!("broken rewrite passed"),
    }
}

#[test]
fn compile_errors_are_results_not_panics() {
    let Some(solc) = support::solc("0.8.30") else { return };
    let compiler = Compiler::new(&solc).unwrap();
    let srcs = ["contract Ok {}\n", "contract Bad { function f() public { y = 1; } }\n"];
    let out = compiler.compile_many(&srcs, &CompileConfig::baseline(&solc)).unwrap();
    assert!(out[0].is_ok());
    match &out[1] {
        Err(CompileFailure::Error { message }) => assert!(message.contains("Undeclared"), "{message}"),
        other => panic!("{other:?}"),
    }
}

fn small_campaign(corpus: &Path, out: &Path) -> CampaignConfig {
    CampaignConfig {
        corpus: corpus.to_path_buf(),
        solc: vec![support::require_solc("0.8.30")],
        seed: 42,
        units: 6,
        budget: 2,
        jobs: 2,
        out: out.to_path_buf(),
        ..CampaignConfig::default()
    }
}

#[test]
fn fresh_runs_are_identical_and_resume_hits_the_cache() {
    if support::solc("0.8.30").is_none() {
        return;
    }
    let corpus = tempfile::tempdir().unwrap();
    support::gen::write_corpus(corpus.path(), 12, 77).unwrap();
    let out = tempfile::tempdir().unwrap();
    let cfg = small_campaign(corpus.path(), out.path());

    let first = run_campaign(&cfg).unwrap();
    assert_eq!(first.report.exit_code, 0, "{}", first.report.to_json());
    assert_eq!(first.report.counts.units_processed, 6);
    assert_eq!(first.report.counts.equivalence_failed, 0);
    std::fs::remove_dir_all(out.path()).unwrap();

    let second = run_campaign(&cfg).unwrap();
    assert_eq!(first.report.stable_json(), second.report.stable_json());
    assert_eq!(first.report.signature_ids(), second.report.signature_ids());

    let resumed = run_campaign(&CampaignConfig { jobs: 1, ..cfg.clone() }).unwrap();
    let stats = resumed.report.timing.compiler.values().next().unwrap();
    assert_eq!(stats.cache_misses, 0);
    assert!(stats.cache_hits > 0);
    let strip_jobs = |s: String| s.replace("\"jobs\": 1", "\"jobs\": 2");
    assert_eq!(strip_jobs(resumed.report.stable_json()), second.report.stable_json());
}
