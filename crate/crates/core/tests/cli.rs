mod support;

use std::path::Path;
use std::process::{Command, Output};

fn idol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idol")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn parse_round_trips_and_dumps_json() {
    let file = support::fixture("licm.sol");
    let o = idol(&["parse", path(&file)]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("round trip exact"));
    let o = idol(&["parse", path(&file), "--dump-ast"]);
    let ast: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(ast["kind"], "source_unit");
}

#[test]
fn mutate_writes_sources_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let file = support::fixture("licm.sol");
    let o = idol(&["mutate", path(&file), "--seed", "3", "--budget", "2", "--kinds", "ReverseLICM,LiteralObfuscation", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sol = dir.path().join("licm.m0.sol");
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("licm.m0.json")).unwrap()).unwrap();
    assert!(sol.is_file());
    assert!(!meta.as_array().unwrap().is_empty());
    assert_eq!(code(&idol(&["mutate", path(&file), "--kinds", "Nope"])), 2);
}

#[test]
fn check_equiv_exit_codes() {
    let Some(solc) = support::solc("0.8.30") else { return };
    let parent = support::fixture("loop_inversion.sol");
    let golden = support::fixture("loop_inversion.golden.sol");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sol");
    std::fs::write(&bad, support::read_fixture("loop_inversion.golden.sol").replace("a[i] = 0;", "a[i] = 1;")).unwrap();
    assert_eq!(code(&idol(&["check-equiv", path(&parent), path(&golden), "--solc", path(&solc)])), 0);
    assert_eq!(code(&idol(&["check-equiv", path(&parent), path(&bad), "--solc", path(&solc)])), 20);
}

#[test]
fn run_replay_reduce_from_config_file() {
    let Some(solc) = support::solc("0.8.2") else { return };
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("idol.toml");
    std::fs::write(
        &cfg,
        format!(
            "corpus = {:?}\nsolc = [{:?}]\nseed = 1\nunits = 1\nbudget = 2\njobs = 1\nout = {:?}\n[matrix]\nruns = [200]\n",
            support::fixture("keccak"),
            solc,
            out
        ),
    )
    .unwrap();
    let o = idol(&["run", "--config", path(&cfg)]);
    assert_eq!(code(&o), 10, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["campaign.json", "corpus.index.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert!(out.join("cache").is_dir());
    let report = std::fs::read_dir(out.join("findings")).unwrap().next().unwrap().unwrap().path();
    assert_eq!(code(&idol(&["replay", path(&report)])), 0);
    let o = idol(&["reduce", path(&report)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let min = report.with_extension("min.sol");
    let original = support::read_fixture("keccak/witness.sol");
    assert!(std::fs::read_to_string(min).unwrap().len() <= original.len());

    std::fs::write(&cfg, "units = 1\nbogus = true\n").unwrap();
    assert_eq!(code(&idol(&["run", "--config", path(&cfg)])), 2);
}
