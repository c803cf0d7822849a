mod support;

use idol::compile::{config_matrix, Compiler, MatrixOptions};
use idol::mutate::{apply, discover_sites, TransformKind};
use idol::syntax;

/// Applies the single site of `kind` and checks the result against the golden file.
/// `IDOL_BLESS=1` rewrites the golden instead.
fn golden(input: &str, expected: &str, kind: TransformKind) -> String {
    let src = support::read_fixture(input);
    let ast = syntax::parse(&src).unwrap();
    let sites = discover_sites(&ast, &src, kind);
    assert_eq!(sites.len(), 1, "{input}: {sites:?}");
    let (mutant, app) = apply(&src, kind, &sites[0], 0).unwrap();
    assert_eq!(syntax::apply_edits(&src, &app.edits).unwrap(), mutant);
    if std::env::var_os("IDOL_BLESS").is_some() {
        std::fs::write(support::fixture(expected), &mutant).unwrap();
    }
    assert_eq!(mutant, support::read_fixture(expected), "{input} golden mismatch");
    mutant
}

fn compiles_everywhere(src: &str) {
    let solc = support::require_solc("0.8.30");
    let compiler = Compiler::new(&solc).unwrap();
    for cfg in config_matrix(&solc, &MatrixOptions::default()) {
        let res = compiler.compile(src, &cfg).unwrap();
        assert!(res.is_ok(), "{}: {res:?}", cfg.label());
    }
}

#[test]
fn reverse_licm_golden() {
    let m = golden("licm.sol", "licm.golden.sol", TransformKind::ReverseLicm);
    compiles_everywhere(&m);
}

#[test]
fn reverse_loop_inversion_golden() {
    let m = golden("loop_inversion.sol", "loop_inversion.golden.sol", TransformKind::ReverseLoopInversion);
    compiles_everywhere(&m);
}
