#![allow(dead_code)]

pub mod gen;

use std::path::{Path, PathBuf};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Pinned compiler for `version`, from `IDOL_SOLC_DIR` or the workspace `.solc/`.
pub fn solc(version: &str) -> Option<PathBuf> {
    let root = std::env::var_os("IDOL_SOLC_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../.solc"));
    let path = root.join(version).join("solc");
    path.is_file().then_some(path)
}

pub fn require_solc(version: &str) -> PathBuf {
    solc(version).unwrap_or_else(|| panic!("solc {version} not installed; run scripts/install-solc.sh"))
}
