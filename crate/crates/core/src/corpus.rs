//! Corpus ingestion, validation and seeded sampling.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::syntax;

/// Content hash of a source text (lowercase hex SHA-256).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitId(pub String);

impl UnitId {
    pub fn of(source: &str) -> UnitId {
        UnitId(hex::encode(Sha256::digest(source.as_bytes())))
    }

    pub fn short(&self) -> &str {
        &self.0[..self.0.len().min(12)]
    }
}

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceUnit {
    pub id: UnitId,
    /// Path relative to the corpus root, `/`-separated.
    pub path: String,
    pub source: String,
    pub pragma_range: Option<String>,
    pub byte_len: usize,
}

impl SourceUnit {
    pub fn new(path: impl Into<String>, source: impl Into<String>) -> SourceUnit {
        let source = source.into();
        let pragma_range = syntax::parse(&source)
            .ok()
            .and_then(|ast| ast.pragma_solidity().map(|s| s.slice(&source).trim().to_string()));
        SourceUnit { id: UnitId::of(&source), path: path.into(), byte_len: source.len(), pragma_range, source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryStatus {
    Valid,
    Unsupported,
    CompileFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub path: String,
    pub id: UnitId,
    pub status: EntryStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub root: String,
    pub solc_version: String,
    pub entries: Vec<IndexEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("corpus root {0} does not exist or is not a directory")]
    MissingRoot(PathBuf),
    #[error("walking corpus: {0}")]
    Walk(#[from] walkdir::Error),
    #[error("compiler: {0}")]
    Compile(#[from] crate::compile::CompileError),
}

impl CorpusIndex {
    pub fn count(&self, status: EntryStatus) -> usize {
        self.entries.iter().filter(|e| e.status == status).count()
    }

    /// Canonical JSON with sorted keys and a trailing newline.
    pub fn to_json(&self) -> String {
        crate::canonical_json(self)
    }
}

/// Every `.sol` file under `root`, sorted by relative path.
pub fn list_sources(root: &Path) -> Result<Vec<(String, PathBuf)>, CorpusError> {
    if !root.is_dir() {
        return Err(CorpusError::MissingRoot(root.to_path_buf()));
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(root).follow_links(true) {
        let entry = entry?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|e| e == "sol") {
            let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
            let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            files.push((rel, entry.path().to_path_buf()));
        }
    }
    files.sort();
    Ok(files)
}

/// Static checks that do not need the compiler. `Err` carries the reason.
pub fn check_supported(source: &str) -> Result<(), String> {
    let ast = syntax::parse(source).map_err(|e| e.to_string())?;
    let main = syntax::main_contract(&ast).ok_or_else(|| "no deployable contract".to_string())?;
    let needs_args = main.members.iter().any(|m| {
        matches!(m, syntax::Member::Function(f) if f.kind == syntax::FunctionKind::Constructor && !f.params.is_empty())
    });
    if needs_args {
        return Err("constructor requires arguments".into());
    }
    Ok(())
}

/// Builds the index: parse and support checks first, then one batched
/// unoptimized compile of everything that passed.
pub fn ingest(root: &Path, compiler: &crate::compile::Compiler) -> Result<(CorpusIndex, Vec<SourceUnit>), CorpusError> {
    let files = list_sources(root)?;
    let mut entries = Vec::with_capacity(files.len());
    let mut units = Vec::new();
    let mut pending = Vec::new();
    for (rel, path) in files {
        match std::fs::read(&path).map(String::from_utf8) {
            Ok(Ok(source)) => {
                let unit = SourceUnit::new(rel.clone(), source);
                match check_supported(&unit.source) {
                    Ok(()) => {
                        pending.push(entries.len());
                        entries.push(IndexEntry { path: rel, id: unit.id.clone(), status: EntryStatus::Valid, reason: None });
                    }
                    Err(reason) => entries.push(IndexEntry {
                        path: rel,
                        id: unit.id.clone(),
                        status: EntryStatus::Unsupported,
                        reason: Some(reason),
                    }),
                }
                units.push(unit);
            }
            Ok(Err(_)) => entries.push(IndexEntry {
                path: rel,
                id: UnitId::of(""),
                status: EntryStatus::Unsupported,
                reason: Some("not valid UTF-8".into()),
            }),
            Err(e) => entries.push(IndexEntry {
                path: rel,
                id: UnitId::of(""),
                status: EntryStatus::Unsupported,
                reason: Some(format!("unreadable: {e}")),
            }),
        }
    }
    let by_path: std::collections::HashMap<&str, &SourceUnit> = units.iter().map(|u| (u.path.as_str(), u)).collect();
    let sources: Vec<&str> = pending.iter().map(|&i| by_path[entries[i].path.as_str()].source.as_str()).collect();
    let results = compiler.compile_many(&sources, &crate::compile::CompileConfig::baseline(compiler.solc_path()))?;
    for (&i, result) in pending.iter().zip(results) {
        if let Err(e) = result {
            entries[i].status = EntryStatus::CompileFailed;
            entries[i].reason = Some(e.to_string());
        }
    }
    let index = CorpusIndex { root: root.display().to_string(), solc_version: compiler.version().to_string(), entries };
    let valid: std::collections::HashSet<&str> =
        index.entries.iter().filter(|e| e.status == EntryStatus::Valid).map(|e| e.path.as_str()).collect();
    let units = units.into_iter().filter(|u| valid.contains(u.path.as_str())).collect();
    Ok((index, units))
}

/// Seeded draw over valid units: a permutation prefix when `n` fits,
/// whole reshuffled passes when it wraps.
pub fn sample(valid: &[SourceUnit], seed: u64, n: usize) -> Vec<SourceUnit> {
    if valid.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut order: Vec<usize> = (0..valid.len()).collect();
        order.shuffle(&mut rng);
        out.extend(order.into_iter().take(n - out.len()).map(|i| valid[i].clone()));
    }
    out
}
