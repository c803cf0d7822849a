//! Optimizer configuration matrix and a caching driver around an external
//! `solc --standard-json`.

mod cache;
mod solc;

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use cache::Cache;
pub use solc::{standard_json_input, SolcOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Legacy,
    ViaIr,
}

pub const DEFAULT_EVM_VERSION: &str = "berlin";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompileConfig {
    pub optimize: bool,
    pub runs: u32,
    pub pipeline: Pipeline,
    pub solc_path: PathBuf,
    pub evm_version: String,
}

impl CompileConfig {
    pub fn baseline(solc_path: &Path) -> CompileConfig {
        CompileConfig {
            optimize: false,
            runs: 200,
            pipeline: Pipeline::Legacy,
            solc_path: solc_path.to_path_buf(),
            evm_version: DEFAULT_EVM_VERSION.into(),
        }
    }

    pub fn optimized(solc_path: &Path, runs: u32) -> CompileConfig {
        CompileConfig { optimize: true, runs, ..CompileConfig::baseline(solc_path) }
    }

    pub fn with_pipeline(mut self, pipeline: Pipeline) -> CompileConfig {
        self.pipeline = pipeline;
        self
    }

    pub fn is_baseline(&self) -> bool {
        !self.optimize && self.pipeline == Pipeline::Legacy
    }

    /// Short label used in reports and signatures, e.g. `O0`, `runs=200`, `runs=1+ir`.
    pub fn label(&self) -> String {
        let base = if self.optimize { format!("runs={}", self.runs) } else { "O0".into() };
        match self.pipeline {
            Pipeline::Legacy => base,
            Pipeline::ViaIr => format!("{base}+ir"),
        }
    }

    /// Canonical position within a matrix: legacy before via-IR, unoptimized first, then by runs.
    pub fn rank(&self) -> (Pipeline, bool, u32) {
        (self.pipeline, self.optimize, self.runs)
    }

    /// Every field, canonically serialized.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(&serde_json::to_value(self).expect("config serializes")).expect("value serializes")
    }
}

impl fmt::Display for CompileConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViaIrMode {
    #[default]
    Off,
    Only,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatrixOptions {
    pub runs: Vec<u32>,
    /// Include the unoptimized configuration.
    pub include_unoptimized: bool,
    pub via_ir: ViaIrMode,
    pub evm_version: String,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        MatrixOptions { runs: vec![1, 200], include_unoptimized: true, via_ir: ViaIrMode::Off, evm_version: DEFAULT_EVM_VERSION.into() }
    }
}

/// Ordered configurations: unoptimized first, then runs in the given order;
/// legacy pipeline before via-IR.
pub fn config_matrix(solc_path: &Path, opts: &MatrixOptions) -> Vec<CompileConfig> {
    let pipelines: &[Pipeline] = match opts.via_ir {
        ViaIrMode::Off => &[Pipeline::Legacy],
        ViaIrMode::Only => &[Pipeline::ViaIr],
        ViaIrMode::Both => &[Pipeline::Legacy, Pipeline::ViaIr],
    };
    let mut out = Vec::new();
    for &p in pipelines {
        if opts.include_unoptimized {
            out.push(CompileConfig::baseline(solc_path).with_pipeline(p));
        }
        for &r in &opts.runs {
            out.push(CompileConfig::optimized(solc_path, r).with_pipeline(p));
        }
    }
    for c in &mut out {
        c.evm_version = opts.evm_version.clone();
    }
    out
}

/// Byte string serialized as lowercase `0x` hex.
#[derive(Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct HexBytes(pub Vec<u8>);

impl fmt::Debug for HexBytes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(&self.0))
    }
}

impl fmt::Display for HexBytes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for HexBytes {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("0x{}", hex::encode(&self.0)))
    }
}

impl<'de> Deserialize<'de> for HexBytes {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s.trim_start_matches("0x")).map(HexBytes).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledArtifact {
    pub config: CompileConfig,
    pub contract_name: String,
    pub deploy_bytecode: HexBytes,
    pub runtime_bytecode: HexBytes,
    /// Raw ABI JSON as emitted by solc.
    pub abi: serde_json::Value,
    pub solc_version: String,
    pub diagnostics: Vec<String>,
}

impl CompiledArtifact {
    /// Hash of the bytecode pair, used as a compact artifact reference in reports.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::new()
            .chain_update(&self.deploy_bytecode.0)
            .chain_update(&self.runtime_bytecode.0)
            .finalize();
        hex::encode(&digest[..16])
    }
}

/// Per-source compile outcome that is not a success.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompileFailure {
    #[error("compile error: {message}")]
    Error { message: String },
    #[error("compile timed out after {seconds}s")]
    Timeout { seconds: u64 },
}

/// Harness-level failures: the compiler itself could not be run or understood.
#[derive(Debug, thiserror::Error)]
pub enum CompileError {
    #[error("cannot run {path}: {source}")]
    Spawn { path: PathBuf, source: std::io::Error },
    #[error("{path} --version gave no version line")]
    Version { path: PathBuf },
    #[error("unreadable solc output: {0}")]
    Output(String),
    #[error("cache: {0}")]
    Cache(#[from] std::io::Error),
}

pub type CompileResult = Result<CompiledArtifact, CompileFailure>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileStats {
    pub invocations: u64,
    pub sources_compiled: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub audited: u64,
    pub audit_mismatches: u64,
}

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
pub const DEFAULT_BATCH: usize = 48;

pub struct Compiler {
    solc: PathBuf,
    version: String,
    version_output: String,
    cache: Option<Cache>,
    timeout: Duration,
    batch_size: usize,
    stats: Mutex<CompileStats>,
}

impl fmt::Debug for Compiler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Compiler").field("solc", &self.solc).field("version", &self.version).finish()
    }
}

impl Compiler {
    pub fn new(solc: &Path) -> Result<Compiler, CompileError> {
        let (version, version_output) = solc::version(solc)?;
        Ok(Compiler {
            solc: solc.to_path_buf(),
            version,
            version_output,
            cache: None,
            timeout: DEFAULT_TIMEOUT,
            batch_size: DEFAULT_BATCH,
            stats: Mutex::new(CompileStats::default()),
        })
    }

    pub fn with_cache(mut self, dir: &Path) -> Result<Compiler, CompileError> {
        self.cache = Some(Cache::open(dir)?);
        Ok(self)
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Compiler {
        self.timeout = timeout;
        self
    }

    pub fn with_batch_size(mut self, n: usize) -> Compiler {
        self.batch_size = n.max(1);
        self
    }

    pub fn solc_path(&self) -> &Path {
        &self.solc
    }

    /// Exact version string, e.g. `0.8.2+commit.661d1103.Emscripten.clang`.
    pub fn version(&self) -> &str {
        &self.version
    }

    /// Full `--version` output.
    pub fn version_output(&self) -> &str {
        &self.version_output
    }

    pub fn stats(&self) -> CompileStats {
        self.stats.lock().expect("stats lock").clone()
    }

    fn cache_key(&self, source: &str, config: &CompileConfig) -> String {
        let digest = Sha256::new()
            .chain_update(config.fingerprint().as_bytes())
            .chain_update(b"\n")
            .chain_update(self.version.as_bytes())
            .chain_update(b"\n")
            .chain_update(source.as_bytes())
            .finalize();
        hex::encode(digest)
    }

    pub fn compile(&self, source: &str, config: &CompileConfig) -> Result<CompileResult, CompileError> {
        Ok(self.compile_many(&[source], config)?.remove(0))
    }

    /// Compiles every source under one configuration. Identical sources are
    /// compiled once; cache misses are batched into shared solc invocations.
    pub fn compile_many(&self, sources: &[&str], config: &CompileConfig) -> Result<Vec<CompileResult>, CompileError> {
        let keys: Vec<String> = sources.iter().map(|s| self.cache_key(s, config)).collect();
        let mut resolved: HashMap<&str, CompileResult> = HashMap::new();
        let mut misses: Vec<(&str, &str)> = Vec::new();
        let mut audits: Vec<(&str, &str, CompileResult)> = Vec::new();
        for (key, src) in keys.iter().zip(sources) {
            if resolved.contains_key(key.as_str()) || misses.iter().any(|(k, _)| k == key) {
                continue;
            }
            match self.cache.as_ref().and_then(|c| c.get(key)) {
                Some(hit) => {
                    self.bump(|s| s.cache_hits += 1);
                    if Cache::selected_for_audit(key) {
                        audits.push((key, src, hit.clone()));
                    }
                    resolved.insert(key, hit);
                }
                None => {
                    self.bump(|s| s.cache_misses += 1);
                    misses.push((key, src));
                }
            }
        }
        let fresh = self.run_batches(&misses.iter().map(|(_, s)| *s).collect::<Vec<_>>(), config)?;
        for ((key, _), result) in misses.iter().zip(fresh) {
            if let Some(cache) = &self.cache {
                if !matches!(result, Err(CompileFailure::Timeout { .. })) {
                    cache.put(key, &result)?;
                }
            }
            resolved.insert(key, result);
        }
        if !audits.is_empty() {
            let again = self.run_batches(&audits.iter().map(|(_, s, _)| *s).collect::<Vec<_>>(), config)?;
            for ((key, _, cached), fresh) in audits.iter().zip(again) {
                self.bump(|s| s.audited += 1);
                if *cached != fresh {
                    log::warn!("cache audit mismatch for {key}");
                    self.bump(|s| s.audit_mismatches += 1);
                }
            }
        }
        Ok(keys.iter().map(|k| resolved[k.as_str()].clone()).collect())
    }

    fn bump(&self, f: impl FnOnce(&mut CompileStats)) {
        f(&mut self.stats.lock().expect("stats lock"));
    }

    fn run_batches(&self, sources: &[&str], config: &CompileConfig) -> Result<Vec<CompileResult>, CompileError> {
        let chunks: Vec<&[&str]> = sources.chunks(self.batch_size).collect();
        let results: Vec<Result<Vec<CompileResult>, CompileError>> =
            chunks.par_iter().map(|chunk| self.compile_batch(chunk, config)).collect();
        let mut out = Vec::with_capacity(sources.len());
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }

    /// One invocation for the whole batch. Files with attributed errors fail
    /// individually; the rest are recompiled. Unattributed errors and
    /// timeouts split the batch in half.
    fn compile_batch(&self, sources: &[&str], config: &CompileConfig) -> Result<Vec<CompileResult>, CompileError> {
        if sources.is_empty() {
            return Ok(Vec::new());
        }
        self.bump(|s| {
            s.invocations += 1;
            s.sources_compiled += sources.len() as u64;
        });
        let input = standard_json_input(sources, config);
        let output = match solc::invoke(&self.solc, &input, self.timeout)? {
            Some(out) => out,
            None if sources.len() == 1 => {
                return Ok(vec![Err(CompileFailure::Timeout { seconds: self.timeout.as_secs() })]);
            }
            None => return self.split(sources, config),
        };
        let parsed = SolcOutput::parse(&output)?;
        let failed = parsed.failed_files(sources.len());
        if parsed.has_unattributed_errors() {
            if sources.len() == 1 {
                return Ok(vec![Err(CompileFailure::Error { message: parsed.first_error() })]);
            }
            return self.split(sources, config);
        }
        if failed.iter().any(|f| f.is_some()) {
            let survivors: Vec<usize> = (0..sources.len()).filter(|&i| failed[i].is_none()).collect();
            let retried = self.compile_batch(&survivors.iter().map(|&i| sources[i]).collect::<Vec<_>>(), config)?;
            let mut retried = retried.into_iter();
            return Ok(failed
                .into_iter()
                .map(|f| match f {
                    Some(message) => Err(CompileFailure::Error { message }),
                    None => retried.next().expect("one result per survivor"),
                })
                .collect());
        }
        Ok(sources
            .iter()
            .enumerate()
            .map(|(i, src)| parsed.artifact(i, src, config, &self.version))
            .collect())
    }

    fn split(&self, sources: &[&str], config: &CompileConfig) -> Result<Vec<CompileResult>, CompileError> {
        let (a, b) = sources.split_at(sources.len() / 2);
        let (ra, rb) = rayon::join(|| self.compile_batch(a, config), || self.compile_batch(b, config));
        let mut out = ra?;
        out.extend(rb?);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matrix_is_o0_runs1_runs200() {
        let m = config_matrix(Path::new("solc"), &MatrixOptions::default());
        let labels: Vec<String> = m.iter().map(|c| c.label()).collect();
        assert_eq!(labels, vec!["O0", "runs=1", "runs=200"]);
        assert!(m[0].is_baseline());
    }

    #[test]
    fn via_ir_both_doubles_the_matrix() {
        let opts = MatrixOptions { via_ir: ViaIrMode::Both, ..MatrixOptions::default() };
        let labels: Vec<String> = config_matrix(Path::new("solc"), &opts).iter().map(|c| c.label()).collect();
        assert_eq!(labels, vec!["O0", "runs=1", "runs=200", "O0+ir", "runs=1+ir", "runs=200+ir"]);
    }

    #[test]
    fn optimize_only_singleton() {
        let opts = MatrixOptions { runs: vec![1], include_unoptimized: false, ..MatrixOptions::default() };
        let labels: Vec<String> = config_matrix(Path::new("solc"), &opts).iter().map(|c| c.label()).collect();
        assert_eq!(labels, vec!["runs=1"]);
    }

    #[test]
    fn fingerprint_covers_every_field() {
        let a = CompileConfig::baseline(Path::new("solc"));
        let variants = [
            CompileConfig { optimize: true, ..a.clone() },
            CompileConfig { runs: 1, ..a.clone() },
            CompileConfig { pipeline: Pipeline::ViaIr, ..a.clone() },
            CompileConfig { solc_path: "other".into(), ..a.clone() },
            CompileConfig { evm_version: "london".into(), ..a.clone() },
        ];
        for v in variants {
            assert_ne!(a.fingerprint(), v.fingerprint());
        }
    }

    #[test]
    fn hex_bytes_round_trip() {
        let b = HexBytes(vec![0, 0xab, 0xff]);
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(json, "\"0x00abff\"");
        assert_eq!(serde_json::from_str::<HexBytes>(&json).unwrap(), b);
    }
}
