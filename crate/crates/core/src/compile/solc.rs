use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::{CompileConfig, CompileError, CompileFailure, CompileResult, CompiledArtifact, HexBytes, Pipeline};
use crate::syntax;

fn file_name(i: usize) -> String {
    format!("s{i}.sol")
}

pub(super) fn version(solc: &Path) -> Result<(String, String), CompileError> {
    let out = Command::new(solc)
        .arg("--version")
        .output()
        .map_err(|source| CompileError::Spawn { path: solc.to_path_buf(), source })?;
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    let version = text
        .lines()
        .find_map(|l| l.strip_prefix("Version:"))
        .map(|v| v.trim().to_string())
        .ok_or_else(|| CompileError::Version { path: solc.to_path_buf() })?;
    Ok((version, text.trim_end().to_string()))
}

/// Standard-JSON input for a batch; source `i` is named `s{i}.sol`.
pub fn standard_json_input(sources: &[&str], config: &CompileConfig) -> String {
    let files: serde_json::Map<String, serde_json::Value> =
        sources.iter().enumerate().map(|(i, s)| (file_name(i), json!({ "content": s }))).collect();
    let mut settings = json!({
        "optimizer": { "enabled": config.optimize, "runs": config.runs },
        "evmVersion": config.evm_version,
        "metadata": { "bytecodeHash": "none" },
        "outputSelection": { "*": { "*": ["abi", "evm.bytecode.object", "evm.deployedBytecode.object"] } },
    });
    if config.pipeline == Pipeline::ViaIr {
        settings["viaIR"] = json!(true);
    }
    json!({ "language": "Solidity", "sources": files, "settings": settings }).to_string()
}

/// Runs `solc --standard-json`; `None` when the wall-clock limit is hit.
pub(super) fn invoke(solc: &Path, input: &str, timeout: Duration) -> Result<Option<String>, CompileError> {
    let spawn_err = |source| CompileError::Spawn { path: solc.to_path_buf(), source };
    let mut child = Command::new(solc)
        .arg("--standard-json")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(spawn_err)?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = input.to_string();
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(input.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout.read_to_string(&mut buf);
        buf
    });
    let started = Instant::now();
    loop {
        if child.try_wait().map_err(spawn_err)?.is_some() {
            break;
        }
        if started.elapsed() > timeout {
            let _ = child.kill();
            let _ = child.wait();
            let _ = writer.join();
            let _ = reader.join();
            return Ok(None);
        }
        thread::sleep(Duration::from_millis(5));
    }
    let _ = writer.join();
    let out = reader.join().map_err(|_| CompileError::Output("reader thread panicked".into()))?;
    Ok(Some(out))
}

#[derive(Debug, Deserialize)]
struct RawLocation {
    file: String,
}

#[derive(Debug, Deserialize)]
struct RawError {
    severity: String,
    message: String,
    #[serde(rename = "type")]
    kind: String,
    #[serde(rename = "sourceLocation")]
    location: Option<RawLocation>,
}

impl RawError {
    fn is_error(&self) -> bool {
        self.severity == "error"
    }

    fn text(&self) -> String {
        format!("{}: {}", self.kind, self.message)
    }
}

#[derive(Debug, Deserialize)]
struct RawObject {
    object: String,
}

#[derive(Debug, Deserialize)]
struct RawEvm {
    bytecode: RawObject,
    #[serde(rename = "deployedBytecode")]
    deployed: RawObject,
}

#[derive(Debug, Deserialize)]
struct RawContract {
    abi: serde_json::Value,
    evm: RawEvm,
}

#[derive(Debug, Deserialize)]
pub struct SolcOutput {
    #[serde(default)]
    errors: Vec<RawError>,
    #[serde(default)]
    contracts: BTreeMap<String, BTreeMap<String, RawContract>>,
}

impl SolcOutput {
    /// Parses solc's JSON, skipping any banner text printed before it.
    pub fn parse(text: &str) -> Result<SolcOutput, CompileError> {
        let start = text.find('{').ok_or_else(|| CompileError::Output(truncate(text)))?;
        serde_json::from_str(&text[start..]).map_err(|e| CompileError::Output(format!("{e}: {}", truncate(text))))
    }

    fn file_index(&self, e: &RawError) -> Option<usize> {
        e.location.as_ref()?.file.strip_prefix('s')?.strip_suffix(".sol")?.parse().ok()
    }

    pub(super) fn has_unattributed_errors(&self) -> bool {
        self.errors.iter().any(|e| e.is_error() && self.file_index(e).is_none())
    }

    pub(super) fn first_error(&self) -> String {
        self.errors.iter().find(|e| e.is_error()).map(RawError::text).unwrap_or_else(|| "unknown error".into())
    }

    /// First error message per file, `None` for files without errors.
    pub(super) fn failed_files(&self, n: usize) -> Vec<Option<String>> {
        let mut out = vec![None; n];
        for e in self.errors.iter().filter(|e| e.is_error()) {
            if let Some(i) = self.file_index(e).filter(|&i| i < n) {
                out[i].get_or_insert_with(|| e.text());
            }
        }
        out
    }

    pub(super) fn artifact(&self, i: usize, src: &str, config: &CompileConfig, version: &str) -> CompileResult {
        let fail = |message: String| Err(CompileFailure::Error { message });
        let file = file_name(i);
        let Some(contracts) = self.contracts.get(&file) else {
            return fail("no contracts in compiler output".into());
        };
        let name = match syntax::parse(src).ok().as_ref().and_then(syntax::main_contract) {
            Some(c) => c.name.name.clone(),
            None => return fail("cannot determine the deployable contract".into()),
        };
        let Some(raw) = contracts.get(&name) else {
            return fail(format!("contract {name} missing from compiler output"));
        };
        let decode = |s: &str| hex::decode(s.trim_start_matches("0x")).map(HexBytes);
        let (Ok(deploy), Ok(runtime)) = (decode(&raw.evm.bytecode.object), decode(&raw.evm.deployed.object)) else {
            return fail(format!("contract {name} has unlinked or malformed bytecode"));
        };
        if deploy.0.is_empty() {
            return fail(format!("contract {name} produced no bytecode"));
        }
        let diagnostics = self
            .errors
            .iter()
            .filter(|e| !e.is_error() && self.file_index(e) == Some(i))
            .map(|e| format!("{}: {}", e.severity, e.text()))
            .collect();
        Ok(CompiledArtifact {
            config: config.clone(),
            contract_name: name,
            deploy_bytecode: deploy,
            runtime_bytecode: runtime,
            abi: raw.abi.clone(),
            solc_version: version.to_string(),
            diagnostics,
        })
    }
}

fn truncate(text: &str) -> String {
    text.chars().take(400).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_names_sources_by_index() {
        let cfg = CompileConfig::optimized(Path::new("solc"), 1);
        let input: serde_json::Value = serde_json::from_str(&standard_json_input(&["a", "b"], &cfg)).unwrap();
        assert_eq!(input["sources"]["s1.sol"]["content"], "b");
        assert_eq!(input["settings"]["optimizer"]["runs"], 1);
        assert_eq!(input["settings"]["metadata"]["bytecodeHash"], "none");
        assert!(input["settings"].get("viaIR").is_none());
    }

    #[test]
    fn output_with_banner_and_attributed_errors() {
        let text = r#">>> banner
{"errors":[{"severity":"error","message":"bad","type":"ParserError","sourceLocation":{"file":"s1.sol","start":0,"end":1}},
{"severity":"warning","message":"meh","type":"Warning","sourceLocation":{"file":"s0.sol","start":0,"end":1}}]}"#;
        let out = SolcOutput::parse(text).unwrap();
        assert!(!out.has_unattributed_errors());
        assert_eq!(out.failed_files(2), vec![None, Some("ParserError: bad".to_string())]);
    }

    #[test]
    fn unattributed_errors_are_detected() {
        let text = r#"{"errors":[{"severity":"error","message":"boom","type":"InternalCompilerError"}]}"#;
        assert!(SolcOutput::parse(text).unwrap().has_unattributed_errors());
    }
}
