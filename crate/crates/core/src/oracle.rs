//! Cross-configuration trace comparison, the mutant equivalence gate and
//! finding signatures.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::compile::{CompileConfig, CompileFailure};
use crate::corpus::{SourceUnit, UnitId};
use crate::mutate::MutantUnit;
use crate::execute::{CallRecord, ExecutionTrace, Status};

/// Observable that differs, in comparison order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Compile,
    DeployOutcome,
    Status,
    ReturnData,
    Logs,
    StorageDigest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    /// `None` for deployment and compile divergences.
    pub call: Option<usize>,
    /// Hex selector, `deploy` or `compile`.
    pub selector: String,
    pub left_config: String,
    pub right_config: String,
    pub field: Field,
    pub left: Value,
    pub right: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Agree,
    Divergence { detail: Divergence },
    Inconclusive { reason: String, calls: Vec<usize> },
}

impl Verdict {
    pub fn divergence(&self) -> Option<&Divergence> {
        match self {
            Verdict::Divergence { detail } => Some(detail),
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("traces were produced from different call plans")]
    PlanMismatch,
    #[error("no unoptimized baseline among the compared configurations")]
    NoBaseline,
    #[error("a signature needs a divergence verdict")]
    NotDivergence,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("trace fields serialize")
}

/// First differing field of two call records, in field order.
fn record_diff(a: &CallRecord, b: &CallRecord) -> Option<(Field, Value, Value)> {
    if a.status != b.status {
        return Some((Field::Status, to_value(&a.status), to_value(&b.status)));
    }
    if a.return_data != b.return_data {
        return Some((Field::ReturnData, to_value(&a.return_data), to_value(&b.return_data)));
    }
    if a.logs != b.logs {
        return Some((Field::Logs, to_value(&a.logs), to_value(&b.logs)));
    }
    if a.storage_digest != b.storage_digest {
        return Some((Field::StorageDigest, to_value(&a.storage_digest), to_value(&b.storage_digest)));
    }
    None
}

/// Pairwise walk of two traces. Out-of-gas positions are collected and skipped
/// when `poison_oog` is set; otherwise they are compared like any other status.
fn diff_traces(
    left: (&str, &ExecutionTrace),
    right: (&str, &ExecutionTrace),
    poison_oog: bool,
    oog: &mut Vec<usize>,
) -> Option<Divergence> {
    let (ll, lt) = left;
    let (rl, rt) = right;
    let div = |call, selector: String, field, l, r| Divergence {
        call,
        selector,
        left_config: ll.to_string(),
        right_config: rl.to_string(),
        field,
        left: l,
        right: r,
    };
    if lt.deploy != rt.deploy {
        return Some(div(None, "deploy".into(), Field::DeployOutcome, to_value(&lt.deploy), to_value(&rt.deploy)));
    }
    for (i, (a, b)) in lt.calls.iter().zip(&rt.calls).enumerate() {
        if poison_oog && (a.status == Status::OutOfGas || b.status == Status::OutOfGas) {
            oog.push(i);
            continue;
        }
        if let Some((field, l, r)) = record_diff(a, b) {
            return Some(div(Some(i), a.selector.to_string(), field, l, r));
        }
    }
    None
}

fn position(d: &Divergence) -> (usize, Field) {
    (d.call.map_or(0, |c| c + 1), d.field)
}

/// Compares every optimized configuration against the unoptimized baseline.
/// The reported divergence is the earliest one; ties go to the configuration
/// that comes first in canonical matrix order, so input order does not matter.
pub fn compare(traces: &[(&CompileConfig, &ExecutionTrace)]) -> Result<Verdict, OracleError> {
    let mut sorted: Vec<_> = traces.to_vec();
    sorted.sort_by_key(|(c, _)| c.rank());
    let base_at = sorted.iter().position(|(c, _)| c.is_baseline()).ok_or(OracleError::NoBaseline)?;
    let (base_cfg, base) = sorted.remove(base_at);
    if sorted.iter().any(|(_, t)| t.plan_hash != base.plan_hash) {
        return Err(OracleError::PlanMismatch);
    }
    let base_label = base_cfg.label();
    let mut oog = Vec::new();
    let mut best: Option<Divergence> = None;
    for (cfg, t) in &sorted {
        if let Some(d) = diff_traces((&base_label, base), (&cfg.label(), t), true, &mut oog) {
            if best.as_ref().is_none_or(|b| position(&d) < position(b)) {
                best = Some(d);
            }
        }
    }
    oog.sort_unstable();
    oog.dedup();
    Ok(match best {
        Some(detail) => Verdict::Divergence { detail },
        None if !oog.is_empty() => Verdict::Inconclusive { reason: "out_of_gas".into(), calls: oog },
        None => Verdict::Agree,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Equivalence {
    Equivalent,
    Nonequivalent { detail: Box<Divergence> },
}

/// Byte-wise comparison of parent and mutant traces at the baseline.
pub fn check_mutant_equivalence(parent: &ExecutionTrace, mutant: &ExecutionTrace) -> Result<Equivalence, OracleError> {
    if parent.plan_hash != mutant.plan_hash {
        return Err(OracleError::PlanMismatch);
    }
    let mut unused = Vec::new();
    if let Some(detail) = diff_traces(("parent", parent), ("mutant", mutant), false, &mut unused) {
        return Ok(Equivalence::Nonequivalent { detail: Box::new(detail) });
    }
    if parent != mutant {
        // same observables but different headers or record counts
        let detail = Divergence {
            call: None,
            selector: "trace".into(),
            left_config: "parent".into(),
            right_config: "mutant".into(),
            field: Field::Status,
            left: Value::from(parent.calls.len()),
            right: Value::from(mutant.calls.len()),
        };
        return Ok(Equivalence::Nonequivalent { detail: Box::new(detail) });
    }
    Ok(Equivalence::Equivalent)
}

/// Compile divergence between configurations: the earliest failing config
/// (canonical order) paired with the earliest succeeding one.
pub fn compile_divergence(outcomes: &[(&CompileConfig, Option<&CompileFailure>)]) -> Option<Divergence> {
    let mut sorted = outcomes.to_vec();
    sorted.sort_by_key(|(c, _)| c.rank());
    let ok = sorted.iter().find(|(_, f)| f.is_none())?;
    let (bad_cfg, bad) = sorted.iter().find_map(|(c, f)| f.map(|f| (c, f)))?;
    let (left, right) = if ok.0.rank() < bad_cfg.rank() {
        ((ok.0, Value::from("ok")), (*bad_cfg, failure_class(bad)))
    } else {
        ((*bad_cfg, failure_class(bad)), (ok.0, Value::from("ok")))
    };
    Some(Divergence {
        call: None,
        selector: "compile".into(),
        left_config: left.0.label(),
        right_config: right.0.label(),
        field: Field::Compile,
        left: left.1,
        right: right.1,
    })
}

/// Stable class of a compile failure: the error type without message details.
pub fn failure_class(f: &CompileFailure) -> Value {
    match f {
        CompileFailure::Timeout { .. } => Value::from("timeout"),
        CompileFailure::Error { message } => {
            Value::from(message.split(':').next().unwrap_or("error").trim().to_string())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BugSignature {
    pub solc_version: String,
    pub config_pair: (String, String),
    pub field: Field,
    pub selector: String,
    pub diff_hash: String,
}

impl BugSignature {
    /// File-name-safe identifier.
    pub fn id(&self) -> String {
        let digest = Sha256::digest(crate::canonical_json(self).as_bytes());
        hex::encode(&digest[..8])
    }
}

/// Pure function of a divergence and the compiler version.
pub fn signature(verdict: &Verdict, solc_version: &str) -> Result<BugSignature, OracleError> {
    let d = verdict.divergence().ok_or(OracleError::NotDivergence)?;
    Ok(signature_of(d, solc_version))
}

pub fn signature_of(d: &Divergence, solc_version: &str) -> BugSignature {
    let mut h = Sha256::new();
    h.update(crate::canonical_json(&d.left));
    h.update([0]);
    h.update(crate::canonical_json(&d.right));
    BugSignature {
        solc_version: solc_version.to_string(),
        config_pair: (d.left_config.clone(), d.right_config.clone()),
        field: d.field,
        selector: d.selector.clone(),
        diff_hash: hex::encode(&h.finalize()[..6]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Behavioral,
    CompileDivergence,
    MutantNonequivalence,
}

/// A deduplicated finding with everything needed to replay it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugReport {
    pub id: String,
    pub signature: BugSignature,
    pub classification: Classification,
    pub parent: SourceUnit,
    pub mutant: MutantUnit,
    pub configs: Vec<CompileConfig>,
    /// Artifact fingerprint per config label; absent when that compile failed.
    pub fingerprints: BTreeMap<String, String>,
    pub compile_failures: BTreeMap<String, CompileFailure>,
    pub plan_seed: u64,
    pub rounds: u32,
    /// Keyed by config label; equivalence reports use `parent@O0` and `mutant@O0`.
    pub traces: BTreeMap<String, ExecutionTrace>,
    pub detail: Divergence,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimized: Option<String>,
    /// Number of work items that produced this signature.
    pub occurrences: usize,
    /// Mutant ids of the other occurrences, in campaign order.
    pub duplicates: Vec<UnitId>,
}

impl BugReport {
    pub fn to_json(&self) -> String {
        crate::canonical_json(self)
    }
}
