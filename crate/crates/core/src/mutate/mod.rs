//! Reverse-optimization rewrites: site discovery, application and seeded
//! multi-step mutation of a unit.

mod analysis;
mod kinds;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{SourceUnit, UnitId};
use crate::syntax::{self, Ast, EditError, EditSet, ParseError, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TransformKind {
    #[serde(rename = "ReverseLICM")]
    ReverseLicm,
    ReverseLoopInversion,
    #[serde(rename = "ReverseCSE")]
    ReverseCse,
    LiteralObfuscation,
    KeccakDuplication,
    FunctionOutlining,
}

impl TransformKind {
    pub const ALL: [TransformKind; 6] = [
        TransformKind::ReverseLicm,
        TransformKind::ReverseLoopInversion,
        TransformKind::ReverseCse,
        TransformKind::LiteralObfuscation,
        TransformKind::KeccakDuplication,
        TransformKind::FunctionOutlining,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::ReverseLicm => "ReverseLICM",
            TransformKind::ReverseLoopInversion => "ReverseLoopInversion",
            TransformKind::ReverseCse => "ReverseCSE",
            TransformKind::LiteralObfuscation => "LiteralObfuscation",
            TransformKind::KeccakDuplication => "KeccakDuplication",
            TransformKind::FunctionOutlining => "FunctionOutlining",
        }
    }

    fn short(self) -> &'static str {
        match self {
            TransformKind::ReverseLicm => "licm",
            TransformKind::ReverseLoopInversion => "loop-inversion",
            TransformKind::ReverseCse => "cse",
            TransformKind::LiteralObfuscation => "literal",
            TransformKind::KeccakDuplication => "keccak",
            TransformKind::FunctionOutlining => "outlining",
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown transform kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for TransformKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim();
        TransformKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(wanted) || k.short() == wanted)
            .ok_or_else(|| UnknownKind(wanted.to_string()))
    }
}

/// Parses a comma-separated kind list; `all` selects every kind.
pub fn parse_kinds(list: &str) -> Result<Vec<TransformKind>, UnknownKind> {
    if list.trim() == "all" {
        return Ok(TransformKind::ALL.to_vec());
    }
    let mut kinds: Vec<TransformKind> =
        list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<_, _>>()?;
    kinds.sort();
    kinds.dedup();
    Ok(kinds)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Binding {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Site {
    pub kind: TransformKind,
    pub anchor: Span,
    pub bindings: Vec<Binding>,
}

impl Site {
    pub fn binding(&self, name: &str) -> Option<Span> {
        self.bindings.iter().find(|b| b.name == name).map(|b| b.span)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformApplication {
    pub kind: TransformKind,
    pub site: Site,
    pub edits: EditSet,
    pub mutant_id: UnitId,
    /// Id of the text the edits apply to.
    pub parent_id: UnitId,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantUnit {
    pub unit: SourceUnit,
    pub origin: UnitId,
    pub applications: Vec<TransformApplication>,
}

impl MutantUnit {
    /// The unmutated unit wrapped as a mutant with no applications.
    pub fn identity(unit: &SourceUnit) -> MutantUnit {
        MutantUnit { unit: unit.clone(), origin: unit.id.clone(), applications: Vec::new() }
    }

    pub fn is_identity(&self) -> bool {
        self.applications.is_empty()
    }

    pub fn kinds(&self) -> Vec<TransformKind> {
        self.applications.iter().map(|a| a.kind).collect()
    }

    /// Re-applies every recorded edit set to `parent` and checks the result.
    pub fn replay(&self, parent: &str) -> Result<String, MutateError> {
        let mut text = parent.to_string();
        for app in &self.applications {
            text = syntax::apply_edits(&text, &app.edits)?;
            if UnitId::of(&text) != app.mutant_id {
                return Err(MutateError::ReplayMismatch(app.mutant_id.clone()));
            }
        }
        Ok(text)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MutateError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Edit(#[from] EditError),
    #[error("{kind} site at {anchor:?} is not present in this source")]
    StaleSite { kind: TransformKind, anchor: Span },
    #[error("{kind} rewrite produced unparseable text: {error}")]
    Unparseable { kind: TransformKind, error: ParseError },
    #[error("replayed edits do not reproduce mutant {0}")]
    ReplayMismatch(UnitId),
}

/// Applicable sites of one kind in source order.
pub fn discover_sites(ast: &Ast, src: &str, kind: TransformKind) -> Vec<Site> {
    kinds::discover(ast, src, kind).into_iter().map(|c| c.site).collect()
}

/// Sites of all `kinds`, ordered by anchor start, then kind.
pub fn discover_all(ast: &Ast, src: &str, kinds: &[TransformKind]) -> Vec<Site> {
    let mut sites: Vec<Site> = kinds.iter().flat_map(|&k| discover_sites(ast, src, k)).collect();
    sites.sort_by_key(|s| (s.anchor.start, s.kind, s.anchor.end));
    sites
}

/// Applies one site to `source`. The site must be rediscoverable on exactly
/// this text, otherwise it is refused as stale.
pub fn apply(source: &str, kind: TransformKind, site: &Site, seed: u64) -> Result<(String, TransformApplication), MutateError> {
    let ast = syntax::parse(source)?;
    let candidate = kinds::discover(&ast, source, kind)
        .into_iter()
        .find(|c| c.site == *site)
        .ok_or(MutateError::StaleSite { kind, anchor: site.anchor })?;
    let edits = candidate.rewrite.for_seed(seed);
    let mutated = syntax::apply_edits(source, &edits)?;
    syntax::parse(&mutated).map_err(|error| MutateError::Unparseable { kind, error })?;
    let app = TransformApplication {
        kind,
        site: candidate.site,
        edits,
        mutant_id: UnitId::of(&mutated),
        parent_id: UnitId::of(source),
        seed,
    };
    Ok((mutated, app))
}

pub const MAX_APPLICATIONS: usize = 3;

fn unit_rng(unit: &UnitId, seed: u64) -> ChaCha8Rng {
    let digest = Sha256::new().chain_update(unit.0.as_bytes()).chain_update(seed.to_le_bytes()).finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Up to `budget` distinct mutants, each built from 1 to 3 seeded draws
/// (a kind among those with sites, then one of its sites) with rediscovery
/// after every application.
pub fn mutate_unit(unit: &SourceUnit, seed: u64, budget: usize, kinds: &[TransformKind]) -> Vec<MutantUnit> {
    let mut rng = unit_rng(&unit.id, seed);
    let mut seen = HashSet::from([unit.id.clone()]);
    let mut mutants = Vec::new();
    for _ in 0..budget {
        let steps = rng.random_range(1..=MAX_APPLICATIONS);
        let mut text = unit.source.clone();
        let mut applications = Vec::new();
        for _ in 0..steps {
            let Ok(ast) = syntax::parse(&text) else { break };
            let sites = discover_all(&ast, &text, kinds);
            if sites.is_empty() {
                break;
            }
            let mut present: Vec<TransformKind> = sites.iter().map(|s| s.kind).collect();
            present.sort_unstable();
            present.dedup();
            let kind = present[rng.random_range(0..present.len())];
            let of_kind: Vec<&Site> = sites.iter().filter(|s| s.kind == kind).collect();
            let site = of_kind[rng.random_range(0..of_kind.len())];
            let app_seed: u64 = rng.random();
            match apply(&text, site.kind, site, app_seed) {
                Ok((next, app)) => {
                    text = next;
                    applications.push(app);
                }
                Err(e) => {
                    log::warn!("{}: {} site skipped: {e}", unit.path, site.kind);
                    break;
                }
            }
        }
        if applications.is_empty() {
            if mutants.is_empty() {
                break;
            }
            continue;
        }
        let id = UnitId::of(&text);
        if !seen.insert(id) {
            continue;
        }
        mutants.push(MutantUnit {
            unit: SourceUnit::new(unit.path.clone(), text),
            origin: unit.id.clone(),
            applications,
        });
    }
    mutants
}
