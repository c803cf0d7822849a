//! End-to-end pipeline: sample, mutate, compile across the matrix, execute,
//! compare, deduplicate, reduce and report.

mod reduce;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::compile::{config_matrix, CompileConfig, CompileError, CompileFailure, CompileResult, CompileStats, Compiler, MatrixOptions};
use crate::corpus::{self, CorpusError, CorpusIndex, SourceUnit, UnitId};
use crate::execute::{self, CallPlan, ExecError, ExecutionTrace};
use crate::mutate::{self, MutantUnit, TransformKind};
use crate::oracle::{self, BugReport, Classification, Divergence, Equivalence, Field, OracleError, Verdict};

pub use reduce::{reduce, ReduceError};

/// Name of the PRNG behind every seeded draw.
pub const PRNG: &str = "chacha8";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub corpus: PathBuf,
    pub solc: Vec<PathBuf>,
    pub seed: u64,
    pub units: usize,
    /// Maximum mutants per unit.
    pub budget: usize,
    pub kinds: Vec<TransformKind>,
    pub matrix: MatrixOptions,
    pub jobs: usize,
    pub out: PathBuf,
    pub rounds: u32,
    pub reduce: bool,
    pub dol_baseline: bool,
    pub compile_timeout_secs: u64,
    pub prng: String,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            corpus: PathBuf::new(),
            solc: Vec::new(),
            seed: 0,
            units: 100,
            budget: 3,
            kinds: TransformKind::ALL.to_vec(),
            matrix: MatrixOptions::default(),
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            out: PathBuf::from("idol-out"),
            rounds: execute::DEFAULT_ROUNDS,
            reduce: false,
            dol_baseline: false,
            compile_timeout_secs: crate::compile::DEFAULT_TIMEOUT.as_secs(),
            prng: PRNG.into(),
        }
    }
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<CampaignConfig, CampaignError> {
        toml::from_str(text).map_err(|e| CampaignError::Config(e.to_string()))
    }

    fn validate(&self) -> Result<(), CampaignError> {
        let bad = |m: String| Err(CampaignError::Config(m));
        if self.solc.is_empty() {
            return bad("no solc binary configured".into());
        }
        if let Some(p) = self.solc.iter().find(|p| !p.is_file()) {
            return bad(format!("solc binary {} not found", p.display()));
        }
        if !self.corpus.is_dir() {
            return bad(format!("corpus {} is not a directory", self.corpus.display()));
        }
        if self.prng != PRNG {
            return bad(format!("unsupported prng {:?}; only {PRNG} is available", self.prng));
        }
        if !self.matrix.include_unoptimized {
            return bad("the unoptimized baseline is required for comparison".into());
        }
        if self.rounds == 0 || self.jobs == 0 {
            return bad("rounds and jobs must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CampaignError + '_ {
    move |source| CampaignError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileCounts {
    pub success: usize,
    pub failure: usize,
    pub timeout: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub agree: usize,
    pub divergence: usize,
    pub inconclusive: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub units_sampled: usize,
    pub units_processed: usize,
    pub units_without_sites: usize,
    pub mutants: usize,
    /// Parents plus mutants; each is compiled under every matrix config.
    pub variants: usize,
    pub compiles: CompileCounts,
    pub executions: usize,
    pub equivalence_passed: usize,
    pub equivalence_failed: usize,
    pub verdicts: VerdictCounts,
    pub compile_divergences: usize,
}

impl Counts {
    fn add(&mut self, o: &Counts) {
        self.units_sampled += o.units_sampled;
        self.units_processed += o.units_processed;
        self.units_without_sites += o.units_without_sites;
        self.mutants += o.mutants;
        self.variants += o.variants;
        self.compiles.success += o.compiles.success;
        self.compiles.failure += o.compiles.failure;
        self.compiles.timeout += o.compiles.timeout;
        self.executions += o.executions;
        self.equivalence_passed += o.equivalence_passed;
        self.equivalence_failed += o.equivalence_failed;
        self.verdicts.agree += o.verdicts.agree;
        self.verdicts.divergence += o.verdicts.divergence;
        self.verdicts.inconclusive += o.verdicts.inconclusive;
        self.compile_divergences += o.compile_divergences;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindStats {
    pub sites_found: usize,
    pub applied: usize,
    pub mutants: usize,
    pub equivalence_passed: usize,
    pub equivalence_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitStatus {
    pub solc_version: String,
    pub path: String,
    pub id: UnitId,
    /// `processed`, `no-sites`, `compile-failed` or `error`.
    pub status: String,
    pub mutants: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolcInfo {
    pub path: PathBuf,
    pub version: String,
    pub version_output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindingSummary {
    pub id: String,
    pub classification: Classification,
    pub signature: oracle::BugSignature,
    pub occurrences: usize,
    pub report: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimized: Option<String>,
}

/// Fields that vary between otherwise identical runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_seconds: f64,
    pub compiler: BTreeMap<String, CompileStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub mode: String,
    pub config: CampaignConfig,
    pub solc: Vec<SolcInfo>,
    pub counts: Counts,
    pub kinds: BTreeMap<TransformKind, KindStats>,
    pub units: Vec<UnitStatus>,
    pub findings: Vec<FindingSummary>,
    pub exit_code: i32,
    pub timing: Timing,
}

impl CampaignReport {
    pub fn to_json(&self) -> String {
        crate::canonical_json(self)
    }

    /// Canonical JSON without the `timing` section.
    pub fn stable_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("timing");
        }
        crate::canonical_json(&v)
    }

    pub fn signature_ids(&self) -> Vec<String> {
        self.findings.iter().map(|f| f.id.clone()).collect()
    }

    pub fn count(&self, class: Classification) -> usize {
        self.findings.iter().filter(|f| f.classification == class).count()
    }
}

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_BEHAVIORAL: i32 = 10;
pub const EXIT_COMPILE_DIVERGENCE: i32 = 11;
pub const EXIT_NONEQUIVALENT: i32 = 20;

pub fn exit_code(findings: &[BugReport]) -> i32 {
    let has = |c| findings.iter().any(|f| f.classification == c);
    if has(Classification::MutantNonequivalence) {
        EXIT_NONEQUIVALENT
    } else if has(Classification::Behavioral) {
        EXIT_BEHAVIORAL
    } else if has(Classification::CompileDivergence) {
        EXIT_COMPILE_DIVERGENCE
    } else {
        EXIT_CLEAN
    }
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub report: CampaignReport,
    pub findings: Vec<BugReport>,
    pub index: Vec<CorpusIndex>,
}

/// Seed of the call plan for one unit.
pub fn plan_seed(unit: &UnitId, seed: u64) -> u64 {
    let d = Sha256::new().chain_update(b"plan").chain_update(unit.0.as_bytes()).chain_update(seed.to_le_bytes()).finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// IDOL campaign (or DOL when `config.dol_baseline` is set). Writes nothing.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignOutcome, CampaignError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| CampaignError::Config(e.to_string()))?;
    pool.install(|| run_inner(config))
}

/// The same pipeline with mutation disabled: every unit is compared only against itself.
pub fn run_dol_baseline(config: &CampaignConfig) -> Result<CampaignOutcome, CampaignError> {
    run_campaign(&CampaignConfig { dol_baseline: true, ..config.clone() })
}

fn run_inner(config: &CampaignConfig) -> Result<CampaignOutcome, CampaignError> {
    let started = Instant::now();
    let cache_dir = config.out.join("cache");
    let mut counts = Counts::default();
    let mut kinds: BTreeMap<TransformKind, KindStats> =
        config.kinds.iter().map(|k| (*k, KindStats::default())).collect();
    let mut units = Vec::new();
    let mut findings: Vec<BugReport> = Vec::new();
    let mut solc = Vec::new();
    let mut index = Vec::new();
    let mut timing = Timing::default();
    for path in &config.solc {
        let compiler = Compiler::new(path)?
            .with_cache(&cache_dir)?
            .with_timeout(Duration::from_secs(config.compile_timeout_secs));
        log::info!("solc {} at {}", compiler.version(), path.display());
        let (idx, valid) = corpus::ingest(&config.corpus, &compiler)?;
        let sampled = corpus::sample(&valid, config.seed, config.units);
        let part = run_for_compiler(config, &compiler, &sampled)?;
        counts.add(&part.counts);
        for (k, s) in part.kinds {
            let e = kinds.entry(k).or_default();
            e.sites_found += s.sites_found;
            e.applied += s.applied;
            e.mutants += s.mutants;
            e.equivalence_passed += s.equivalence_passed;
            e.equivalence_failed += s.equivalence_failed;
        }
        units.extend(part.units);
        findings.extend(part.findings);
        timing.compiler.insert(compiler.version().to_string(), compiler.stats());
        solc.push(SolcInfo {
            path: path.clone(),
            version: compiler.version().to_string(),
            version_output: compiler.version_output().to_string(),
        });
        index.push(idx);
    }
    if config.reduce {
        for f in findings.iter_mut().filter(|f| f.classification == Classification::Behavioral) {
            let compiler = Compiler::new(&f.configs[0].solc_path)?.with_cache(&cache_dir)?;
            match reduce(f, &compiler) {
                Ok(min) => f.minimized = Some(min),
                Err(e) => log::warn!("reduction of {} aborted: {e}", f.id),
            }
        }
    }
    let summaries = findings
        .iter()
        .map(|f| FindingSummary {
            id: f.id.clone(),
            classification: f.classification,
            signature: f.signature.clone(),
            occurrences: f.occurrences,
            report: format!("findings/{}.json", f.id),
            minimized: f.minimized.as_ref().map(|_| format!("findings/{}.min.sol", f.id)),
        })
        .collect();
    timing.wall_clock_seconds = started.elapsed().as_secs_f64();
    let report = CampaignReport {
        mode: if config.dol_baseline { "dol" } else { "idol" }.into(),
        config: config.clone(),
        solc,
        counts,
        kinds,
        units,
        findings: summaries,
        exit_code: exit_code(&findings),
        timing,
    };
    Ok(CampaignOutcome { report, findings, index })
}

struct Part {
    counts: Counts,
    kinds: BTreeMap<TransformKind, KindStats>,
    units: Vec<UnitStatus>,
    findings: Vec<BugReport>,
}

/// One parent or mutant scheduled for the matrix.
struct Variant {
    unit: usize,
    mutant: MutantUnit,
}

/// What the pipeline concluded about one variant.
enum Judgement {
    Skipped,
    Nonequivalent(Divergence),
    CompileDivergence(Divergence),
    Verdict(Verdict),
}

struct VariantResult {
    judgement: Judgement,
    traces: BTreeMap<String, ExecutionTrace>,
    executions: usize,
}

fn run_for_compiler(config: &CampaignConfig, compiler: &Compiler, sampled: &[SourceUnit]) -> Result<Part, CampaignError> {
    let version = compiler.version().to_string();
    let matrix = config_matrix(compiler.solc_path(), &config.matrix);
    let baseline_at = matrix.iter().position(CompileConfig::is_baseline).expect("validated");
    let mut counts = Counts { units_sampled: sampled.len(), ..Counts::default() };
    let mut kinds: BTreeMap<TransformKind, KindStats> = BTreeMap::new();

    // mutation
    let mutated: Vec<(Vec<MutantUnit>, Vec<mutate::Site>)> = sampled
        .par_iter()
        .map(|u| {
            if config.dol_baseline {
                return (Vec::new(), Vec::new());
            }
            (mutate::mutate_unit(u, config.seed, config.budget, &config.kinds), syntax_sites(u, &config.kinds))
        })
        .collect();
    let mut variants = Vec::new();
    for (i, (unit, (mutants, _))) in sampled.iter().zip(&mutated).enumerate() {
        variants.push(Variant { unit: i, mutant: MutantUnit::identity(unit) });
        variants.extend(mutants.iter().cloned().map(|m| Variant { unit: i, mutant: m }));
    }
    if !config.dol_baseline {
        for (mutants, sites) in &mutated {
            for site in sites {
                kinds.entry(site.kind).or_default().sites_found += 1;
            }
            for m in mutants {
                for k in m.kinds() {
                    kinds.entry(k).or_default().applied += 1;
                }
                let mut distinct = m.kinds();
                distinct.sort();
                distinct.dedup();
                for k in distinct {
                    kinds.entry(k).or_default().mutants += 1;
                }
            }
        }
    }
    counts.mutants = variants.iter().filter(|v| !v.mutant.is_identity()).count();
    counts.variants = variants.len();

    // compile matrix, batched per config
    let sources: Vec<&str> = variants.iter().map(|v| v.mutant.unit.source.as_str()).collect();
    let mut compiled: Vec<Vec<CompileResult>> = Vec::with_capacity(matrix.len());
    for cfg in &matrix {
        log::info!("compiling {} variants at {}", sources.len(), cfg.label());
        compiled.push(compiler.compile_many(&sources, cfg)?);
    }
    for per_cfg in &compiled {
        for r in per_cfg {
            match r {
                Ok(_) => counts.compiles.success += 1,
                Err(CompileFailure::Error { .. }) => counts.compiles.failure += 1,
                Err(CompileFailure::Timeout { .. }) => counts.compiles.timeout += 1,
            }
        }
    }
    let result_of = |v: usize, c: usize| &compiled[c][v];

    // one plan per unit from the parent's baseline ABI
    let parent_of: HashMap<usize, usize> =
        variants.iter().enumerate().filter(|(_, v)| v.mutant.is_identity()).map(|(i, v)| (v.unit, i)).collect();
    let plans: Vec<Option<CallPlan>> = (0..sampled.len())
        .map(|u| match result_of(parent_of[&u], baseline_at) {
            Ok(a) => execute::plan_calls(&a.abi, plan_seed(&sampled[u].id, config.seed), config.rounds).ok(),
            Err(_) => None,
        })
        .collect();

    // baseline traces for every variant
    log::info!("executing baseline traces");
    let baseline: Vec<Option<Result<ExecutionTrace, ExecError>>> = (0..variants.len())
        .into_par_iter()
        .map(|i| {
            let plan = plans[variants[i].unit].as_ref()?;
            let art = result_of(i, baseline_at).as_ref().ok()?;
            Some(execute::run(art, plan))
        })
        .collect();

    log::info!("judging {} variants", variants.len());
    let results: Vec<Result<VariantResult, String>> = (0..variants.len())
        .into_par_iter()
        .map(|i| {
            let v = &variants[i];
            let Some(plan) = plans[v.unit].as_ref() else {
                return Ok(VariantResult { judgement: Judgement::Skipped, traces: BTreeMap::new(), executions: 0 });
            };
            let mut traces = BTreeMap::new();
            let mut executions = 0;
            let base_label = matrix[baseline_at].label();
            let own = match &baseline[i] {
                Some(Ok(t)) => {
                    executions += 1;
                    Some(t.clone())
                }
                Some(Err(e)) => return Err(e.to_string()),
                None => None,
            };
            if !v.mutant.is_identity() {
                let parent = match &baseline[parent_of[&v.unit]] {
                    Some(Ok(t)) => t,
                    _ => return Err("parent baseline trace unavailable".into()),
                };
                traces.insert(format!("parent@{base_label}"), parent.clone());
                let eq = match &own {
                    Some(t) => {
                        traces.insert(format!("mutant@{base_label}"), t.clone());
                        oracle::check_mutant_equivalence(parent, t).map_err(|e| e.to_string())?
                    }
                    None => {
                        let failure = result_of(i, baseline_at).as_ref().expect_err("no trace means no artifact");
                        Equivalence::Nonequivalent {
                            detail: Box::new(Divergence {
                                call: None,
                                selector: "compile".into(),
                                left_config: "parent".into(),
                                right_config: "mutant".into(),
                                field: Field::Compile,
                                left: "ok".into(),
                                right: oracle::failure_class(failure),
                            }),
                        }
                    }
                };
                if let Equivalence::Nonequivalent { mut detail } = eq {
                    detail.right_config = format!("mutant[{}]", kind_list(&v.mutant));
                    return Ok(VariantResult { judgement: Judgement::Nonequivalent(*detail), traces, executions });
                }
                traces.clear();
            }
            let outcomes: Vec<(&CompileConfig, Option<&CompileFailure>)> =
                matrix.iter().enumerate().map(|(c, cfg)| (cfg, result_of(i, c).as_ref().err())).collect();
            if let Some(d) = oracle::compile_divergence(&outcomes) {
                return Ok(VariantResult { judgement: Judgement::CompileDivergence(d), traces, executions });
            }
            let Some(own) = own else {
                // fails everywhere: nothing to compare
                return Ok(VariantResult { judgement: Judgement::Skipped, traces, executions });
            };
            traces.insert(base_label, own);
            for (c, cfg) in matrix.iter().enumerate().filter(|(c, _)| *c != baseline_at) {
                let art = result_of(i, c).as_ref().expect("no compile divergence");
                traces.insert(cfg.label(), execute::run(art, plan).map_err(|e| e.to_string())?);
                executions += 1;
            }
            let pairs: Vec<(&CompileConfig, &ExecutionTrace)> = matrix.iter().map(|c| (c, &traces[&c.label()])).collect();
            let verdict = oracle::compare(&pairs).map_err(|e| e.to_string())?;
            Ok(VariantResult { judgement: Judgement::Verdict(verdict), traces, executions })
        })
        .collect();

    // single-writer accumulation in canonical order
    let mut unit_status: Vec<UnitStatus> = sampled
        .iter()
        .zip(&mutated)
        .map(|(u, (m, _))| UnitStatus {
            solc_version: version.clone(),
            path: u.path.clone(),
            id: u.id.clone(),
            status: if config.dol_baseline || !m.is_empty() { "processed" } else { "no-sites" }.into(),
            mutants: m.len(),
            detail: None,
        })
        .collect();
    counts.units_without_sites = unit_status.iter().filter(|s| s.status == "no-sites").count();
    let mut dedup: BTreeMap<String, usize> = BTreeMap::new();
    let mut findings: Vec<BugReport> = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let v = &variants[i];
        let status = &mut unit_status[v.unit];
        if plans[v.unit].is_none() {
            status.status = "compile-failed".into();
            continue;
        }
        let r = match r {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{}: {e}", v.mutant.unit.path);
                status.status = "error".into();
                status.detail.get_or_insert(e);
                continue;
            }
        };
        counts.executions += r.executions;
        let (class, detail) = match r.judgement {
            Judgement::Skipped => continue,
            Judgement::Nonequivalent(d) => {
                counts.equivalence_failed += 1;
                for k in distinct_kinds(&v.mutant) {
                    kinds.entry(k).or_default().equivalence_failed += 1;
                }
                (Classification::MutantNonequivalence, d)
            }
            Judgement::CompileDivergence(d) => {
                pass_equivalence(&mut counts, &mut kinds, &v.mutant);
                counts.compile_divergences += 1;
                (Classification::CompileDivergence, d)
            }
            Judgement::Verdict(verdict) => {
                pass_equivalence(&mut counts, &mut kinds, &v.mutant);
                match verdict {
                    Verdict::Agree => {
                        counts.verdicts.agree += 1;
                        continue;
                    }
                    Verdict::Inconclusive { .. } => {
                        counts.verdicts.inconclusive += 1;
                        continue;
                    }
                    Verdict::Divergence { detail } => {
                        counts.verdicts.divergence += 1;
                        (Classification::Behavioral, detail)
                    }
                }
            }
        };
        let signature = oracle::signature_of(&detail, &version);
        let id = signature.id();
        if let Some(&at) = dedup.get(&id) {
            findings[at].occurrences += 1;
            findings[at].duplicates.push(v.mutant.unit.id.clone());
            continue;
        }
        dedup.insert(id.clone(), findings.len());
        let fingerprints = matrix
            .iter()
            .enumerate()
            .filter_map(|(c, cfg)| result_of(i, c).as_ref().ok().map(|a| (cfg.label(), a.fingerprint())))
            .collect();
        let compile_failures = matrix
            .iter()
            .enumerate()
            .filter_map(|(c, cfg)| result_of(i, c).as_ref().err().map(|f| (cfg.label(), f.clone())))
            .collect();
        findings.push(BugReport {
            id,
            signature,
            classification: class,
            parent: sampled[v.unit].clone(),
            mutant: v.mutant.clone(),
            configs: matrix.clone(),
            fingerprints,
            compile_failures,
            plan_seed: plans[v.unit].as_ref().expect("planned").seed,
            rounds: config.rounds,
            traces: r.traces,
            detail,
            minimized: None,
            occurrences: 1,
            duplicates: Vec::new(),
        });
    }
    counts.units_processed = unit_status.iter().filter(|s| s.status == "processed" || s.status == "no-sites").count();
    Ok(Part { counts, kinds, units: unit_status, findings })
}

fn syntax_sites(unit: &SourceUnit, kinds: &[TransformKind]) -> Vec<mutate::Site> {
    crate::syntax::parse(&unit.source).map(|ast| mutate::discover_all(&ast, &unit.source, kinds)).unwrap_or_default()
}

fn distinct_kinds(m: &MutantUnit) -> Vec<TransformKind> {
    let mut k = m.kinds();
    k.sort();
    k.dedup();
    k
}

fn kind_list(m: &MutantUnit) -> String {
    distinct_kinds(m).iter().map(|k| k.name()).collect::<Vec<_>>().join(",")
}

fn pass_equivalence(counts: &mut Counts, kinds: &mut BTreeMap<TransformKind, KindStats>, m: &MutantUnit) {
    if m.is_identity() {
        return;
    }
    counts.equivalence_passed += 1;
    for k in distinct_kinds(m) {
        kinds.entry(k).or_default().equivalence_passed += 1;
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CampaignError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Writes `campaign.json`, `corpus.index.json` and `findings/`.
pub fn write_outputs(outcome: &CampaignOutcome, out: &Path) -> Result<(), CampaignError> {
    let findings_dir = out.join("findings");
    fs::create_dir_all(&findings_dir).map_err(io_err(&findings_dir))?;
    for f in &outcome.findings {
        write_atomic(&findings_dir.join(format!("{}.json", f.id)), &f.to_json())?;
        if let Some(min) = &f.minimized {
            write_atomic(&findings_dir.join(format!("{}.min.sol", f.id)), min)?;
        }
    }
    let index = match outcome.index.as_slice() {
        [one] => crate::canonical_json(one),
        many => crate::canonical_json(&many),
    };
    write_atomic(&out.join("corpus.index.json"), &index)?;
    write_atomic(&out.join("campaign.json"), &outcome.report.to_json())
}

pub fn load_report(path: &Path) -> Result<BugReport, CampaignError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| CampaignError::Json { path: path.to_path_buf(), source })
}

/// Outcome of recompiling and re-executing a report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Replay {
    pub reproduced: bool,
    pub detail: Option<Divergence>,
}

/// Re-derives the finding from the report's embedded sources, configs and plan seed.
pub fn replay(report: &BugReport, compiler: &Compiler) -> Result<Replay, CampaignError> {
    let configs = retarget(&report.configs, compiler.solc_path());
    let baseline = configs.iter().find(|c| c.is_baseline()).ok_or(OracleError::NoBaseline)?;
    let detail = match report.classification {
        Classification::MutantNonequivalence => {
            let parent = compiler.compile(&report.parent.source, baseline)?;
            let mutant = compiler.compile(&report.mutant.unit.source, baseline)?;
            match (parent, mutant) {
                (Ok(p), Ok(m)) => {
                    let plan = execute::plan_calls(&p.abi, report.plan_seed, report.rounds)?;
                    match oracle::check_mutant_equivalence(&execute::run(&p, &plan)?, &execute::run(&m, &plan)?)? {
                        Equivalence::Nonequivalent { mut detail } => {
                            detail.right_config = report.detail.right_config.clone();
                            Some(*detail)
                        }
                        Equivalence::Equivalent => None,
                    }
                }
                (Ok(_), Err(f)) => Some(Divergence {
                    call: None,
                    selector: "compile".into(),
                    left_config: "parent".into(),
                    right_config: report.detail.right_config.clone(),
                    field: Field::Compile,
                    left: "ok".into(),
                    right: oracle::failure_class(&f),
                }),
                _ => None,
            }
        }
        _ => reduce::evaluate(&report.mutant.unit.source, &configs, compiler, report.plan_seed, report.rounds)?,
    };
    let reproduced = detail
        .as_ref()
        .is_some_and(|d| oracle::signature_of(d, compiler.version()) == report.signature);
    Ok(Replay { reproduced, detail })
}

/// The report's configs pointed at another solc binary.
pub(crate) fn retarget(configs: &[CompileConfig], solc: &Path) -> Vec<CompileConfig> {
    configs.iter().map(|c| CompileConfig { solc_path: solc.to_path_buf(), ..c.clone() }).collect()
}
