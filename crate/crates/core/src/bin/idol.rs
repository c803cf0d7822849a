use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use idol::campaign::{self, CampaignConfig};
use idol::compile::{CompileConfig, Compiler, ViaIrMode};
use idol::corpus::SourceUnit;
use idol::execute;
use idol::mutate::{self, TransformKind};
use idol::oracle::{self, Equivalence};

/// stdout that tolerates a closed pipe (`idol ... | head`).
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(name = "idol", version, about = "Differential testing of solc optimization levels")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign over a corpus.
    Run(RunArgs),
    /// Print (or write) seeded mutants of one file.
    Mutate {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        budget: usize,
        #[arg(long, value_parser = parse_kinds)]
        kinds: Option<Kinds>,
        /// Directory for `<stem>.m<N>.sol` plus provenance JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a mutant against its parent with the unoptimized build. Exit 20 when they differ.
    CheckEquiv {
        file: PathBuf,
        mutant: PathBuf,
        #[arg(long)]
        solc: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = execute::DEFAULT_ROUNDS)]
        rounds: u32,
    },
    /// Minimize a behavioral finding; writes `<id>.min.sol` next to the report.
    Reduce {
        report: PathBuf,
        /// Defaults to the compiler recorded in the report.
        #[arg(long)]
        solc: Option<PathBuf>,
    },
    /// Recompile and re-execute a finding. Exit 1 when it no longer reproduces.
    Replay {
        report: PathBuf,
        #[arg(long)]
        solc: Option<PathBuf>,
    },
    /// Parse a file and check that it prints back unchanged.
    Parse {
        file: PathBuf,
        /// Print the AST as JSON.
        #[arg(long)]
        dump_ast: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Repeat for several compilers.
    #[arg(long)]
    solc: Vec<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    units: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    rounds: Option<u32>,
    #[arg(long, value_parser = parse_kinds)]
    kinds: Option<Kinds>,
    /// Optimizer runs values, comma separated.
    #[arg(long, value_delimiter = ',')]
    runs: Option<Vec<u32>>,
    #[arg(long, value_enum)]
    via_ir: Option<ViaIr>,
    #[arg(long)]
    evm_version: Option<String>,
    /// Per-compile timeout in seconds.
    #[arg(long)]
    timeout: Option<u64>,
    /// Compare unmutated units only.
    #[arg(long)]
    dol_baseline: bool,
    /// Minimize behavioral findings.
    #[arg(long)]
    reduce: bool,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ViaIr {
    Off,
    Only,
    Both,
}

/// Comma-separated kind list, or `all`.
#[derive(Clone)]
struct Kinds(Vec<TransformKind>);

fn parse_kinds(s: &str) -> Result<Kinds, String> {
    mutate::parse_kinds(s).map(Kinds).map_err(|e| e.to_string())
}

impl RunArgs {
    fn into_config(self) -> Result<CampaignConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                CampaignConfig::from_toml(&text)?
            }
            None => CampaignConfig::default(),
        };
        if let Some(v) = self.corpus {
            cfg.corpus = v;
        }
        if !self.solc.is_empty() {
            cfg.solc = self.solc;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.units {
            cfg.units = v;
        }
        if let Some(v) = self.budget {
            cfg.budget = v;
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        if let Some(v) = self.out {
            cfg.out = v;
        }
        if let Some(v) = self.rounds {
            cfg.rounds = v;
        }
        if let Some(Kinds(v)) = self.kinds {
            cfg.kinds = v;
        }
        if let Some(v) = self.runs {
            cfg.matrix.runs = v;
        }
        if let Some(v) = self.via_ir {
            cfg.matrix.via_ir = match v {
                ViaIr::Off => ViaIrMode::Off,
                ViaIr::Only => ViaIrMode::Only,
                ViaIr::Both => ViaIrMode::Both,
            };
        }
        if let Some(v) = self.evm_version {
            cfg.matrix.evm_version = v;
        }
        if let Some(v) = self.timeout {
            cfg.compile_timeout_secs = v;
        }
        cfg.dol_baseline |= self.dol_baseline;
        cfg.reduce |= self.reduce;
        Ok(cfg)
    }
}

fn run(args: RunArgs) -> Result<u8> {
    let cfg = args.into_config()?;
    let outcome = campaign::run_campaign(&cfg)?;
    campaign::write_outputs(&outcome, &cfg.out)?;
    let c = &outcome.report.counts;
    out!(
        "{} units, {} mutants, {} findings -> {}",
        c.units_processed,
        c.mutants,
        outcome.findings.len(),
        cfg.out.join("campaign.json").display()
    );
    for f in &outcome.report.findings {
        out!("  {} {:?} {}", f.id, f.classification, f.report);
    }
    Ok(outcome.report.exit_code as u8)
}

fn cmd_mutate(file: &Path, seed: u64, budget: usize, kinds: Option<Kinds>, out: Option<PathBuf>) -> Result<u8> {
    let source = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let unit = SourceUnit::new(file.display().to_string(), source);
    let kinds = kinds.map_or_else(|| TransformKind::ALL.to_vec(), |k| k.0);
    let mutants = mutate::mutate_unit(&unit, seed, budget, &kinds);
    let Some(dir) = out else {
        out!("{}", serde_json::to_string_pretty(&mutants)?);
        return Ok(0);
    };
    std::fs::create_dir_all(&dir)?;
    let stem = file.file_stem().map_or("unit".into(), |s| s.to_string_lossy().into_owned());
    for (i, m) in mutants.iter().enumerate() {
        std::fs::write(dir.join(format!("{stem}.m{i}.sol")), &m.unit.source)?;
        std::fs::write(dir.join(format!("{stem}.m{i}.json")), idol::canonical_json(&m.applications))?;
    }
    out!("{} mutants written to {}", mutants.len(), dir.display());
    Ok(0)
}

fn check_equiv(file: &Path, mutant: &Path, solc: &Path, seed: u64, rounds: u32) -> Result<u8> {
    let parent = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let child = std::fs::read_to_string(mutant).with_context(|| format!("reading {}", mutant.display()))?;
    let compiler = Compiler::new(solc)?;
    let base = CompileConfig::baseline(solc);
    let mut built = compiler.compile_many(&[&parent, &child], &base)?.into_iter();
    let (parent, child) = (built.next().expect("two results"), built.next().expect("two results"));
    let parent = parent.map_err(|f| anyhow::anyhow!("parent does not compile: {f}"))?;
    let child = match child {
        Ok(a) => a,
        Err(f) => {
            out!("{}", serde_json::json!({ "equivalent": false, "reason": format!("mutant does not compile: {f}") }));
            return Ok(campaign::EXIT_NONEQUIVALENT as u8);
        }
    };
    let plan = execute::plan_calls(&parent.abi, seed, rounds)?;
    let verdict = oracle::check_mutant_equivalence(&execute::run(&parent, &plan)?, &execute::run(&child, &plan)?)?;
    out!("{}", serde_json::to_string_pretty(&verdict)?);
    Ok(match verdict {
        Equivalence::Equivalent => 0,
        Equivalence::Nonequivalent { .. } => campaign::EXIT_NONEQUIVALENT as u8,
    })
}

fn report_compiler(report: &oracle::BugReport, solc: Option<PathBuf>) -> Result<Compiler> {
    let path = match solc {
        Some(p) => p,
        None => match report.configs.first() {
            Some(c) => c.solc_path.clone(),
            None => bail!("report lists no configurations; pass --solc"),
        },
    };
    Ok(Compiler::new(&path)?)
}

fn cmd_reduce(path: &Path, solc: Option<PathBuf>) -> Result<u8> {
    let mut report = campaign::load_report(path)?;
    let compiler = report_compiler(&report, solc)?;
    let min = campaign::reduce(&report, &compiler)?;
    let min_path = path.with_file_name(format!("{}.min.sol", report.id));
    std::fs::write(&min_path, &min)?;
    out!("{} -> {} ({} bytes, was {})", report.id, min_path.display(), min.len(), report.mutant.unit.source.len());
    report.minimized = Some(min);
    std::fs::write(path, report.to_json())?;
    Ok(0)
}

fn cmd_replay(path: &Path, solc: Option<PathBuf>) -> Result<u8> {
    let report = campaign::load_report(path)?;
    let compiler = report_compiler(&report, solc)?;
    let outcome = campaign::replay(&report, &compiler)?;
    out!("{}", serde_json::to_string_pretty(&outcome)?);
    Ok(if outcome.reproduced { 0 } else { 1 })
}

fn cmd_parse(file: &Path, dump_ast: bool) -> Result<u8> {
    let src = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let ast = idol::syntax::parse(&src)?;
    if dump_ast {
        out!("{}", serde_json::to_string_pretty(&idol::syntax::ast_json(&ast))?);
        return Ok(0);
    }
    let printed = idol::syntax::reprint(&src, &ast)?;
    if printed == src {
        out!("ok: {} items, round trip exact", ast.items.len());
        Ok(0)
    } else {
        out!("round trip differs");
        Ok(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Mutate { file, seed, budget, kinds, out } => cmd_mutate(&file, seed, budget, kinds, out),
        Command::CheckEquiv { file, mutant, solc, seed, rounds } => check_equiv(&file, &mutant, &solc, seed, rounds),
        Command::Reduce { report, solc } => cmd_reduce(&report, solc),
        Command::Replay { report, solc } => cmd_replay(&report, solc),
        Command::Parse { file, dump_ast } => cmd_parse(&file, dump_ast),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
