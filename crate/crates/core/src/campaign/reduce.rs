//! Greedy chunk-removal minimization of behavioral findings.

use std::collections::BTreeMap;

use crate::compile::{CompileConfig, CompileResult, Compiler};
use crate::execute::{self, ExecutionTrace};
use crate::oracle::{self, BugReport, Classification, Divergence};
use crate::syntax::{self, Block, Item, Span, Stmt, StmtKind};

use super::{retarget, CampaignError};

#[derive(Debug, thiserror::Error)]
pub enum ReduceError {
    #[error("only behavioral findings are reduced")]
    NotBehavioral,
    #[error("the divergence does not reproduce; original kept")]
    NotReproducible,
    #[error(transparent)]
    Campaign(#[from] CampaignError),
}

/// Candidates tested per compiler round trip.
const WINDOW: usize = 8;

/// Compile, plan from the baseline ABI, execute and compare, for many sources at once.
pub(crate) fn evaluate_many(
    sources: &[&str],
    configs: &[CompileConfig],
    compiler: &Compiler,
    plan_seed: u64,
    rounds: u32,
) -> Result<Vec<Option<Divergence>>, CampaignError> {
    let mut compiled: Vec<Vec<CompileResult>> = Vec::with_capacity(configs.len());
    for cfg in configs {
        compiled.push(compiler.compile_many(sources, cfg)?);
    }
    let base = configs.iter().position(CompileConfig::is_baseline).ok_or(oracle::OracleError::NoBaseline)?;
    let mut out = Vec::with_capacity(sources.len());
    for i in 0..sources.len() {
        let outcomes: Vec<_> = configs.iter().zip(&compiled).map(|(c, r)| (c, r[i].as_ref().err())).collect();
        if let Some(d) = oracle::compile_divergence(&outcomes) {
            out.push(Some(d));
            continue;
        }
        let Ok(base_art) = &compiled[base][i] else {
            out.push(None);
            continue;
        };
        let plan = execute::plan_calls(&base_art.abi, plan_seed, rounds)?;
        let mut traces: BTreeMap<usize, ExecutionTrace> = BTreeMap::new();
        for (c, r) in compiled.iter().enumerate() {
            traces.insert(c, execute::run(r[i].as_ref().expect("all configs compiled"), &plan)?);
        }
        let pairs: Vec<_> = configs.iter().enumerate().map(|(c, cfg)| (cfg, &traces[&c])).collect();
        out.push(oracle::compare(&pairs)?.divergence().cloned());
    }
    Ok(out)
}

pub(crate) fn evaluate(
    source: &str,
    configs: &[CompileConfig],
    compiler: &Compiler,
    plan_seed: u64,
    rounds: u32,
) -> Result<Option<Divergence>, CampaignError> {
    Ok(evaluate_many(&[source], configs, compiler, plan_seed, rounds)?.remove(0))
}

fn block_chunks(b: &Block, out: &mut Vec<Span>) {
    for s in &b.stmts {
        out.push(s.span);
        stmt_chunks(s, out);
    }
}

fn stmt_chunks(s: &Stmt, out: &mut Vec<Span>) {
    match &s.kind {
        StmtKind::Block(b) => block_chunks(b, out),
        _ => {
            for sub in s.sub_stmts() {
                match &sub.kind {
                    StmtKind::Block(b) => block_chunks(b, out),
                    _ => stmt_chunks(sub, out),
                }
            }
        }
    }
}

/// Removable spans, outermost first within source order: top-level items,
/// contract members, then statements of function bodies.
fn chunks(src: &str) -> Vec<Span> {
    let Ok(ast) = syntax::parse(src) else { return Vec::new() };
    let mut out = Vec::new();
    for item in &ast.items {
        out.push(item.span());
        let members = match item {
            Item::Contract(c) => c.members.iter().collect(),
            _ => Vec::new(),
        };
        for m in members {
            out.push(m.span());
            if let syntax::Member::Function(f) = m {
                if let Some(body) = &f.body {
                    block_chunks(body, &mut out);
                }
            }
        }
        if let Item::Function(f) = item {
            if let Some(body) = &f.body {
                block_chunks(body, &mut out);
            }
        }
    }
    out.sort_by_key(|s| (s.start, std::cmp::Reverse(s.end)));
    out.dedup();
    out
}

/// Deletes `span`, taking the whole line when nothing else is left on it.
fn remove(src: &str, span: Span) -> String {
    let line_start = src[..span.start].rfind('\n').map_or(0, |i| i + 1);
    let line_end = src[span.end..].find('\n').map_or(src.len(), |i| span.end + i + 1);
    let before = &src[line_start..span.start];
    let after = &src[span.end..line_end];
    if before.trim().is_empty() && after.trim().is_empty() {
        format!("{}{}", &src[..line_start], &src[line_end..])
    } else {
        format!("{}{}", &src[..span.start], &src[span.end..])
    }
}

/// Minimizes the mutant source of a behavioral finding. Every accepted step
/// keeps the divergence field and configuration pair and compiles under all
/// configurations; stops when no single chunk can be removed.
pub fn reduce(report: &BugReport, compiler: &Compiler) -> Result<String, ReduceError> {
    if report.classification != Classification::Behavioral {
        return Err(ReduceError::NotBehavioral);
    }
    let configs = retarget(&report.configs, compiler.solc_path());
    let want = &report.detail;
    let keeps = |d: &Option<Divergence>| {
        d.as_ref().is_some_and(|d| {
            d.field == want.field && d.left_config == want.left_config && d.right_config == want.right_config
        })
    };
    let original = report.mutant.unit.source.clone();
    if !keeps(&evaluate(&original, &configs, compiler, report.plan_seed, report.rounds)?) {
        return Err(ReduceError::NotReproducible);
    }
    let mut current = original;
    let mut cursor = 0;
    loop {
        let candidates: Vec<String> = chunks(&current)
            .into_iter()
            .map(|span| remove(&current, span))
            .filter(|c| c.len() < current.len() && crate::corpus::check_supported(c).is_ok())
            .collect();
        let mut accepted = None;
        let mut at = cursor.min(candidates.len());
        while at < candidates.len() {
            let window: Vec<&str> = candidates[at..(at + WINDOW).min(candidates.len())].iter().map(String::as_str).collect();
            let verdicts = evaluate_many(&window, &configs, compiler, report.plan_seed, report.rounds)?;
            if let Some(k) = verdicts.iter().position(&keeps) {
                accepted = Some(at + k);
                break;
            }
            at += window.len();
        }
        match accepted {
            Some(k) => {
                current = candidates[k].clone();
                cursor = k;
            }
            None if cursor > 0 => cursor = 0,
            None => break,
        }
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_are_outer_first() {
        let src = "contract C {\n    uint x;\n    function f() public {\n        x = 1;\n        if (x > 0) { x = 2; }\n    }\n}\n";
        let texts: Vec<&str> = chunks(src).iter().map(|s| s.slice(src)).collect();
        assert!(texts[0].starts_with("contract C"));
        assert_eq!(texts[1], "uint x;");
        assert!(texts[2].starts_with("function f()"));
        assert_eq!(&texts[3..], &["x = 1;", "if (x > 0) { x = 2; }", "x = 2;"]);
    }

    #[test]
    fn removing_a_whole_line_drops_it() {
        let src = "a\n    x = 1;\nb\n";
        assert_eq!(remove(src, Span::new(6, 12)), "a\nb\n");
        assert_eq!(remove("{ x; y; }", Span::new(2, 4)), "{  y; }");
    }
}
