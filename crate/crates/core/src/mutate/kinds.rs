//! Per-kind applicability predicates and rewrites.

use std::collections::BTreeMap;

use super::analysis::{
    fresh_index, infer_type, is_abi_encode, is_integer_type, is_value_type, line_indent, lookup_type,
    mutable_functions, purity, token_texts, walk_function, Effects, Env, Globals, Level, StmtPos,
};
use super::{Binding, Site, TransformKind};
use crate::syntax::{
    Ast, ContractDef, Edit, EditSet, Expr, ExprKind, FunctionDef, LitKind, Span, Stmt, StmtKind, TypeKind,
};

pub(crate) enum Rewrite {
    Fixed(EditSet),
    /// Even and odd seed variants.
    BySeed(EditSet, EditSet),
}

impl Rewrite {
    pub fn for_seed(&self, seed: u64) -> EditSet {
        match self {
            Rewrite::Fixed(e) => e.clone(),
            Rewrite::BySeed(even, odd) => if seed.is_multiple_of(2) { even } else { odd }.clone(),
        }
    }
}

pub(crate) struct Candidate {
    pub site: Site,
    pub rewrite: Rewrite,
}

struct Ctx<'a> {
    src: &'a str,
    globals: Globals<'a>,
}

fn site(kind: TransformKind, anchor: Span, bindings: impl IntoIterator<Item = (String, Span)>) -> Site {
    Site {
        kind,
        anchor,
        bindings: bindings.into_iter().map(|(name, span)| Binding { name, span }).collect(),
    }
}

pub(crate) fn discover(ast: &Ast, src: &str, kind: TransformKind) -> Vec<Candidate> {
    let ctx = Ctx { src, globals: Globals::collect(ast) };
    let mut out = Vec::new();
    for (contract, func) in mutable_functions(ast) {
        walk_function(func, &mut |pos, env| match kind {
            TransformKind::ReverseLicm => out.extend(licm(&ctx, pos, env)),
            TransformKind::ReverseLoopInversion => out.extend(loop_inversion(&ctx, pos, env)),
            TransformKind::ReverseCse => out.extend(cse(&ctx, pos, env)),
            TransformKind::LiteralObfuscation => literals(&ctx, func, pos, env, &mut out),
            TransformKind::KeccakDuplication => keccak(&ctx, pos, env, &mut out),
            TransformKind::FunctionOutlining => outlining(&ctx, contract, func, pos, env, &mut out),
        });
    }
    // one candidate per site, source order
    let mut unique: BTreeMap<(usize, usize, String), Candidate> = BTreeMap::new();
    for c in out {
        let key = (c.site.anchor.start, c.site.anchor.end, format!("{:?}", c.site.bindings));
        unique.entry(key).or_insert(c);
    }
    unique.into_values().collect()
}

/// `v = e;` or `T v = e;` with a plain identifier target.
fn simple_assign(s: &Stmt) -> Option<(&str, &Expr)> {
    match &s.kind {
        StmtKind::VarDecl { vars, tuple: false, init: Some(e) } if vars.len() == 1 => {
            vars[0].as_ref().map(|v| (v.name.name.as_str(), e))
        }
        StmtKind::Expr(Expr { kind: ExprKind::Assign { op, lhs, rhs }, .. }) if op == "=" => {
            lhs.as_ident().map(|v| (v, &**rhs))
        }
        _ => None,
    }
}

/// Declared type of the target of a simple assignment statement.
fn target_type<'a>(s: &'a Stmt, name: &str, env: &Env<'a>) -> Option<&'a crate::syntax::TypeName> {
    match &s.kind {
        StmtKind::VarDecl { vars, .. } => vars[0].as_ref().map(|v| &v.ty),
        _ => env.lookup(name),
    }
}

fn loop_body(s: &Stmt) -> Option<&Stmt> {
    match &s.kind {
        StmtKind::For { body, .. } | StmtKind::While { body, .. } => Some(body),
        _ => None,
    }
}

fn licm(ctx: &Ctx, pos: StmtPos, env: &Env) -> Option<Candidate> {
    let (block, index) = pos.parent?;
    let looped = pos.stmt;
    let body = loop_body(looped)?;
    if matches!(&body.kind, StmtKind::Block(b) if b.unchecked) {
        return None;
    }
    let mut run = Vec::new();
    for s in block.stmts[..index].iter().rev() {
        match simple_assign(s) {
            Some(a) => run.push((s, a)),
            None => break,
        }
    }
    run.reverse();
    let loop_eff = Effects::of_stmt(looped, ctx.src);
    let loop_writes_only_value_locals = loop_eff
        .assigned
        .iter()
        .all(|r| !loop_eff.declared.contains(r) && env.lookup(r).is_some_and(is_value_type));
    let mut eligible = Vec::new();
    for (k, (stmt, (v, e))) in run.iter().enumerate() {
        let Some(ty) = target_type(stmt, v, env) else { continue };
        if !is_value_type(ty) {
            continue;
        }
        let Some(reads) = purity(e, env, &ctx.globals, Level::Strict) else { continue };
        if reads.names().any(|n| n == *v) {
            continue;
        }
        if !reads.state.is_empty() && (loop_eff.calls || loop_eff.opaque || !loop_writes_only_value_locals) {
            continue;
        }
        let names = || std::iter::once(*v).chain(reads.names());
        if loop_eff.touches(names()) {
            continue;
        }
        if run[k + 1..].iter().any(|(later, _)| Effects::of_stmt(later, ctx.src).touches(names())) {
            continue;
        }
        eligible.push((*stmt, *v, *e));
    }
    if eligible.is_empty() {
        return None;
    }
    let copies: Vec<String> = eligible.iter().map(|(_, v, e)| format!("{v} = {};", e.span.slice(ctx.src))).collect();
    let loop_indent = line_indent(ctx.src, looped.span.start);
    let edit = match &body.kind {
        StmtKind::Block(b) if !b.stmts.is_empty() => {
            let first = b.stmts[0].span.start;
            let sep = if ctx.src[b.span.start..first].contains('\n') {
                format!("\n{}", line_indent(ctx.src, first))
            } else {
                " ".to_string()
            };
            Edit::insert(first, copies.iter().map(|c| format!("{c}{sep}")).collect::<String>())
        }
        StmtKind::Block(_) => {
            let inner = format!("{loop_indent}    ");
            let lines: String = copies.iter().map(|c| format!("\n{inner}{c}")).collect();
            Edit::replace(body.span, format!("{{{lines}\n{loop_indent}}}"))
        }
        _ => Edit::replace(body.span, format!("{{ {} {} }}", copies.join(" "), body.span.slice(ctx.src))),
    };
    let mut bindings: Vec<(String, Span)> =
        eligible.iter().enumerate().map(|(k, (s, _, _))| (format!("assign{k}"), s.span)).collect();
    bindings.push(("loop".into(), looped.span));
    bindings.push(("body".into(), body.span));
    Some(Candidate {
        site: site(TransformKind::ReverseLicm, looped.span, bindings),
        rewrite: Rewrite::Fixed([edit].into_iter().collect()),
    })
}

/// Removes up to `width` columns of leading whitespace from every line but the first.
fn dedent(text: &str, width: usize) -> String {
    if width == 0 {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    for (i, line) in text.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
            let strip = line.bytes().take(width).take_while(|b| *b == b' ' || *b == b'\t').count();
            out.push_str(&line[strip..]);
        } else {
            out.push_str(line);
        }
    }
    out
}

fn loop_inversion(ctx: &Ctx, pos: StmtPos, env: &Env) -> Option<Candidate> {
    let StmtKind::If { cond, then, els: None } = &pos.stmt.kind else { return None };
    let inner = match &then.kind {
        StmtKind::Block(b) if !b.unchecked && b.stmts.len() == 1 => &b.stmts[0],
        _ => &**then,
    };
    let StmtKind::DoWhile { body, cond: again } = &inner.kind else { return None };
    if token_texts(ctx.src, cond.span)? != token_texts(ctx.src, again.span)? {
        return None;
    }
    purity(cond, env, &ctx.globals, Level::Readonly)?;
    let if_indent = line_indent(ctx.src, pos.stmt.span.start).len();
    let do_indent = line_indent(ctx.src, inner.span.start).len();
    let body_text = dedent(body.span.slice(ctx.src), do_indent.saturating_sub(if_indent));
    let text = format!("while ({}) {}", cond.span.slice(ctx.src), body_text);
    Some(Candidate {
        site: site(
            TransformKind::ReverseLoopInversion,
            pos.stmt.span,
            [
                ("guard".to_string(), cond.span),
                ("do_while".to_string(), inner.span),
                ("body".to_string(), body.span),
                ("loop_cond".to_string(), again.span),
            ],
        ),
        rewrite: Rewrite::Fixed([Edit::replace(pos.stmt.span, text)].into_iter().collect()),
    })
}

/// Spans of every read of identifier `name` inside `s`.
fn ident_uses(s: &Stmt, name: &str) -> Vec<Span> {
    let mut uses = Vec::new();
    s.walk(&mut |st| {
        for e in st.own_exprs() {
            e.walk(&mut |x| {
                if x.as_ident() == Some(name) {
                    uses.push(x.span);
                }
            });
        }
    });
    uses
}

fn cse(ctx: &Ctx, pos: StmtPos, env: &Env) -> Option<Candidate> {
    let (block, index) = pos.parent?;
    let (t, e) = simple_assign(pos.stmt)?;
    let ty = target_type(pos.stmt, t, env)?;
    if !is_value_type(ty) {
        return None;
    }
    let reads = purity(e, env, &ctx.globals, Level::Strict)?;
    if reads.names().any(|n| n == t) || infer_type(e, env, &ctx.globals).as_deref() != ty.elementary() {
        return None;
    }
    let names = || std::iter::once(t).chain(reads.names());
    let mut uses = Vec::new();
    for s in &block.stmts[index + 1..] {
        let eff = Effects::of_stmt(s, ctx.src);
        if eff.touches(names()) || eff.calls || eff.opaque || (eff.has_unchecked && !env.unchecked) {
            break;
        }
        uses.extend(ident_uses(s, t));
    }
    if uses.is_empty() {
        return None;
    }
    let replacement = format!("({})", e.span.slice(ctx.src));
    let mut bindings = vec![("decl".to_string(), pos.stmt.span), ("expr".to_string(), e.span)];
    bindings.extend(uses.iter().enumerate().map(|(k, u)| (format!("use{k}"), *u)));
    Some(Candidate {
        site: site(TransformKind::ReverseCse, pos.stmt.span, bindings),
        rewrite: Rewrite::Fixed(uses.iter().map(|u| Edit::replace(*u, replacement.clone())).collect()),
    })
}

fn plain_decimal(ctx: &Ctx, e: &Expr) -> bool {
    matches!(&e.kind, ExprKind::Literal { kind: LitKind::Number, unit: None })
        && e.span.slice(ctx.src).bytes().all(|b| b.is_ascii_digit() || b == b'_')
}

fn integer_typed(ctx: &Ctx, e: &Expr, env: &Env) -> bool {
    infer_type(e, env, &ctx.globals).is_some_and(|t| is_integer_type(&t))
}

fn literals(ctx: &Ctx, func: &FunctionDef, pos: StmtPos, env: &Env, out: &mut Vec<Candidate>) {
    let mut found: Vec<Span> = Vec::new();
    match &pos.stmt.kind {
        StmtKind::VarDecl { vars, tuple: false, init: Some(init) } if vars.len() == 1 => {
            let integer = vars[0].as_ref().and_then(|v| v.ty.elementary()).is_some_and(is_integer_type);
            if integer && plain_decimal(ctx, init) {
                found.push(init.span);
            }
        }
        StmtKind::Return(Some(value)) if func.returns.len() == 1 => {
            let integer = func.returns[0].ty.elementary().is_some_and(is_integer_type);
            if integer && plain_decimal(ctx, value) {
                found.push(value.span);
            }
        }
        _ => {}
    }
    for e in pos.stmt.own_exprs() {
        e.walk(&mut |x| match &x.kind {
            ExprKind::Assign { op, lhs, rhs }
                if matches!(op.as_str(), "=" | "+=" | "-=" | "*=" | "/=" | "%=" | "|=" | "&=" | "^=") =>
            {
                if plain_decimal(ctx, rhs) && integer_typed(ctx, lhs, env) {
                    found.push(rhs.span);
                }
            }
            ExprKind::Binary { op, lhs, rhs }
                if matches!(
                    op.as_str(),
                    "+" | "-" | "*" | "/" | "%" | "&" | "|" | "^" | "<" | ">" | "<=" | ">=" | "==" | "!="
                ) =>
            {
                if plain_decimal(ctx, lhs) && integer_typed(ctx, rhs, env) {
                    found.push(lhs.span);
                }
                if plain_decimal(ctx, rhs) && integer_typed(ctx, lhs, env) {
                    found.push(rhs.span);
                }
            }
            ExprKind::Index { base, index: Some(index) } if plain_decimal(ctx, index) => {
                let indexable = base.as_ident().and_then(|n| lookup_type(n, env, &ctx.globals)).is_some_and(|t| {
                    match &t.kind {
                        TypeKind::Array { .. } => true,
                        TypeKind::Mapping { key, .. } => key.elementary().is_some_and(is_integer_type),
                        _ => false,
                    }
                });
                if indexable {
                    found.push(index.span);
                }
            }
            _ => {}
        });
    }
    found.sort();
    found.dedup();
    for span in found {
        let k = span.slice(ctx.src);
        let edit = |text: String| [Edit::replace(span, text)].into_iter().collect();
        out.push(Candidate {
            site: site(TransformKind::LiteralObfuscation, span, [("literal".to_string(), span)]),
            rewrite: Rewrite::BySeed(edit(format!("({k} + 0)")), edit(format!("({k} * 1)"))),
        });
    }
}

/// Evaluation cannot revert or touch state: names, literals, conversions,
/// `abi.encode*`, nested `keccak256`, environment fields.
fn non_reverting(e: &Expr, env: &Env, globals: &Globals) -> bool {
    let all = |es: &[Expr]| es.iter().all(|a| non_reverting(a, env, globals));
    match &e.kind {
        ExprKind::Literal { .. } => true,
        ExprKind::Ident(n) => env.is_local(n) || lookup_type(n, env, globals).is_some(),
        ExprKind::Paren(inner) => non_reverting(inner, env, globals),
        ExprKind::Call { callee, args, named: None } => match &callee.kind {
            ExprKind::TypeExpr(t) => args.len() == 1 && t.elementary().is_some() && all(args),
            ExprKind::Ident(n) => n == "keccak256" && !env.is_local(n) && args.len() == 1 && all(args),
            _ => is_abi_encode(callee) && all(args),
        },
        ExprKind::Member { base, member } => {
            matches!(base.as_ident(), Some("msg" | "block" | "tx"))
                && !env.is_local(base.as_ident().unwrap_or_default())
                && matches!(member.name.as_str(), "sender" | "value" | "number" | "timestamp" | "chainid" | "origin")
        }
        _ => false,
    }
}

/// `keccak256` calls evaluated unconditionally by the statement's own expressions.
fn unconditional_keccaks<'e>(e: &'e Expr, out: &mut Vec<&'e Expr>) {
    if let ExprKind::Call { callee, args, named: None } = &e.kind {
        if callee.as_ident() == Some("keccak256") && args.len() == 1 {
            out.push(e);
        }
    }
    match &e.kind {
        ExprKind::Binary { op, lhs, .. } if op == "&&" || op == "||" => unconditional_keccaks(lhs, out),
        ExprKind::Conditional { cond, .. } => unconditional_keccaks(cond, out),
        _ => e.children().into_iter().for_each(|c| unconditional_keccaks(c, out)),
    }
}

fn keccak(ctx: &Ctx, pos: StmtPos, env: &Env, out: &mut Vec<Candidate>) {
    if pos.parent.is_none() {
        return;
    }
    let stmt = pos.stmt;
    let exprs: Vec<&Expr> = match &stmt.kind {
        StmtKind::Expr(e) | StmtKind::Emit(e) => vec![e],
        StmtKind::Return(Some(e)) => vec![e],
        StmtKind::VarDecl { init: Some(e), .. } => vec![e],
        StmtKind::If { cond, .. } => vec![cond],
        _ => return,
    };
    // the rest of the statement must be free of effects, apart from a
    // top-level assignment to a plain variable
    let mut eff = Effects::default();
    for e in &exprs {
        let e_eff = match &e.kind {
            ExprKind::Assign { op, lhs, rhs } if op == "=" && lhs.as_ident().is_some() => Effects::of_expr(rhs),
            _ => Effects::of_expr(e),
        };
        eff.calls |= e_eff.calls;
        eff.assigned.extend(e_eff.assigned);
    }
    if let StmtKind::Emit(Expr { kind: ExprKind::Call { args, .. }, .. }) = &stmt.kind {
        eff = Effects::default();
        for a in args {
            let a_eff = Effects::of_expr(a);
            eff.calls |= a_eff.calls;
            eff.assigned.extend(a_eff.assigned);
        }
    }
    if eff.calls || !eff.assigned.is_empty() {
        return;
    }
    let mut calls = Vec::new();
    for e in &exprs {
        match &e.kind {
            ExprKind::Assign { rhs, .. } => unconditional_keccaks(rhs, &mut calls),
            _ => unconditional_keccaks(e, &mut calls),
        }
    }
    let n = fresh_index(ctx.src, |n| format!("__idol_h{n}"));
    let (h1, h2) = (format!("__idol_h{n}a"), format!("__idol_h{n}b"));
    let indent = line_indent(ctx.src, stmt.span.start);
    for call in calls {
        let ExprKind::Call { args, .. } = &call.kind else { continue };
        if !non_reverting(&args[0], env, &ctx.globals) {
            continue;
        }
        let arg = args[0].span.slice(ctx.src);
        let hoisted = format!("bytes32 {h1} = keccak256({arg});\n{indent}bytes32 {h2} = keccak256({arg});\n{indent}");
        let edits: EditSet = [
            Edit::insert(stmt.span.start, hoisted),
            Edit::replace(call.span, format!("({h1} == {h2} ? {h1} : {h2})")),
        ]
        .into_iter()
        .collect();
        out.push(Candidate {
            site: site(
                TransformKind::KeccakDuplication,
                call.span,
                [("call".to_string(), call.span), ("stmt".to_string(), stmt.span)],
            ),
            rewrite: Rewrite::Fixed(edits),
        });
    }
}

fn outlining(ctx: &Ctx, contract: &ContractDef, func: &FunctionDef, pos: StmtPos, env: &Env, out: &mut Vec<Candidate>) {
    if env.unchecked || contract.kind == crate::syntax::ContractKind::Interface {
        return;
    }
    let mut targets: Vec<(&Expr, &Expr)> = Vec::new();
    for e in pos.stmt.own_exprs() {
        e.walk(&mut |x| {
            if let ExprKind::Call { args, .. } = &x.kind {
                for a in args {
                    a.walk(&mut |sub| targets.push((x, sub)));
                }
            }
        });
    }
    let n = fresh_index(ctx.src, |n| format!("__idol_outlined_{n}"));
    let name = format!("__idol_outlined_{n}");
    let indent = line_indent(ctx.src, func.span.start);
    for (call, e) in targets {
        let compound = match &e.kind {
            ExprKind::Binary { .. } | ExprKind::Conditional { .. } => true,
            ExprKind::Unary { op, .. } => matches!(op.as_str(), "!" | "~" | "-"),
            ExprKind::Call { callee, .. } => callee.as_ident() == Some("keccak256") || matches!(callee.kind, ExprKind::TypeExpr(_)),
            _ => false,
        };
        if !compound {
            continue;
        }
        let Some(reads) = purity(e, env, &ctx.globals, Level::Strict) else { continue };
        if !reads.state.is_empty() {
            continue;
        }
        let Some(ret) = infer_type(e, env, &ctx.globals) else { continue };
        if matches!(ret.as_str(), "address" | "bytes" | "string") {
            continue;
        }
        let Some(params) = reads
            .locals
            .iter()
            .map(|v| env.lookup(v).filter(|t| is_value_type(t)).and_then(|t| t.elementary()).map(|t| format!("{t} {v}")))
            .collect::<Option<Vec<_>>>()
        else {
            continue;
        };
        let function = format!(
            "\n\n{indent}function {name}({}) private pure returns ({ret}) {{\n{indent}    return {};\n{indent}}}",
            params.join(", "),
            e.span.slice(ctx.src)
        );
        let edits: EditSet = [
            Edit::replace(e.span, format!("{name}({})", reads.locals.join(", "))),
            Edit::insert(func.span.end, function),
        ]
        .into_iter()
        .collect();
        out.push(Candidate {
            site: site(
                TransformKind::FunctionOutlining,
                e.span,
                [
                    ("expr".to_string(), e.span),
                    ("call".to_string(), call.span),
                    ("function".to_string(), func.span),
                    ("insert_at".to_string(), Span::new(func.span.end, func.span.end)),
                ],
            ),
            rewrite: Rewrite::Fixed(edits),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{apply_edits, parse};

    fn wrap(body: &str) -> String {
        format!("contract C {{\n    uint256 s;\n    event E(bytes32 h);\n    function f(uint256 a, uint256 b) public returns (uint256) {{\n{body}\n    }}\n}}\n")
    }

    fn rewrites(src: &str, kind: TransformKind, seed: u64) -> Vec<String> {
        let ast = parse(src).unwrap();
        discover(&ast, src, kind)
            .into_iter()
            .map(|c| apply_edits(src, &c.rewrite.for_seed(seed)).unwrap())
            .collect()
    }

    #[test]
    fn literal_identity_by_seed_parity() {
        let src = wrap("        uint256 x;\n        x = 5;\n        return x;");
        assert_eq!(rewrites(&src, TransformKind::LiteralObfuscation, 0), vec![src.replace("x = 5;", "x = (5 + 0);")]);
        assert_eq!(rewrites(&src, TransformKind::LiteralObfuscation, 3), vec![src.replace("x = 5;", "x = (5 * 1);")]);
    }

    #[test]
    fn literals_skip_non_integer_contexts() {
        let src = wrap("        bytes32 h = bytes32(uint256(7));\n        return 0x10 + 1 ether;");
        assert!(rewrites(&src, TransformKind::LiteralObfuscation, 0).is_empty());
    }

    #[test]
    fn cse_substitutes_later_uses() {
        let src = wrap("        uint256 t = a + b;\n        s = t;\n        return t * 2;");
        let out = rewrites(&src, TransformKind::ReverseCse, 0);
        assert_eq!(out, vec![src.replace("s = t;\n        return t * 2;", "s = (a + b);\n        return (a + b) * 2;")]);
    }

    #[test]
    fn cse_stops_at_reassignment_of_free_variable() {
        let src = wrap("        uint256 t = a + b;\n        a = 1;\n        return t;");
        assert!(rewrites(&src, TransformKind::ReverseCse, 0).is_empty());
    }

    #[test]
    fn keccak_is_duplicated_into_statement_position() {
        let src = wrap("        emit E(keccak256(abi.encode(a)));\n        return 0;");
        let out = rewrites(&src, TransformKind::KeccakDuplication, 0);
        assert_eq!(out.len(), 1);
        assert!(out[0].contains("bytes32 __idol_h0a = keccak256(abi.encode(a));"), "{}", out[0]);
        assert!(out[0].contains("bytes32 __idol_h0b = keccak256(abi.encode(a));"));
        assert!(out[0].contains("emit E((__idol_h0a == __idol_h0b ? __idol_h0a : __idol_h0b));"));
        parse(&out[0]).unwrap();
    }

    #[test]
    fn keccak_under_short_circuit_is_left_alone() {
        let src = wrap("        if (a > 1 && keccak256(abi.encode(a)) == bytes32(0)) { return 1; }\n        return 0;");
        assert!(rewrites(&src, TransformKind::KeccakDuplication, 0).is_empty());
    }

    #[test]
    fn outlining_extracts_pure_argument() {
        let src = wrap("        emit E(bytes32(a * b + 1));\n        return 0;");
        let out = rewrites(&src, TransformKind::FunctionOutlining, 0);
        assert!(!out.is_empty());
        let first = &out[0];
        assert!(first.contains("function __idol_outlined_0("), "{first}");
        assert!(first.contains("private pure returns ("));
        parse(first).unwrap();
    }

    #[test]
    fn licm_rejects_loop_written_operands() {
        let src = wrap("        uint256 x = a + 1;\n        for (uint256 i = 0; i < 3; i++) { a = a + x; }\n        return a;");
        assert!(rewrites(&src, TransformKind::ReverseLicm, 0).is_empty());
    }

    #[test]
    fn licm_wraps_non_block_body() {
        let src = wrap("        uint256 x = b * 2;\n        while (a < 10) a += x;\n        return a;");
        let out = rewrites(&src, TransformKind::ReverseLicm, 0);
        assert_eq!(out, vec![src.replace("while (a < 10) a += x;", "while (a < 10) { x = b * 2; a += x; }")]);
    }

    #[test]
    fn inversion_requires_identical_conditions() {
        let src = wrap("        if (a < 3) { do { a++; } while (a < 4); }\n        return a;");
        assert!(rewrites(&src, TransformKind::ReverseLoopInversion, 0).is_empty());
    }
}
