//! Scope tracking, conservative purity, side-effect summaries and a small
//! bottom-up type inference over elementary types.

use std::collections::{BTreeSet, HashMap};

use crate::syntax::{
    tokenize, Ast, Block, ContractDef, Expr, ExprKind, FunctionDef, LitKind, Member, OpaqueKind, Span, Stmt,
    StmtKind, TokenKind, TypeKind, TypeName,
};

/// State variables visible anywhere in the file, by name.
pub(crate) struct Globals<'a> {
    state: HashMap<&'a str, StateVar<'a>>,
}

#[derive(Clone, Copy)]
struct StateVar<'a> {
    /// `None` when two contracts declare the same name with different types.
    ty: Option<&'a TypeName>,
    constant: bool,
}

impl<'a> Globals<'a> {
    pub fn collect(ast: &'a Ast) -> Globals<'a> {
        let mut state: HashMap<&'a str, StateVar<'a>> = HashMap::new();
        let decls = ast.items.iter().filter_map(|i| match i {
            crate::syntax::Item::StateVar(v) => Some(v),
            _ => None,
        });
        let members = ast.contracts().flat_map(|c| c.members.iter()).filter_map(|m| match m {
            Member::StateVar(v) => Some(v),
            _ => None,
        });
        for v in decls.chain(members) {
            let entry = StateVar { ty: Some(&v.ty), constant: v.is_constant() };
            state
                .entry(v.name.name.as_str())
                .and_modify(|old| {
                    if old.ty.map(type_key) != Some(type_key(&v.ty)) {
                        old.ty = None;
                    }
                    old.constant &= entry.constant;
                })
                .or_insert(entry);
        }
        Globals { state }
    }

    fn get(&self, name: &str) -> Option<StateVar<'a>> {
        self.state.get(name).copied()
    }
}

fn type_key(t: &TypeName) -> String {
    match &t.kind {
        TypeKind::Elementary(n) | TypeKind::UserDefined(n) => n.clone(),
        TypeKind::Mapping { key, value } => format!("mapping({}=>{})", type_key(key), type_key(value)),
        TypeKind::Array { base, length } => {
            format!("{}[{}]", type_key(base), if length.is_some() { "n" } else { "" })
        }
        TypeKind::Function => "function".into(),
    }
}

/// Elementary type that is copied by value (no memory or storage reference).
pub(crate) fn is_value_type(t: &TypeName) -> bool {
    t.elementary().is_some_and(|n| n != "bytes" && n != "string")
}

pub(crate) fn is_integer_type(name: &str) -> bool {
    name.starts_with("uint") || name.starts_with("int")
}

/// Lexical scope during a function walk.
#[derive(Default)]
pub(crate) struct Env<'a> {
    frames: Vec<Vec<(&'a str, &'a TypeName)>>,
    pub unchecked: bool,
}

impl<'a> Env<'a> {
    pub fn lookup(&self, name: &str) -> Option<&'a TypeName> {
        self.frames.iter().rev().flat_map(|f| f.iter().rev()).find(|(n, _)| *n == name).map(|(_, t)| *t)
    }

    pub fn is_local(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    fn push(&mut self) {
        self.frames.push(Vec::new());
    }

    fn pop(&mut self) {
        self.frames.pop();
    }

    fn declare(&mut self, name: &'a str, ty: &'a TypeName) {
        if let Some(f) = self.frames.last_mut() {
            f.push((name, ty));
        }
    }

    fn declare_stmt(&mut self, s: &'a Stmt) {
        if let StmtKind::VarDecl { vars, .. } = &s.kind {
            for v in vars.iter().flatten() {
                self.declare(&v.name.name, &v.ty);
            }
        }
    }
}

/// A statement together with its enclosing block and index, when it is a direct block child.
#[derive(Clone, Copy)]
pub(crate) struct StmtPos<'a> {
    pub stmt: &'a Stmt,
    pub parent: Option<(&'a Block, usize)>,
}

pub(crate) type Visit<'v, 'a> = dyn FnMut(StmtPos<'a>, &Env<'a>) + 'v;

/// Visits every statement of `f` with the scope in force just before it.
pub(crate) fn walk_function<'a>(f: &'a FunctionDef, visit: &mut Visit<'_, 'a>) {
    let Some(body) = &f.body else { return };
    let mut env = Env::default();
    env.push();
    for p in f.params.iter().chain(f.returns.iter()) {
        if let Some(name) = &p.name {
            env.declare(&name.name, &p.ty);
        }
    }
    walk_block(body, &mut env, visit);
}

fn walk_block<'a>(block: &'a Block, env: &mut Env<'a>, visit: &mut Visit<'_, 'a>) {
    env.push();
    let saved = env.unchecked;
    env.unchecked |= block.unchecked;
    for (i, s) in block.stmts.iter().enumerate() {
        visit(StmtPos { stmt: s, parent: Some((block, i)) }, env);
        walk_children(s, env, visit);
        env.declare_stmt(s);
    }
    env.unchecked = saved;
    env.pop();
}

fn walk_sub<'a>(s: &'a Stmt, env: &mut Env<'a>, visit: &mut Visit<'_, 'a>) {
    if let StmtKind::Block(b) = &s.kind {
        walk_block(b, env, visit);
    } else {
        env.push();
        visit(StmtPos { stmt: s, parent: None }, env);
        walk_children(s, env, visit);
        env.pop();
    }
}

fn walk_children<'a>(s: &'a Stmt, env: &mut Env<'a>, visit: &mut Visit<'_, 'a>) {
    match &s.kind {
        StmtKind::Block(b) => walk_block(b, env, visit),
        StmtKind::If { then, els, .. } => {
            walk_sub(then, env, visit);
            if let Some(e) = els {
                walk_sub(e, env, visit);
            }
        }
        StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } => walk_sub(body, env, visit),
        StmtKind::For { init, body, .. } => {
            env.push();
            if let Some(init) = init {
                visit(StmtPos { stmt: init, parent: None }, env);
                env.declare_stmt(init);
            }
            walk_sub(body, env, visit);
            env.pop();
        }
        _ => {}
    }
}

/// Functions whose bodies may be mutated, with their contract. Modifiers are excluded.
pub(crate) fn mutable_functions(ast: &Ast) -> Vec<(&ContractDef, &FunctionDef)> {
    ast.contracts()
        .flat_map(|c| {
            c.members.iter().filter_map(move |m| match m {
                Member::Function(f) if f.body.is_some() && f.kind != crate::syntax::FunctionKind::Modifier => {
                    Some((c, f))
                }
                _ => None,
            })
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Level {
    /// Locals, parameters, elementary state variables, literals, operators,
    /// conversions, `keccak256`, `abi.encode*`, `type(T).max/min`.
    Strict,
    /// Additionally index and member reads: anything without side effects.
    Readonly,
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub(crate) struct Reads {
    /// Free local variables in order of first occurrence.
    pub locals: Vec<String>,
    /// Names of non-constant state variables read.
    pub state: Vec<String>,
}

impl Reads {
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.locals.iter().chain(self.state.iter()).map(String::as_str)
    }

    fn add_local(&mut self, name: &str) {
        if !self.locals.iter().any(|n| n == name) {
            self.locals.push(name.to_string());
        }
    }

    fn add_state(&mut self, name: &str) {
        if !self.state.iter().any(|n| n == name) {
            self.state.push(name.to_string());
        }
    }
}

const ENV_OBJECTS: &[&str] = &["msg", "block", "tx"];

pub(crate) fn is_abi_encode(callee: &Expr) -> bool {
    matches!(&callee.kind, ExprKind::Member { base, member }
        if base.as_ident() == Some("abi")
            && matches!(member.name.as_str(), "encode" | "encodePacked" | "encodeWithSelector" | "encodeWithSignature"))
}

/// `type(T).max` / `type(T).min`.
fn is_type_bound(e: &Expr) -> Option<&TypeName> {
    let ExprKind::Member { base, member } = &e.kind else { return None };
    if member.name != "max" && member.name != "min" {
        return None;
    }
    let ExprKind::Call { callee, args, named: None } = &base.kind else { return None };
    if callee.as_ident() != Some("type") || args.len() != 1 {
        return None;
    }
    match &args[0].kind {
        ExprKind::TypeExpr(t) => Some(t),
        _ => None,
    }
}

/// Free variables of `e` if it is pure at `level`; `None` if it is not.
pub(crate) fn purity(e: &Expr, env: &Env, globals: &Globals, level: Level) -> Option<Reads> {
    let mut reads = Reads::default();
    pure_into(e, env, globals, level, &mut reads).then_some(reads)
}

fn pure_into(e: &Expr, env: &Env, globals: &Globals, level: Level, reads: &mut Reads) -> bool {
    let all = |es: &mut dyn Iterator<Item = &Expr>, reads: &mut Reads| {
        let mut ok = true;
        for c in es {
            ok = ok && pure_into(c, env, globals, level, reads);
        }
        ok
    };
    match &e.kind {
        ExprKind::Literal { .. } => true,
        ExprKind::Ident(name) => {
            if env.is_local(name) {
                reads.add_local(name);
                true
            } else if let Some(sv) = globals.get(name) {
                if !sv.constant {
                    reads.add_state(name);
                }
                true
            } else {
                false
            }
        }
        ExprKind::Paren(inner) => pure_into(inner, env, globals, level, reads),
        ExprKind::Unary { op, prefix: true, operand } if matches!(op.as_str(), "!" | "~" | "-") => {
            pure_into(operand, env, globals, level, reads)
        }
        ExprKind::Binary { lhs, rhs, .. } => all(&mut [&**lhs, &**rhs].into_iter(), reads),
        ExprKind::Conditional { cond, then, els } => all(&mut [&**cond, &**then, &**els].into_iter(), reads),
        ExprKind::Call { callee, args, named: None } => {
            let builtin = match &callee.kind {
                ExprKind::TypeExpr(_) => args.len() == 1,
                ExprKind::Ident(n) => n == "keccak256" && args.len() == 1 && !env.is_local(n),
                _ => is_abi_encode(callee),
            };
            builtin && all(&mut args.iter(), reads)
        }
        ExprKind::Member { base, .. } if is_type_bound(e).is_some() => {
            let _ = base;
            true
        }
        ExprKind::Member { base, member } if level == Level::Readonly => {
            match base.as_ident() {
                Some(obj) if ENV_OBJECTS.contains(&obj) && !env.is_local(obj) => {
                    !matches!(member.name.as_str(), "gas" | "data")
                }
                _ => pure_into(base, env, globals, level, reads),
            }
        }
        ExprKind::Index { base, index: Some(index) } if level == Level::Readonly => {
            all(&mut [&**base, &**index].into_iter(), reads)
        }
        _ => false,
    }
}

/// Root variable written through an lvalue (`a[i].x` writes `a`).
pub(crate) fn lvalue_roots<'e>(e: &'e Expr, out: &mut Vec<&'e str>) {
    match &e.kind {
        ExprKind::Ident(n) => out.push(n),
        ExprKind::Paren(inner) => lvalue_roots(inner, out),
        ExprKind::Index { base, .. } | ExprKind::Slice { base, .. } | ExprKind::Member { base, .. } => {
            lvalue_roots(base, out)
        }
        ExprKind::Tuple(items) => items.iter().flatten().for_each(|i| lvalue_roots(i, out)),
        _ => {}
    }
}

/// Conservative summary of what a statement or expression may do.
#[derive(Debug, Default, Clone)]
pub(crate) struct Effects {
    pub assigned: BTreeSet<String>,
    pub declared: BTreeSet<String>,
    /// Calls to anything other than side-effect-free builtins.
    pub calls: bool,
    pub opaque: bool,
    pub has_unchecked: bool,
}

impl Effects {
    pub fn of_stmt(s: &Stmt, src: &str) -> Effects {
        let mut eff = Effects::default();
        eff.stmt(s, src);
        eff
    }

    pub fn of_expr(e: &Expr) -> Effects {
        let mut eff = Effects::default();
        eff.expr(e);
        eff
    }

    pub fn touches<'n>(&self, mut names: impl Iterator<Item = &'n str>) -> bool {
        names.any(|n| self.assigned.contains(n) || self.declared.contains(n))
    }

    fn stmt(&mut self, s: &Stmt, src: &str) {
        match &s.kind {
            StmtKind::Block(b) => {
                self.has_unchecked |= b.unchecked;
                b.stmts.iter().for_each(|c| self.stmt(c, src));
            }
            StmtKind::VarDecl { vars, init, .. } => {
                for v in vars.iter().flatten() {
                    self.declared.insert(v.name.name.clone());
                }
                if let Some(e) = init {
                    self.expr(e);
                }
            }
            StmtKind::Emit(e) | StmtKind::Revert(e) => match &e.kind {
                ExprKind::Call { args, .. } => args.iter().for_each(|a| self.expr(a)),
                _ => self.expr(e),
            },
            StmtKind::Opaque(kind) => {
                self.opaque = true;
                self.calls = true;
                self.opaque_assignments(*kind, s.span, src);
            }
            _ => {
                s.own_exprs().into_iter().for_each(|e| self.expr(e));
                s.sub_stmts().into_iter().for_each(|c| self.stmt(c, src));
            }
        }
    }

    fn expr(&mut self, e: &Expr) {
        let mut roots = Vec::new();
        match &e.kind {
            ExprKind::Assign { lhs, .. } => lvalue_roots(lhs, &mut roots),
            ExprKind::Unary { op, operand, .. } if matches!(op.as_str(), "++" | "--" | "delete") => {
                lvalue_roots(operand, &mut roots)
            }
            ExprKind::Call { callee, args, .. } => {
                let builtin = match &callee.kind {
                    ExprKind::TypeExpr(_) => true,
                    ExprKind::Ident(n) => matches!(n.as_str(), "keccak256" | "require" | "assert" | "revert" | "type"),
                    _ => is_abi_encode(callee),
                };
                if !builtin || (callee.as_ident() == Some("keccak256") && args.len() != 1) {
                    self.calls = true;
                }
            }
            ExprKind::New(_) | ExprKind::CallOptions { .. } => self.calls = true,
            _ => {}
        }
        self.assigned.extend(roots.into_iter().map(str::to_string));
        for c in e.children() {
            self.expr(c);
        }
    }

    fn opaque_assignments(&mut self, kind: OpaqueKind, span: Span, src: &str) {
        let text = span.slice(src);
        let Ok(tokens) = tokenize(text) else {
            // unknown content: treat every word as written
            self.assigned.insert(String::from("*"));
            return;
        };
        let t = |i: usize| tokens[i].text(text);
        match kind {
            OpaqueKind::TryCatch => {
                for tok in tokens.iter().filter(|t| t.kind == TokenKind::Ident) {
                    self.assigned.insert(tok.text(text).to_string());
                }
            }
            OpaqueKind::Assembly => {
                for k in 0..tokens.len() {
                    if t(k) != ":=" {
                        continue;
                    }
                    let mut names = Vec::new();
                    let mut j = k;
                    loop {
                        if j == 0 || tokens[j - 1].kind != TokenKind::Ident {
                            break;
                        }
                        j -= 1;
                        // `x.slot :=` writes x
                        if j >= 2 && t(j - 1) == "." && tokens[j - 2].kind == TokenKind::Ident {
                            j -= 2;
                        }
                        names.push(t(j).to_string());
                        if j >= 1 && t(j - 1) == "," {
                            j -= 1;
                        } else {
                            break;
                        }
                    }
                    let is_let = j >= 1 && t(j - 1) == "let";
                    if !is_let {
                        self.assigned.extend(names);
                    }
                }
            }
        }
    }
}

/// Declared type of a name in scope, locals first.
pub(crate) fn lookup_type<'a>(name: &str, env: &Env<'a>, globals: &Globals<'a>) -> Option<&'a TypeName> {
    env.lookup(name).or_else(|| globals.get(name).and_then(|s| s.ty))
}

/// Elementary type of `e`, when it is determined without context. Literal
/// numbers have no type of their own and yield `None`.
pub(crate) fn infer_type(e: &Expr, env: &Env, globals: &Globals) -> Option<String> {
    match &e.kind {
        ExprKind::Ident(n) => lookup_type(n, env, globals).and_then(|t| t.elementary()).map(str::to_string),
        ExprKind::Literal { kind: LitKind::Bool, .. } => Some("bool".into()),
        ExprKind::Literal { .. } => None,
        ExprKind::Paren(inner) => infer_type(inner, env, globals),
        ExprKind::Unary { op, operand, .. } => match op.as_str() {
            "!" => Some("bool".into()),
            "delete" => None,
            _ => infer_type(operand, env, globals),
        },
        ExprKind::Binary { op, lhs, rhs } => match op.as_str() {
            "<" | ">" | "<=" | ">=" | "==" | "!=" | "&&" | "||" => Some("bool".into()),
            "**" | "<<" | ">>" | ">>>" => infer_type(lhs, env, globals),
            _ => {
                let l = infer_type(lhs, env, globals);
                let r = infer_type(rhs, env, globals);
                match (l, r) {
                    (Some(a), Some(b)) if a == b => Some(a),
                    (Some(a), None) if is_literal_number(rhs) => Some(a),
                    (None, Some(b)) if is_literal_number(lhs) => Some(b),
                    _ => None,
                }
            }
        },
        ExprKind::Conditional { then, els, .. } => {
            let a = infer_type(then, env, globals)?;
            (infer_type(els, env, globals).as_deref() == Some(a.as_str())).then_some(a)
        }
        ExprKind::Call { callee, args, .. } => match &callee.kind {
            ExprKind::TypeExpr(t) if args.len() == 1 => t.elementary().map(str::to_string),
            ExprKind::Ident(n) if n == "keccak256" => Some("bytes32".into()),
            _ => None,
        },
        ExprKind::Member { .. } => is_type_bound(e).and_then(|t| t.elementary()).map(str::to_string),
        ExprKind::Index { base, index: Some(_) } => {
            let ExprKind::Ident(n) = &base.peel().kind else { return None };
            match &lookup_type(n, env, globals)?.kind {
                TypeKind::Array { base, .. } => base.elementary().map(str::to_string),
                TypeKind::Mapping { value, .. } => value.elementary().map(str::to_string),
                TypeKind::Elementary(b) if b.starts_with("bytes") && b != "bytes" => Some("bytes1".into()),
                _ => None,
            }
        }
        ExprKind::Assign { lhs, .. } => infer_type(lhs, env, globals),
        _ => None,
    }
}

pub(crate) fn is_literal_number(e: &Expr) -> bool {
    matches!(&e.peel().kind, ExprKind::Literal { kind: LitKind::Number | LitKind::HexNumber, .. })
}

/// Token texts of a span, used for whitespace-insensitive comparison.
pub(crate) fn token_texts(src: &str, span: Span) -> Option<Vec<&str>> {
    let text = span.slice(src);
    tokenize(text).ok().map(|ts| ts.iter().map(|t| t.text(text)).collect())
}

/// Leading whitespace of the line containing `offset`.
pub(crate) fn line_indent(src: &str, offset: usize) -> &str {
    let line_start = src[..offset].rfind('\n').map_or(0, |p| p + 1);
    let rest = &src[line_start..];
    let n = rest.len() - rest.trim_start_matches([' ', '\t']).len();
    &rest[..n]
}

/// Smallest `n` such that `make(n)` does not occur in `src`.
pub(crate) fn fresh_index(src: &str, make: impl Fn(usize) -> String) -> usize {
    (0..).find(|n| !src.contains(&make(*n))).expect("unbounded search")
}
