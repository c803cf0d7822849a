//! Recursive-descent parser over the token stream.
//!
//! Variable declarations and expression statements are distinguished by
//! speculative parsing with backtracking, which keeps the grammar free of a
//! symbol table.

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::{ParseError, Span};

type PResult<T> = Result<T, ParseError>;

const UNITS: &[&str] = &[
    "wei", "gwei", "ether", "seconds", "minutes", "hours", "days", "weeks", "years", "szabo", "finney",
];

const LOCATIONS: &[&str] = &["memory", "storage", "calldata"];

const STATE_VAR_ATTRS: &[&str] = &[
    "public", "private", "internal", "external", "constant", "immutable", "override", "transient",
];

/// Words that can never start a type name or be a declared variable name.
const RESERVED: &[&str] = &[
    "if", "else", "for", "while", "do", "return", "returns", "emit", "break", "continue", "new",
    "delete", "true", "false", "function", "contract", "interface", "library", "struct", "enum",
    "event", "error", "modifier", "constructor", "assembly", "try", "catch", "unchecked", "memory",
    "storage", "calldata", "public", "private", "internal", "external", "pure", "view", "payable",
    "constant", "immutable", "virtual", "override", "pragma", "import", "using", "is", "indexed",
    "anonymous",
];

pub fn is_elementary_type(word: &str) -> bool {
    match word {
        "bool" | "address" | "string" | "bytes" | "byte" | "uint" | "int" | "fixed" | "ufixed" => true,
        _ => {
            let bits = |digits: &str, lo: u32, hi: u32, step: u32| {
                !digits.is_empty()
                    && !digits.starts_with('0')
                    && digits.parse::<u32>().is_ok_and(|n| n >= lo && n <= hi && n % step == 0)
            };
            if let Some(d) = word.strip_prefix("uint") {
                bits(d, 8, 256, 8)
            } else if let Some(d) = word.strip_prefix("int") {
                bits(d, 8, 256, 8)
            } else if let Some(d) = word.strip_prefix("bytes") {
                bits(d, 1, 32, 1)
            } else {
                false
            }
        }
    }
}

/// Canonical spelling of an elementary type name.
pub fn normalize_elementary(word: &str) -> String {
    match word {
        "uint" => "uint256".into(),
        "int" => "int256".into(),
        "byte" => "bytes1".into(),
        other => other.into(),
    }
}

pub fn parse(src: &str) -> PResult<Ast> {
    let tokens = tokenize(src)?;
    let mut p = Parser { src, tokens, pos: 0 };
    let items = p.source_unit()?;
    Ok(Ast { source_len: src.len(), items })
}

struct Parser<'s> {
    src: &'s str,
    tokens: Vec<Token>,
    pos: usize,
}

impl<'s> Parser<'s> {
    // ----- token helpers -------------------------------------------------

    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<Token> {
        self.tokens.get(self.pos + k).copied()
    }

    fn text(&self, t: Token) -> &'s str {
        t.text(self.src)
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.kind == TokenKind::Punct && self.text(t) == p)
    }

    fn punct_at(&self, k: usize, p: &str) -> bool {
        self.peek_at(k).is_some_and(|t| t.kind == TokenKind::Punct && self.text(t) == p)
    }

    fn at_word(&self, w: &str) -> bool {
        self.peek().is_some_and(|t| t.kind == TokenKind::Ident && self.text(t) == w)
    }

    fn word(&self) -> Option<&'s str> {
        self.peek().filter(|t| t.kind == TokenKind::Ident).map(|t| self.text(t))
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos];
        self.pos += 1;
        t
    }

    fn bump_text(&mut self) -> &'s str {
        let t = self.bump();
        self.text(t)
    }

    fn start(&self) -> usize {
        self.peek().map_or(self.src.len(), |t| t.span.start)
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.tokens[self.pos - 1].span.end
        }
    }

    fn span_from(&self, start: usize) -> Span {
        Span::new(start, self.prev_end())
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let span = self.peek().map_or(Span::new(self.src.len(), self.src.len()), |t| t.span);
        ParseError::syntax(self.src, span, message)
    }

    fn unsupported(&self, construct: &str) -> ParseError {
        let span = self.peek().map_or(Span::new(self.src.len(), self.src.len()), |t| t.span);
        ParseError::unsupported(self.src, span, construct)
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Token> {
        if self.at_punct(p) {
            Ok(self.bump())
        } else {
            let found = self.peek().map_or("end of file", |t| self.text(t));
            Err(self.error_here(format!("expected `{p}`, found `{found}`")))
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<Token> {
        if self.at_word(w) {
            Ok(self.bump())
        } else {
            Err(self.error_here(format!("expected `{w}`")))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident && !RESERVED.contains(&self.text(t)) => {
                self.bump();
                Ok(Ident { name: self.text(t).to_string(), span: t.span })
            }
            _ => Err(self.error_here("expected identifier")),
        }
    }

    /// Skips a balanced `open ... close` group starting at the current token.
    fn skip_balanced(&mut self, open: &str, close: &str) -> PResult<()> {
        self.expect_punct(open)?;
        let mut depth = 1usize;
        while depth > 0 {
            let Some(t) = self.peek() else {
                return Err(self.error_here(format!("unbalanced `{open}`")));
            };
            if t.kind == TokenKind::Punct {
                let s = self.text(t);
                if s == open {
                    depth += 1;
                } else if s == close {
                    depth -= 1;
                }
            }
            self.bump();
        }
        Ok(())
    }

    /// Skips to and including the next `;` outside of any bracket group.
    fn skip_to_semicolon(&mut self) -> PResult<()> {
        let mut depth = 0i32;
        loop {
            let Some(t) = self.peek() else {
                return Err(self.error_here("expected `;`"));
            };
            self.bump();
            if t.kind != TokenKind::Punct {
                continue;
            }
            match self.text(t) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                ";" if depth <= 0 => return Ok(()),
                _ => {}
            }
        }
    }

    // ----- declarations --------------------------------------------------

    fn source_unit(&mut self) -> PResult<Vec<Item>> {
        let mut items = Vec::new();
        while let Some(t) = self.peek() {
            let start = t.span.start;
            let item = match self.word() {
                Some("pragma") => Item::Pragma(self.pragma()?),
                Some("import") => return Err(self.unsupported("import")),
                Some("abstract" | "contract" | "interface" | "library") => Item::Contract(self.contract()?),
                Some("function") => Item::Function(self.function()?),
                Some("struct" | "enum") => Item::Opaque(self.opaque_braced()?),
                Some("event" | "error" | "using" | "type") => Item::Opaque(self.opaque_to_semicolon()?),
                Some(_) => Item::StateVar(self.state_var()?),
                None => return Err(self.error_here("expected a declaration")),
            };
            debug_assert!(item.span().start == start);
            items.push(item);
        }
        Ok(items)
    }

    fn pragma(&mut self) -> PResult<Pragma> {
        let start = self.start();
        self.expect_word("pragma")?;
        let name_tok = self.peek().ok_or_else(|| self.error_here("expected pragma name"))?;
        self.bump();
        let value_start = self.start();
        while !self.at_punct(";") {
            if self.peek().is_none() {
                return Err(self.error_here("expected `;`"));
            }
            self.bump();
        }
        let value = Span::new(value_start, self.prev_end().max(value_start));
        self.bump();
        Ok(Pragma { name: self.text(name_tok).to_string(), value, span: self.span_from(start) })
    }

    fn opaque_to_semicolon(&mut self) -> PResult<OpaqueDecl> {
        let start = self.start();
        let keyword = self.bump_text().to_string();
        let name = if self.peek().is_some_and(|t| t.kind == TokenKind::Ident) {
            Some(Ident { name: self.text(self.peek().unwrap()).into(), span: self.peek().unwrap().span })
        } else {
            None
        };
        self.skip_to_semicolon()?;
        Ok(OpaqueDecl { keyword, name, span: self.span_from(start) })
    }

    fn opaque_braced(&mut self) -> PResult<OpaqueDecl> {
        let start = self.start();
        let keyword = self.bump_text().to_string();
        let name = Some(self.ident()?);
        self.skip_balanced("{", "}")?;
        Ok(OpaqueDecl { keyword, name, span: self.span_from(start) })
    }

    fn contract(&mut self) -> PResult<ContractDef> {
        let start = self.start();
        let kind = match self.bump_text() {
            "abstract" => {
                self.expect_word("contract")?;
                ContractKind::AbstractContract
            }
            "contract" => ContractKind::Contract,
            "interface" => ContractKind::Interface,
            _ => ContractKind::Library,
        };
        let name = self.ident()?;
        let inheritance = if self.at_word("is") {
            let is_start = self.start();
            self.bump();
            while !self.at_punct("{") {
                if self.peek().is_none() {
                    return Err(self.error_here("expected contract body"));
                }
                if self.at_punct("(") {
                    self.skip_balanced("(", ")")?;
                } else {
                    self.bump();
                }
            }
            Some(self.span_from(is_start))
        } else {
            None
        };
        let body_start = self.start();
        self.expect_punct("{")?;
        let mut members = Vec::new();
        while !self.at_punct("}") {
            if self.peek().is_none() {
                return Err(self.error_here("expected `}`"));
            }
            members.push(self.member()?);
        }
        self.bump();
        let body = self.span_from(body_start);
        Ok(ContractDef { kind, name, inheritance, members, body, span: self.span_from(start) })
    }

    fn member(&mut self) -> PResult<Member> {
        Ok(match self.word() {
            Some("function" | "constructor" | "fallback" | "receive" | "modifier")
                if self.word() != Some("fallback") && self.word() != Some("receive")
                    || self.punct_at(1, "(") =>
            {
                Member::Function(self.function()?)
            }
            Some("event" | "error" | "using" | "type") => Member::Opaque(self.opaque_to_semicolon()?),
            Some("struct" | "enum") => Member::Opaque(self.opaque_braced()?),
            Some("import" | "pragma") => return Err(self.unsupported("nested directive")),
            _ => Member::StateVar(self.state_var()?),
        })
    }

    fn function(&mut self) -> PResult<FunctionDef> {
        let start = self.start();
        let kw = self.bump_text();
        let kind = match kw {
            "constructor" => FunctionKind::Constructor,
            "fallback" => FunctionKind::Fallback,
            "receive" => FunctionKind::Receive,
            "modifier" => FunctionKind::Modifier,
            _ => FunctionKind::Function,
        };
        let name = match kind {
            FunctionKind::Function | FunctionKind::Modifier if !self.at_punct("(") => {
                let t = self.peek().ok_or_else(|| self.error_here("expected function name"))?;
                if t.kind != TokenKind::Ident {
                    return Err(self.error_here("expected function name"));
                }
                self.bump();
                Some(Ident { name: self.text(t).into(), span: t.span })
            }
            _ => None,
        };
        let params = if self.at_punct("(") { self.param_list()? } else { Vec::new() };
        let mut returns = Vec::new();
        let mut attributes = Vec::new();
        let body = loop {
            if self.at_word("returns") {
                self.bump();
                returns = self.param_list()?;
            } else if self.at_punct("{") {
                break Some(self.block(false)?);
            } else if self.at_punct(";") {
                self.bump();
                break None;
            } else if let Some(word) = self.word() {
                let a_start = self.start();
                self.bump();
                while self.at_punct(".") {
                    self.bump();
                    self.ident()?;
                }
                if self.at_punct("(") {
                    self.skip_balanced("(", ")")?;
                }
                attributes.push(Attribute { word: word.to_string(), span: self.span_from(a_start) });
            } else {
                return Err(self.error_here("unexpected token in function header"));
            }
        };
        Ok(FunctionDef { kind, name, params, returns, attributes, body, span: self.span_from(start) })
    }

    fn param_list(&mut self) -> PResult<Vec<Param>> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if self.at_punct(")") {
            self.bump();
            return Ok(params);
        }
        loop {
            let start = self.start();
            let ty = self.type_name()?;
            let mut location = None;
            if let Some(w) = self.word() {
                if LOCATIONS.contains(&w) || w == "indexed" {
                    self.bump();
                    if w != "indexed" {
                        location = Some(w.to_string());
                    }
                }
            }
            let name = match self.peek() {
                Some(t) if t.kind == TokenKind::Ident => {
                    self.bump();
                    Some(Ident { name: self.text(t).into(), span: t.span })
                }
                _ => None,
            };
            params.push(Param { ty, location, name, span: self.span_from(start) });
            if self.at_punct(",") {
                self.bump();
                continue;
            }
            self.expect_punct(")")?;
            return Ok(params);
        }
    }

    fn state_var(&mut self) -> PResult<VarDecl> {
        let start = self.start();
        let ty = self.type_name()?;
        let mut attributes = Vec::new();
        while let Some(w) = self.word().filter(|w| STATE_VAR_ATTRS.contains(w)) {
            let a_start = self.start();
            self.bump();
            if w == "override" && self.at_punct("(") {
                self.skip_balanced("(", ")")?;
            }
            attributes.push(Attribute { word: w.to_string(), span: self.span_from(a_start) });
        }
        let name = self.ident()?;
        let init = if self.at_punct("=") {
            self.bump();
            Some(self.expr()?)
        } else {
            None
        };
        self.expect_punct(";")?;
        Ok(VarDecl { ty, attributes, name, init, span: self.span_from(start) })
    }

    fn type_name(&mut self) -> PResult<TypeName> {
        let start = self.start();
        let word = self.word().ok_or_else(|| self.error_here("expected type name"))?;
        let mut ty = if word == "mapping" {
            self.bump();
            self.expect_punct("(")?;
            let key = self.type_name()?;
            if !self.at_punct("=>") {
                self.ident()?;
            }
            self.expect_punct("=>")?;
            let value = self.type_name()?;
            if !self.at_punct(")") {
                self.ident()?;
            }
            self.expect_punct(")")?;
            TypeName {
                kind: TypeKind::Mapping { key: Box::new(key), value: Box::new(value) },
                span: self.span_from(start),
            }
        } else if word == "function" {
            self.bump();
            self.skip_balanced("(", ")")?;
            while let Some(w) = self.word() {
                match w {
                    "internal" | "external" | "pure" | "view" | "payable" => {
                        self.bump();
                    }
                    "returns" => {
                        self.bump();
                        self.skip_balanced("(", ")")?;
                    }
                    _ => break,
                }
            }
            TypeName { kind: TypeKind::Function, span: self.span_from(start) }
        } else if is_elementary_type(word) {
            self.bump();
            if word == "address" && self.at_word("payable") {
                self.bump();
            }
            TypeName { kind: TypeKind::Elementary(normalize_elementary(word)), span: self.span_from(start) }
        } else if !RESERVED.contains(&word) {
            let mut path = self.ident()?.name;
            while self.at_punct(".") && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Ident) {
                self.bump();
                path.push('.');
                path.push_str(&self.ident()?.name);
            }
            TypeName { kind: TypeKind::UserDefined(path), span: self.span_from(start) }
        } else {
            return Err(self.error_here(format!("expected type name, found `{word}`")));
        };
        while self.at_punct("[") {
            self.bump();
            let length = if self.at_punct("]") { None } else { Some(Box::new(self.expr()?)) };
            self.expect_punct("]")?;
            ty = TypeName {
                kind: TypeKind::Array { base: Box::new(ty), length },
                span: self.span_from(start),
            };
        }
        Ok(ty)
    }

    // ----- statements ----------------------------------------------------

    fn block(&mut self, unchecked: bool) -> PResult<Block> {
        let start = self.start();
        if unchecked {
            self.expect_word("unchecked")?;
        }
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.at_punct("}") {
            if self.peek().is_none() {
                return Err(self.error_here("expected `}`"));
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(Block { unchecked, stmts, span: self.span_from(start) })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.start();
        let kind = match self.word() {
            _ if self.at_punct("{") => StmtKind::Block(self.block(false)?),
            Some("unchecked") if self.punct_at(1, "{") => StmtKind::Block(self.block(true)?),
            Some("if") => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let then = Box::new(self.stmt()?);
                let els = if self.at_word("else") {
                    self.bump();
                    Some(Box::new(self.stmt()?))
                } else {
                    None
                };
                StmtKind::If { cond, then, els }
            }
            Some("while") => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                StmtKind::While { cond, body: Box::new(self.stmt()?) }
            }
            Some("do") => {
                self.bump();
                let body = Box::new(self.stmt()?);
                self.expect_word("while")?;
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                StmtKind::DoWhile { body, cond }
            }
            Some("for") => {
                self.bump();
                self.expect_punct("(")?;
                let init = if self.at_punct(";") {
                    self.bump();
                    None
                } else {
                    Some(Box::new(self.simple_stmt()?))
                };
                let cond = if self.at_punct(";") { None } else { Some(self.expr()?) };
                self.expect_punct(";")?;
                let update = if self.at_punct(")") { None } else { Some(self.expr()?) };
                self.expect_punct(")")?;
                StmtKind::For { init, cond, update, body: Box::new(self.stmt()?) }
            }
            Some("continue") => {
                self.bump();
                self.expect_punct(";")?;
                StmtKind::Continue
            }
            Some("break") => {
                self.bump();
                self.expect_punct(";")?;
                StmtKind::Break
            }
            Some("return") => {
                self.bump();
                let value = if self.at_punct(";") { None } else { Some(self.expr()?) };
                self.expect_punct(";")?;
                StmtKind::Return(value)
            }
            Some("emit") => {
                self.bump();
                let call = self.expr()?;
                self.expect_punct(";")?;
                StmtKind::Emit(call)
            }
            Some("revert") if self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Ident) => {
                self.bump();
                let call = self.expr()?;
                self.expect_punct(";")?;
                StmtKind::Revert(call)
            }
            Some("assembly") => {
                self.bump();
                if self.peek().is_some_and(|t| t.kind == TokenKind::Str) {
                    let dialect = self.bump_text();
                    if dialect != "\"evmasm\"" {
                        return Err(self.unsupported("assembly dialect"));
                    }
                }
                if self.at_punct("(") {
                    self.skip_balanced("(", ")")?;
                }
                if !self.at_punct("{") {
                    return Err(self.error_here("expected assembly block"));
                }
                self.skip_balanced("{", "}")?;
                StmtKind::Opaque(OpaqueKind::Assembly)
            }
            Some("try") => {
                self.bump();
                while !self.at_punct("{") {
                    if self.peek().is_none() {
                        return Err(self.error_here("expected `{` after try"));
                    }
                    if self.at_punct("(") {
                        self.skip_balanced("(", ")")?;
                    } else {
                        self.bump();
                    }
                }
                self.skip_balanced("{", "}")?;
                while self.at_word("catch") {
                    while !self.at_punct("{") {
                        if self.peek().is_none() {
                            return Err(self.error_here("expected catch block"));
                        }
                        self.bump();
                    }
                    self.skip_balanced("{", "}")?;
                }
                StmtKind::Opaque(OpaqueKind::TryCatch)
            }
            Some("_") if self.punct_at(1, ";") => {
                self.bump();
                self.bump();
                StmtKind::Placeholder
            }
            Some("var") => return Err(self.unsupported("var")),
            _ => return self.simple_stmt(),
        };
        Ok(Stmt { kind, span: self.span_from(start) })
    }

    /// Variable declaration or expression statement, including the trailing `;`.
    fn simple_stmt(&mut self) -> PResult<Stmt> {
        let start = self.start();
        let saved = self.pos;
        if let Ok(Some(kind)) = self.try_var_decl() {
            return Ok(Stmt { kind, span: self.span_from(start) });
        }
        self.pos = saved;
        let e = self.expr()?;
        self.expect_punct(";")?;
        Ok(Stmt { kind: StmtKind::Expr(e), span: self.span_from(start) })
    }

    fn local_var(&mut self) -> PResult<LocalVar> {
        let start = self.start();
        let ty = self.type_name()?;
        let location = match self.word() {
            Some(w) if LOCATIONS.contains(&w) => {
                self.bump();
                Some(w.to_string())
            }
            _ => None,
        };
        let name = self.ident()?;
        Ok(LocalVar { ty, location, name, span: self.span_from(start) })
    }

    fn try_var_decl(&mut self) -> PResult<Option<StmtKind>> {
        if self.at_punct("(") {
            self.bump();
            let mut vars = Vec::new();
            loop {
                if self.at_punct(",") {
                    self.bump();
                    vars.push(None);
                    continue;
                }
                if self.at_punct(")") {
                    self.bump();
                    break;
                }
                vars.push(Some(self.local_var()?));
                if self.at_punct(",") {
                    self.bump();
                    if self.at_punct(")") {
                        vars.push(None);
                    }
                } else if !self.at_punct(")") {
                    return Ok(None);
                }
            }
            if !vars.iter().any(Option::is_some) || !self.at_punct("=") {
                return Ok(None);
            }
            self.bump();
            let init = self.expr()?;
            self.expect_punct(";")?;
            return Ok(Some(StmtKind::VarDecl { vars, tuple: true, init: Some(init) }));
        }
        let var = self.local_var()?;
        let init = if self.at_punct("=") {
            self.bump();
            Some(self.expr()?)
        } else if self.at_punct(";") {
            None
        } else {
            return Ok(None);
        };
        self.expect_punct(";")?;
        Ok(Some(StmtKind::VarDecl { vars: vec![Some(var)], tuple: false, init }))
    }

    // ----- expressions ---------------------------------------------------

    pub(super) fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.conditional()?;
        if let Some(t) = self.peek() {
            let op = self.text(t);
            if t.kind == TokenKind::Punct
                && matches!(
                    op,
                    "=" | "|=" | "^=" | "&=" | "<<=" | ">>=" | ">>>=" | "+=" | "-=" | "*=" | "/=" | "%="
                )
            {
                self.bump();
                let rhs = self.expr()?;
                let span = Span::new(lhs.span.start, rhs.span.end);
                return Ok(Expr {
                    kind: ExprKind::Assign { op: op.to_string(), lhs: Box::new(lhs), rhs: Box::new(rhs) },
                    span,
                });
            }
        }
        Ok(lhs)
    }

    fn conditional(&mut self) -> PResult<Expr> {
        let cond = self.binary(0)?;
        if !self.at_punct("?") {
            return Ok(cond);
        }
        self.bump();
        let then = self.expr()?;
        self.expect_punct(":")?;
        let els = self.expr()?;
        let span = Span::new(cond.span.start, els.span.end);
        Ok(Expr {
            kind: ExprKind::Conditional { cond: Box::new(cond), then: Box::new(then), els: Box::new(els) },
            span,
        })
    }

    fn binary_op(&self) -> Option<(&'s str, u8)> {
        let t = self.peek().filter(|t| t.kind == TokenKind::Punct)?;
        let op = self.text(t);
        let prec = match op {
            "**" => 14,
            "*" | "/" | "%" => 13,
            "+" | "-" => 12,
            "<<" | ">>" | ">>>" => 11,
            "&" => 10,
            "^" => 9,
            "|" => 8,
            "<" | ">" | "<=" | ">=" => 7,
            "==" | "!=" => 6,
            "&&" => 5,
            "||" => 4,
            _ => return None,
        };
        Some((op, prec))
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some((op, prec)) = self.binary_op() {
            if prec < min_prec {
                break;
            }
            self.bump();
            let next_min = if op == "**" { prec } else { prec + 1 };
            let rhs = self.binary(next_min)?;
            let span = Span::new(lhs.span.start, rhs.span.end);
            lhs = Expr {
                kind: ExprKind::Binary { op: op.to_string(), lhs: Box::new(lhs), rhs: Box::new(rhs) },
                span,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.start();
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Punct && matches!(self.text(t), "!" | "~" | "-" | "++" | "--" | "+") => {
                Some(self.text(t))
            }
            Some(t) if t.kind == TokenKind::Ident && self.text(t) == "delete" => Some("delete"),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let operand = self.unary()?;
            return Ok(Expr {
                kind: ExprKind::Unary { op: op.to_string(), prefix: true, operand: Box::new(operand) },
                span: self.span_from(start),
            });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let start = self.start();
        let mut e = self.primary()?;
        loop {
            if self.at_punct("(") {
                self.bump();
                let (args, named) = self.call_args()?;
                e = Expr {
                    kind: ExprKind::Call { callee: Box::new(e), args, named },
                    span: self.span_from(start),
                };
            } else if self.at_punct("[") {
                self.bump();
                let first = if self.at_punct("]") || self.at_punct(":") { None } else { Some(Box::new(self.expr()?)) };
                if self.at_punct(":") {
                    self.bump();
                    let end = if self.at_punct("]") { None } else { Some(Box::new(self.expr()?)) };
                    self.expect_punct("]")?;
                    e = Expr {
                        kind: ExprKind::Slice { base: Box::new(e), start: first, end },
                        span: self.span_from(start),
                    };
                } else {
                    self.expect_punct("]")?;
                    e = Expr { kind: ExprKind::Index { base: Box::new(e), index: first }, span: self.span_from(start) };
                }
            } else if self.at_punct(".") {
                self.bump();
                let t = self.peek().filter(|t| t.kind == TokenKind::Ident).ok_or_else(|| self.error_here("expected member name"))?;
                self.bump();
                let member = Ident { name: self.text(t).into(), span: t.span };
                e = Expr { kind: ExprKind::Member { base: Box::new(e), member }, span: self.span_from(start) };
            } else if self.at_punct("++") || self.at_punct("--") {
                let op = self.bump_text().to_string();
                e = Expr {
                    kind: ExprKind::Unary { op, prefix: false, operand: Box::new(e) },
                    span: self.span_from(start),
                };
            } else if self.at_punct("{")
                && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Ident)
                && self.punct_at(2, ":")
            {
                self.bump();
                let mut names = Vec::new();
                let mut values = Vec::new();
                while !self.at_punct("}") {
                    names.push(self.ident_any()?);
                    self.expect_punct(":")?;
                    values.push(self.expr()?);
                    if self.at_punct(",") {
                        self.bump();
                    }
                }
                self.bump();
                e = Expr {
                    kind: ExprKind::CallOptions { callee: Box::new(e), names, values },
                    span: self.span_from(start),
                };
            } else {
                return Ok(e);
            }
        }
    }

    fn ident_any(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                self.bump();
                Ok(Ident { name: self.text(t).into(), span: t.span })
            }
            _ => Err(self.error_here("expected identifier")),
        }
    }

    fn call_args(&mut self) -> PResult<(Vec<Expr>, Option<Vec<Ident>>)> {
        let mut args = Vec::new();
        if self.at_punct("{") {
            self.bump();
            let mut names = Vec::new();
            while !self.at_punct("}") {
                names.push(self.ident_any()?);
                self.expect_punct(":")?;
                args.push(self.expr()?);
                if self.at_punct(",") {
                    self.bump();
                }
            }
            self.bump();
            self.expect_punct(")")?;
            return Ok((args, Some(names)));
        }
        if self.at_punct(")") {
            self.bump();
            return Ok((args, None));
        }
        loop {
            args.push(self.expr()?);
            if self.at_punct(",") {
                self.bump();
                continue;
            }
            self.expect_punct(")")?;
            return Ok((args, None));
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.start();
        let t = self.peek().ok_or_else(|| self.error_here("expected expression"))?;
        match t.kind {
            TokenKind::Number => {
                self.bump();
                let text = self.text(t);
                let kind = if text.starts_with("0x") || text.starts_with("0X") {
                    LitKind::HexNumber
                } else {
                    LitKind::Number
                };
                let unit = match self.word() {
                    Some(u) if UNITS.contains(&u) => {
                        self.bump();
                        Some(u.to_string())
                    }
                    _ => None,
                };
                Ok(Expr { kind: ExprKind::Literal { kind, unit }, span: self.span_from(start) })
            }
            TokenKind::Str => {
                while self.peek().is_some_and(|t| t.kind == TokenKind::Str) {
                    self.bump();
                }
                Ok(Expr { kind: ExprKind::Literal { kind: LitKind::Str, unit: None }, span: self.span_from(start) })
            }
            TokenKind::Punct => match self.text(t) {
                "(" => {
                    self.bump();
                    let mut items: Vec<Option<Expr>> = Vec::new();
                    let mut saw_comma = false;
                    loop {
                        if self.at_punct(")") {
                            self.bump();
                            break;
                        }
                        if self.at_punct(",") {
                            self.bump();
                            saw_comma = true;
                            if items.is_empty() {
                                items.push(None);
                            }
                            if self.at_punct(",") || self.at_punct(")") {
                                items.push(None);
                            }
                            continue;
                        }
                        let e = self.expr()?;
                        if let Some(last @ None) = items.last_mut() {
                            if saw_comma {
                                *last = Some(e);
                                continue;
                            }
                        }
                        items.push(Some(e));
                    }
                    let span = self.span_from(start);
                    if !saw_comma && items.len() == 1 {
                        let inner = items.pop().flatten().expect("single parenthesized item");
                        Ok(Expr { kind: ExprKind::Paren(Box::new(inner)), span })
                    } else {
                        Ok(Expr { kind: ExprKind::Tuple(items), span })
                    }
                }
                "[" => {
                    self.bump();
                    let mut items = Vec::new();
                    while !self.at_punct("]") {
                        items.push(self.expr()?);
                        if self.at_punct(",") {
                            self.bump();
                        } else if !self.at_punct("]") {
                            return Err(self.error_here("expected `,` or `]`"));
                        }
                    }
                    self.bump();
                    Ok(Expr { kind: ExprKind::InlineArray(items), span: self.span_from(start) })
                }
                other => Err(self.error_here(format!("unexpected `{other}` in expression"))),
            },
            TokenKind::Ident => {
                let word = self.text(t);
                match word {
                    "true" | "false" => {
                        self.bump();
                        Ok(Expr { kind: ExprKind::Literal { kind: LitKind::Bool, unit: None }, span: t.span })
                    }
                    "new" => {
                        self.bump();
                        let ty = self.new_type()?;
                        Ok(Expr { kind: ExprKind::New(ty), span: self.span_from(start) })
                    }
                    w if is_elementary_type(w) => {
                        self.bump();
                        let ty = TypeName { kind: TypeKind::Elementary(normalize_elementary(w)), span: t.span };
                        Ok(Expr { kind: ExprKind::TypeExpr(ty), span: t.span })
                    }
                    "function" | "assembly" | "try" => Err(self.unsupported(word)),
                    _ => {
                        self.bump();
                        Ok(Expr { kind: ExprKind::Ident(word.to_string()), span: t.span })
                    }
                }
            }
        }
    }

    /// Type after `new`: array suffixes are allowed but `[n]` lengths are not
    /// confused with a following call.
    fn new_type(&mut self) -> PResult<TypeName> {
        self.type_name()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_ok(src: &str) -> Ast {
        parse(src).unwrap_or_else(|e| panic!("{e}\n{src}"))
    }

    fn first_fn_body(ast: &Ast) -> &Block {
        for c in ast.contracts() {
            for m in &c.members {
                if let Member::Function(f) = m {
                    if let Some(b) = &f.body {
                        return b;
                    }
                }
            }
        }
        panic!("no function body");
    }

    #[test]
    fn minimal_unit() {
        let ast = parse_ok("contract C { function f() public {} }");
        let c: Vec<_> = ast.contracts().collect();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].members.len(), 1);
        match &c[0].members[0] {
            Member::Function(f) => {
                assert_eq!(f.name.as_ref().unwrap().name, "f");
                assert!(f.body.as_ref().unwrap().stmts.is_empty());
            }
            _ => panic!("expected function"),
        }
    }

    #[test]
    fn do_while_condition_span() {
        let src = "contract C { function f() public { uint x; do { x++; } while (x < 3); } }";
        let ast = parse_ok(src);
        let body = first_fn_body(&ast);
        match &body.stmts[1].kind {
            StmtKind::DoWhile { cond, .. } => assert_eq!(cond.span.slice(src), "x < 3"),
            other => panic!("expected do-while, got {other:?}"),
        }
    }

    #[test]
    fn declarations_vs_expressions() {
        let src = "contract C { uint[] a; mapping(address => uint) m; function f(uint i) public {
            a[i] = 0;
            uint[] memory b = new uint[](3);
            (uint x, , bool y) = g();
            (x, y) = (1, true);
            m[msg.sender] += 1;
            x * i;
            C.S memory s;
        } }";
        let ast = parse_ok(src);
        let body = first_fn_body(&ast);
        let kinds: Vec<&str> = body
            .stmts
            .iter()
            .map(|s| match s.kind {
                StmtKind::VarDecl { .. } => "decl",
                StmtKind::Expr(_) => "expr",
                _ => "other",
            })
            .collect();
        assert_eq!(kinds, vec!["expr", "decl", "decl", "expr", "expr", "expr", "decl"]);
        match &body.stmts[2].kind {
            StmtKind::VarDecl { vars, tuple, .. } => {
                assert!(*tuple);
                assert_eq!(vars.len(), 3);
                assert!(vars[1].is_none());
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn precedence_and_associativity() {
        let src = "contract C { function f() public { x = a + b * c ** d ** e - -g; } }";
        let ast = parse_ok(src);
        let StmtKind::Expr(e) = &first_fn_body(&ast).stmts[0].kind else { panic!() };
        let ExprKind::Assign { rhs, .. } = &e.kind else { panic!() };
        let ExprKind::Binary { op, lhs, rhs: neg } = &rhs.kind else { panic!() };
        assert_eq!(op, "-");
        assert_eq!(neg.span.slice(src), "-g");
        let ExprKind::Binary { op, rhs: mul, .. } = &lhs.kind else { panic!() };
        assert_eq!(op, "+");
        let ExprKind::Binary { rhs: pow, .. } = &mul.kind else { panic!() };
        assert_eq!(pow.span.slice(src), "c ** d ** e");
        let ExprKind::Binary { rhs: inner, .. } = &pow.kind else { panic!() };
        assert_eq!(inner.span.slice(src), "d ** e");
    }

    #[test]
    fn opaque_regions_and_misc_syntax() {
        let src = r#"pragma solidity ^0.8.0;
        interface I { function g() external returns (uint); }
        library L { function h(uint a) internal pure returns (uint) { return a; } }
        contract C is I {
            using L for uint;
            event E(uint indexed a, bytes b);
            error Bad(uint code);
            struct S { uint a; mapping(uint => uint) m; }
            enum K { A, B }
            uint public constant X = 1 ether;
            modifier only() { require(msg.sender != address(0), "no"); _; }
            constructor() payable {}
            receive() external payable {}
            fallback() external {}
            function g() external override only returns (uint r) {
                assembly { r := add(1, 2) }
                try this.g() returns (uint v) { r = v; } catch Error(string memory) { } catch { }
                unchecked { r += 1; }
                emit E(r, hex"00ff");
                if (r > 3) revert Bad({code: r});
                (bool ok, ) = address(this).call{value: 0}("");
                r = ok ? type(uint8).max : uint8(r);
                bytes memory d = msg.data[4:];
                r = abi.decode(d, (uint256[]))[0];
            }
        }"#;
        let ast = parse_ok(src);
        assert_eq!(ast.contracts().count(), 3);
        assert_eq!(ast.pragma_solidity().unwrap().slice(src), "^0.8.0");
    }

    #[test]
    fn imports_are_unsupported() {
        let err = parse("import \"./A.sol\";\ncontract C {}").unwrap_err();
        assert!(matches!(err, ParseError::Unsupported { .. }), "{err:?}");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse("contract C {\n  function f() public { x = ; }\n}").unwrap_err();
        match err {
            ParseError::Syntax { line, column, .. } => {
                assert_eq!(line, 2);
                assert_eq!(column, 29);
            }
            other => panic!("{other:?}"),
        }
    }
}
