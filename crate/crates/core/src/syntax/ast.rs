//! Span-annotated syntax tree.
//!
//! Nodes never store normalized text: every piece of source is recovered by
//! slicing the original file with a node's [`Span`].

use serde::Serialize;

use super::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct Ast {
    pub source_len: usize,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone)]
pub enum Item {
    Pragma(Pragma),
    Contract(ContractDef),
    Function(FunctionDef),
    StateVar(VarDecl),
    Opaque(OpaqueDecl),
}

impl Item {
    pub fn span(&self) -> Span {
        match self {
            Item::Pragma(p) => p.span,
            Item::Contract(c) => c.span,
            Item::Function(f) => f.span,
            Item::StateVar(v) => v.span,
            Item::Opaque(o) => o.span,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Pragma {
    /// `solidity`, `abicoder`, `experimental`, ...
    pub name: String,
    /// Everything after the pragma name, up to (excluding) the `;`.
    pub value: Span,
    pub span: Span,
}

/// Declarations kept as unanalyzed spans: events, errors, structs, enums,
/// `using ... for`, user-defined value types.
#[derive(Debug, Clone)]
pub struct OpaqueDecl {
    pub keyword: String,
    pub name: Option<Ident>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractKind {
    Contract,
    AbstractContract,
    Interface,
    Library,
}

#[derive(Debug, Clone)]
pub struct ContractDef {
    pub kind: ContractKind,
    pub name: Ident,
    /// `is A, B(1)` clause, if present.
    pub inheritance: Option<Span>,
    pub members: Vec<Member>,
    /// Span of the `{ ... }` body.
    pub body: Span,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum Member {
    StateVar(VarDecl),
    Function(FunctionDef),
    Opaque(OpaqueDecl),
}

impl Member {
    pub fn span(&self) -> Span {
        match self {
            Member::StateVar(v) => v.span,
            Member::Function(f) => f.span,
            Member::Opaque(o) => o.span,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    Function,
    Constructor,
    Fallback,
    Receive,
    Modifier,
}

#[derive(Debug, Clone)]
pub struct FunctionDef {
    pub kind: FunctionKind,
    pub name: Option<Ident>,
    pub params: Vec<Param>,
    pub returns: Vec<Param>,
    /// Visibility, mutability, `virtual`, `override(...)`, modifier invocations.
    pub attributes: Vec<Attribute>,
    pub body: Option<Block>,
    pub span: Span,
}

impl FunctionDef {
    pub fn has_attribute(&self, word: &str) -> bool {
        self.attributes.iter().any(|a| a.word == word)
    }
}

#[derive(Debug, Clone)]
pub struct Attribute {
    pub word: String,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct Param {
    pub ty: TypeName,
    pub location: Option<String>,
    pub name: Option<Ident>,
    pub span: Span,
}

/// State variable or file-level constant.
#[derive(Debug, Clone)]
pub struct VarDecl {
    pub ty: TypeName,
    pub attributes: Vec<Attribute>,
    pub name: Ident,
    pub init: Option<Expr>,
    pub span: Span,
}

impl VarDecl {
    pub fn is_constant(&self) -> bool {
        self.attributes.iter().any(|a| a.word == "constant" || a.word == "immutable")
    }
}

#[derive(Debug, Clone)]
pub struct TypeName {
    pub kind: TypeKind,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum TypeKind {
    /// Normalized elementary name: `uint` becomes `uint256`, `byte` becomes `bytes1`.
    Elementary(String),
    UserDefined(String),
    Mapping { key: Box<TypeName>, value: Box<TypeName> },
    Array { base: Box<TypeName>, length: Option<Box<Expr>> },
    Function,
}

impl TypeName {
    /// Elementary value type name, if this is one (`address payable` maps to `address`).
    pub fn elementary(&self) -> Option<&str> {
        match &self.kind {
            TypeKind::Elementary(name) => Some(name),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Block {
    pub unchecked: bool,
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct LocalVar {
    pub ty: TypeName,
    pub location: Option<String>,
    pub name: Ident,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OpaqueKind {
    Assembly,
    TryCatch,
}

#[derive(Debug, Clone)]
pub enum StmtKind {
    Block(Block),
    /// `T x = e;`, `T x;` or `(T a, , T b) = e;`.
    VarDecl { vars: Vec<Option<LocalVar>>, tuple: bool, init: Option<Expr> },
    Expr(Expr),
    If { cond: Expr, then: Box<Stmt>, els: Option<Box<Stmt>> },
    While { cond: Expr, body: Box<Stmt> },
    DoWhile { body: Box<Stmt>, cond: Expr },
    For { init: Option<Box<Stmt>>, cond: Option<Expr>, update: Option<Expr>, body: Box<Stmt> },
    Continue,
    Break,
    Return(Option<Expr>),
    Emit(Expr),
    Revert(Expr),
    Placeholder,
    Opaque(OpaqueKind),
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LitKind {
    Number,
    HexNumber,
    Str,
    Bool,
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Ident(String),
    /// Literal; `unit` is a trailing sub-denomination such as `ether` or `days`.
    Literal { kind: LitKind, unit: Option<String> },
    /// Elementary type in expression position, e.g. the callee of `uint8(x)`.
    TypeExpr(TypeName),
    Unary { op: String, prefix: bool, operand: Box<Expr> },
    Binary { op: String, lhs: Box<Expr>, rhs: Box<Expr> },
    Assign { op: String, lhs: Box<Expr>, rhs: Box<Expr> },
    Conditional { cond: Box<Expr>, then: Box<Expr>, els: Box<Expr> },
    Call { callee: Box<Expr>, args: Vec<Expr>, named: Option<Vec<Ident>> },
    CallOptions { callee: Box<Expr>, names: Vec<Ident>, values: Vec<Expr> },
    Index { base: Box<Expr>, index: Option<Box<Expr>> },
    Slice { base: Box<Expr>, start: Option<Box<Expr>>, end: Option<Box<Expr>> },
    Member { base: Box<Expr>, member: Ident },
    Paren(Box<Expr>),
    Tuple(Vec<Option<Expr>>),
    InlineArray(Vec<Expr>),
    New(TypeName),
}

impl Expr {
    /// The identifier name if this expression is a bare identifier.
    pub fn as_ident(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Ident(name) => Some(name),
            _ => None,
        }
    }

    /// Strips redundant parentheses.
    pub fn peel(&self) -> &Expr {
        match &self.kind {
            ExprKind::Paren(inner) => inner.peel(),
            _ => self,
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Ident(_) | ExprKind::Literal { .. } | ExprKind::TypeExpr(_) | ExprKind::New(_) => {
                vec![]
            }
            ExprKind::Unary { operand, .. } => vec![operand],
            ExprKind::Binary { lhs, rhs, .. } | ExprKind::Assign { lhs, rhs, .. } => vec![lhs, rhs],
            ExprKind::Conditional { cond, then, els } => vec![cond, then, els],
            ExprKind::Call { callee, args, .. } => {
                std::iter::once(&**callee).chain(args.iter()).collect()
            }
            ExprKind::CallOptions { callee, values, .. } => {
                std::iter::once(&**callee).chain(values.iter()).collect()
            }
            ExprKind::Index { base, index } => {
                std::iter::once(&**base).chain(index.as_deref()).collect()
            }
            ExprKind::Slice { base, start, end } => std::iter::once(&**base)
                .chain(start.as_deref())
                .chain(end.as_deref())
                .collect(),
            ExprKind::Member { base, .. } => vec![base],
            ExprKind::Paren(inner) => vec![inner],
            ExprKind::Tuple(items) => items.iter().flatten().collect(),
            ExprKind::InlineArray(items) => items.iter().collect(),
        }
    }

    /// Pre-order walk over this expression and all sub-expressions.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for child in self.children() {
            child.walk(f);
        }
    }
}

impl Stmt {
    /// Expressions owned directly by this statement (not by nested statements).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::VarDecl { init, .. } => init.iter().collect(),
            StmtKind::Expr(e) | StmtKind::Emit(e) | StmtKind::Revert(e) => vec![e],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::DoWhile { cond, .. } => {
                vec![cond]
            }
            StmtKind::For { cond, update, .. } => cond.iter().chain(update.iter()).collect(),
            StmtKind::Return(e) => e.iter().collect(),
            _ => vec![],
        }
    }

    /// Directly nested statements.
    pub fn sub_stmts(&self) -> Vec<&Stmt> {
        match &self.kind {
            StmtKind::Block(b) => b.stmts.iter().collect(),
            StmtKind::If { then, els, .. } => std::iter::once(&**then).chain(els.as_deref()).collect(),
            StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } => vec![body],
            StmtKind::For { init, body, .. } => init.as_deref().into_iter().chain(std::iter::once(&**body)).collect(),
            _ => vec![],
        }
    }

    /// Pre-order walk over this statement and every nested statement.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        for s in self.sub_stmts() {
            s.walk(f);
        }
    }
}

/// Generic view of the tree used for span checks, reprinting and JSON dumps.
#[derive(Debug, Clone, Serialize)]
pub struct Node {
    pub kind: &'static str,
    pub span: Span,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Node>,
}

impl Node {
    fn leaf(kind: &'static str, span: Span) -> Node {
        Node { kind, span, children: vec![] }
    }

    /// Calls `f` on every node, parents before children.
    pub fn visit(&self, f: &mut dyn FnMut(&Node)) {
        f(self);
        for c in &self.children {
            c.visit(f);
        }
    }
}

impl Ast {
    pub fn node_tree(&self) -> Node {
        Node {
            kind: "source_unit",
            span: Span::new(0, self.source_len),
            children: self.items.iter().map(item_node).collect(),
        }
    }

    pub fn contracts(&self) -> impl Iterator<Item = &ContractDef> {
        self.items.iter().filter_map(|i| match i {
            Item::Contract(c) => Some(c),
            _ => None,
        })
    }

    pub fn pragma_solidity(&self) -> Option<Span> {
        self.items.iter().find_map(|i| match i {
            Item::Pragma(p) if p.name == "solidity" => Some(p.value),
            _ => None,
        })
    }
}

fn item_node(item: &Item) -> Node {
    match item {
        Item::Pragma(p) => Node::leaf("pragma", p.span),
        Item::Contract(c) => Node {
            kind: "contract",
            span: c.span,
            children: c.members.iter().map(member_node).collect(),
        },
        Item::Function(f) => function_node(f),
        Item::StateVar(v) => var_decl_node(v),
        Item::Opaque(o) => Node::leaf("opaque_declaration", o.span),
    }
}

fn member_node(m: &Member) -> Node {
    match m {
        Member::StateVar(v) => var_decl_node(v),
        Member::Function(f) => function_node(f),
        Member::Opaque(o) => Node::leaf("opaque_declaration", o.span),
    }
}

fn var_decl_node(v: &VarDecl) -> Node {
    let mut children = vec![type_node(&v.ty)];
    children.extend(v.init.iter().map(expr_node));
    Node { kind: "state_variable", span: v.span, children }
}

fn function_node(f: &FunctionDef) -> Node {
    let mut children: Vec<Node> = f.params.iter().map(param_node).collect();
    children.extend(f.returns.iter().map(param_node));
    children.extend(f.body.iter().map(block_node));
    let kind = if f.kind == FunctionKind::Modifier { "modifier" } else { "function" };
    Node { kind, span: f.span, children }
}

fn param_node(p: &Param) -> Node {
    Node { kind: "parameter", span: p.span, children: vec![type_node(&p.ty)] }
}

fn type_node(t: &TypeName) -> Node {
    let children = match &t.kind {
        TypeKind::Mapping { key, value } => vec![type_node(key), type_node(value)],
        TypeKind::Array { base, length } => {
            let mut c = vec![type_node(base)];
            c.extend(length.iter().map(|e| expr_node(e)));
            c
        }
        _ => vec![],
    };
    Node { kind: "type_name", span: t.span, children }
}

fn block_node(b: &Block) -> Node {
    Node {
        kind: if b.unchecked { "unchecked_block" } else { "block" },
        span: b.span,
        children: b.stmts.iter().map(stmt_node).collect(),
    }
}

fn stmt_node(s: &Stmt) -> Node {
    let (kind, children): (&'static str, Vec<Node>) = match &s.kind {
        StmtKind::Block(b) => return block_node(b),
        StmtKind::VarDecl { vars, init, .. } => {
            let mut c: Vec<Node> = vars
                .iter()
                .flatten()
                .map(|v| Node { kind: "local_variable", span: v.span, children: vec![type_node(&v.ty)] })
                .collect();
            c.extend(init.iter().map(expr_node));
            ("variable_declaration", c)
        }
        StmtKind::Expr(e) => ("expression_statement", vec![expr_node(e)]),
        StmtKind::If { cond, then, els } => {
            let mut c = vec![expr_node(cond), stmt_node(then)];
            c.extend(els.iter().map(|e| stmt_node(e)));
            ("if", c)
        }
        StmtKind::While { cond, body } => ("while", vec![expr_node(cond), stmt_node(body)]),
        StmtKind::DoWhile { body, cond } => ("do_while", vec![stmt_node(body), expr_node(cond)]),
        StmtKind::For { init, cond, update, body } => {
            let mut c = vec![];
            c.extend(init.iter().map(|s| stmt_node(s)));
            c.extend(cond.iter().map(expr_node));
            c.extend(update.iter().map(expr_node));
            c.push(stmt_node(body));
            ("for", c)
        }
        StmtKind::Continue => ("continue", vec![]),
        StmtKind::Break => ("break", vec![]),
        StmtKind::Return(e) => ("return", e.iter().map(expr_node).collect()),
        StmtKind::Emit(e) => ("emit", vec![expr_node(e)]),
        StmtKind::Revert(e) => ("revert", vec![expr_node(e)]),
        StmtKind::Placeholder => ("placeholder", vec![]),
        StmtKind::Opaque(OpaqueKind::Assembly) => ("assembly", vec![]),
        StmtKind::Opaque(OpaqueKind::TryCatch) => ("try_catch", vec![]),
    };
    Node { kind, span: s.span, children }
}

fn expr_node(e: &Expr) -> Node {
    let kind = match &e.kind {
        ExprKind::Ident(_) => "identifier",
        ExprKind::Literal { .. } => "literal",
        ExprKind::TypeExpr(_) => "type_expression",
        ExprKind::Unary { .. } => "unary_op",
        ExprKind::Binary { .. } => "binary_op",
        ExprKind::Assign { .. } => "assignment",
        ExprKind::Conditional { .. } => "conditional",
        ExprKind::Call { .. } => "function_call",
        ExprKind::CallOptions { .. } => "call_options",
        ExprKind::Index { .. } => "index_access",
        ExprKind::Slice { .. } => "index_range_access",
        ExprKind::Member { .. } => "member_access",
        ExprKind::Paren(_) => "paren",
        ExprKind::Tuple(_) => "tuple",
        ExprKind::InlineArray(_) => "inline_array",
        ExprKind::New(_) => "new",
    };
    let children = match &e.kind {
        ExprKind::TypeExpr(t) | ExprKind::New(t) => vec![type_node(t)],
        _ => e.children().into_iter().map(expr_node).collect(),
    };
    Node { kind, span: e.span, children }
}
