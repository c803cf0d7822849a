//! Span-annotated parsing and lossless span-based rewriting of Solidity sources.

pub mod ast;
mod lexer;
mod parser;

use serde::{Deserialize, Serialize};

pub use ast::*;
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{is_elementary_type, normalize_elementary, parse};

/// Half-open byte range `[start, end)` into a source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        debug_assert!(start <= end, "inverted span {start}..{end}");
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn slice<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }
}

/// 1-based line and column (in bytes) of `offset`.
pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src.as_bytes()[..offset.min(src.len())];
    let line = before.iter().filter(|b| **b == b'\n').count() + 1;
    let line_start = before.iter().rposition(|b| *b == b'\n').map_or(0, |p| p + 1);
    (line, offset - line_start + 1)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { message: String, line: usize, column: usize, span: Span },
    #[error("unsupported construct `{construct}` at {line}:{column}")]
    Unsupported { construct: String, line: usize, column: usize, span: Span },
}

impl ParseError {
    pub fn syntax(src: &str, span: Span, message: impl Into<String>) -> ParseError {
        let (line, column) = line_col(src, span.start);
        ParseError::Syntax { message: message.into(), line, column, span }
    }

    pub fn unsupported(src: &str, span: Span, construct: impl Into<String>) -> ParseError {
        let (line, column) = line_col(src, span.start);
        ParseError::Unsupported { construct: construct.into(), line, column, span }
    }

    pub fn is_unsupported(&self) -> bool {
        matches!(self, ParseError::Unsupported { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpanError {
    #[error("{child_kind} span {child:?} escapes parent {parent_kind} span {parent:?}")]
    Escapes { parent_kind: &'static str, parent: Span, child_kind: &'static str, child: Span },
    #[error("sibling spans {first:?} and {second:?} overlap or are out of order")]
    Unordered { first: Span, second: Span },
}

/// Checks that every child span nests in its parent and siblings are disjoint and ordered.
pub fn check_spans(node: &Node) -> Result<(), SpanError> {
    let mut cursor = node.span.start;
    let mut prev: Option<Span> = None;
    for child in &node.children {
        if !node.span.contains(child.span) {
            return Err(SpanError::Escapes {
                parent_kind: node.kind,
                parent: node.span,
                child_kind: child.kind,
                child: child.span,
            });
        }
        if child.span.start < cursor {
            return Err(SpanError::Unordered { first: prev.unwrap_or(node.span), second: child.span });
        }
        cursor = child.span.end;
        prev = Some(child.span);
        check_spans(child)?;
    }
    Ok(())
}

/// Rebuilds the source purely from node spans: each node contributes the
/// gaps between its children and recurses into the children.
pub fn reprint(src: &str, ast: &Ast) -> Result<String, SpanError> {
    let root = ast.node_tree();
    check_spans(&root)?;
    let mut out = String::with_capacity(src.len());
    emit(src, &root, &mut out);
    Ok(out)
}

fn emit(src: &str, node: &Node, out: &mut String) {
    let mut cursor = node.span.start;
    for child in &node.children {
        out.push_str(&src[cursor..child.span.start]);
        emit(src, child, out);
        cursor = child.span.end;
    }
    out.push_str(&src[cursor..node.span.end]);
}

/// AST dump used by the `--dump-ast` debug flag.
pub fn ast_json(ast: &Ast) -> serde_json::Value {
    serde_json::to_value(ast.node_tree()).expect("node tree serializes")
}

/// The contract that gets deployed: the last non-abstract contract in source order.
pub fn main_contract(ast: &Ast) -> Option<&ContractDef> {
    ast.contracts().filter(|c| c.kind == ContractKind::Contract).last()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edit {
    pub span: Span,
    pub replacement: String,
}

impl Edit {
    pub fn replace(span: Span, replacement: impl Into<String>) -> Edit {
        Edit { span, replacement: replacement.into() }
    }

    pub fn insert(at: usize, text: impl Into<String>) -> Edit {
        Edit { span: Span::new(at, at), replacement: text.into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EditSet {
    pub edits: Vec<Edit>,
}

impl EditSet {
    pub fn new() -> EditSet {
        EditSet::default()
    }

    pub fn push(&mut self, edit: Edit) {
        self.edits.push(edit);
    }

    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }

    pub fn len(&self) -> usize {
        self.edits.len()
    }

    pub fn spans(&self) -> impl Iterator<Item = Span> + '_ {
        self.edits.iter().map(|e| e.span)
    }
}

impl FromIterator<Edit> for EditSet {
    fn from_iter<I: IntoIterator<Item = Edit>>(iter: I) -> EditSet {
        EditSet { edits: iter.into_iter().collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EditError {
    #[error("edit spans {0:?} and {1:?} overlap")]
    Overlap(Span, Span),
    #[error("edit span {span:?} out of bounds for source of {len} bytes")]
    OutOfBounds { span: Span, len: usize },
    #[error("edit span {0:?} splits a UTF-8 character")]
    CharBoundary(Span),
}

/// Sorted edit order; an insertion precedes a replacement starting at the same offset.
fn ordered(edits: &EditSet) -> Vec<&Edit> {
    let mut sorted: Vec<&Edit> = edits.edits.iter().collect();
    sorted.sort_by_key(|e| (e.span.start, e.span.end));
    sorted
}

/// Validates the whole set before anything is rewritten.
pub fn validate_edits(src: &str, edits: &EditSet) -> Result<(), EditError> {
    for e in &edits.edits {
        if e.span.end > src.len() || e.span.start > e.span.end {
            return Err(EditError::OutOfBounds { span: e.span, len: src.len() });
        }
        if !src.is_char_boundary(e.span.start) || !src.is_char_boundary(e.span.end) {
            return Err(EditError::CharBoundary(e.span));
        }
    }
    let sorted = ordered(edits);
    for pair in sorted.windows(2) {
        let (a, b) = (pair[0].span, pair[1].span);
        // two insertions at one offset have no defined order
        let both_empty_same = a.is_empty() && b.is_empty() && a.start == b.start;
        if a.end > b.start || both_empty_same {
            return Err(EditError::Overlap(a, b));
        }
    }
    Ok(())
}

pub fn apply_edits(src: &str, edits: &EditSet) -> Result<String, EditError> {
    validate_edits(src, edits)?;
    let mut out = String::with_capacity(src.len() + 64);
    let mut cursor = 0;
    for e in ordered(edits) {
        out.push_str(&src[cursor..e.span.start]);
        out.push_str(&e.replacement);
        cursor = e.span.end;
    }
    out.push_str(&src[cursor..]);
    Ok(out)
}
