//! Tokenizer for the supported Solidity subset.
//!
//! Whitespace and comments are not emitted as tokens; they survive only as
//! the gaps between token spans, which is all the span-based printer needs.

use super::{ParseError, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    /// Any string literal, including `hex"..."` and `unicode"..."`.
    Str,
    Punct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.span.start..self.span.end]
    }
}

const PUNCTS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "**", "=>", "->", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
    "+=", "-=", "*=", "/=", "%=", "|=", "&=", "^=", "<<", ">>", ":=", "{", "}", "(", ")", "[", "]",
    ";", ",", ".", "?", ":", "=", "<", ">", "+", "-", "*", "/", "%", "!", "~", "&", "|", "^", "@",
];

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b == b'$'
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$'
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if b == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if b == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let start = i;
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(ParseError::syntax(
                        src,
                        Span::new(start, bytes.len()),
                        "unterminated block comment",
                    ));
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
            continue;
        }
        let start = i;
        if is_ident_start(b) {
            while i < bytes.len() && is_ident_continue(bytes[i]) {
                i += 1;
            }
            let word = &src[start..i];
            if (word == "hex" || word == "unicode")
                && matches!(bytes.get(i), Some(b'"') | Some(b'\''))
            {
                i = lex_string(src, i)?;
                tokens.push(Token { kind: TokenKind::Str, span: Span::new(start, i) });
            } else {
                tokens.push(Token { kind: TokenKind::Ident, span: Span::new(start, i) });
            }
            continue;
        }
        if b.is_ascii_digit() || (b == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            i = lex_number(bytes, i);
            tokens.push(Token { kind: TokenKind::Number, span: Span::new(start, i) });
            continue;
        }
        if b == b'"' || b == b'\'' {
            i = lex_string(src, i)?;
            tokens.push(Token { kind: TokenKind::Str, span: Span::new(start, i) });
            continue;
        }
        match PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                i += p.len();
                tokens.push(Token { kind: TokenKind::Punct, span: Span::new(start, i) });
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::syntax(
                    src,
                    Span::new(i, i + ch.len_utf8()),
                    format!("unexpected character {ch:?}"),
                ));
            }
        }
    }
    Ok(tokens)
}

fn lex_number(bytes: &[u8], mut i: usize) -> usize {
    if bytes[i] == b'0' && matches!(bytes.get(i + 1), Some(b'x') | Some(b'X')) {
        i += 2;
        while i < bytes.len() && (bytes[i].is_ascii_hexdigit() || bytes[i] == b'_') {
            i += 1;
        }
        return i;
    }
    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
        i += 1;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
            i += 1;
        }
    }
    if i < bytes.len() && matches!(bytes[i], b'e' | b'E') {
        let mut j = i + 1;
        if bytes.get(j) == Some(&b'-') {
            j += 1;
        }
        if bytes.get(j).is_some_and(u8::is_ascii_digit) {
            i = j;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
                i += 1;
            }
        }
    }
    i
}

/// Lexes one quoted string starting at the quote character; returns the end offset.
fn lex_string(src: &str, quote_at: usize) -> Result<usize, ParseError> {
    let bytes = src.as_bytes();
    let quote = bytes[quote_at];
    let mut i = quote_at + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'\n' => break,
            c if c == quote => return Ok(i + 1),
            _ => i += 1,
        }
    }
    Err(ParseError::syntax(src, Span::new(quote_at, i.min(bytes.len())), "unterminated string literal"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<&str> {
        tokenize(src).unwrap().iter().map(|t| t.text(src)).collect()
    }

    #[test]
    fn longest_operator_match() {
        assert_eq!(texts("a>>>=b<<=c**d"), vec!["a", ">>>=", "b", "<<=", "c", "**", "d"]);
        assert_eq!(texts("x := 1"), vec!["x", ":=", "1"]);
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(texts("a // hi\n/* b */ c"), vec!["a", "c"]);
    }

    #[test]
    fn numbers_and_strings() {
        assert_eq!(texts("0xFF_FF 1e18 1_000 2.5"), vec!["0xFF_FF", "1e18", "1_000", "2.5"]);
        assert_eq!(texts(r#"hex"00ff" "a\"b" 'c'"#), vec![r#"hex"00ff""#, r#""a\"b""#, "'c'"]);
    }

    #[test]
    fn unterminated_comment_is_an_error() {
        assert!(tokenize("a /* b").is_err());
    }
}
