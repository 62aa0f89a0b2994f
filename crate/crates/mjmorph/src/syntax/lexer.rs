//! Lexer for MJ source text.
//!
//! Tokens carry their exact source slice and byte span; whitespace and
//! comments are skipped (comments are not preserved through printing).

use serde::Serialize;
use thiserror::Error;

/// Byte range in the original source, `start <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    // Keywords
    KwInt,
    KwBoolean,
    KwVoid,
    KwIf,
    KwElse,
    KwWhile,
    KwFor,
    KwSwitch,
    KwCase,
    KwDefault,
    KwReturn,
    KwBreak,
    KwContinue,
    // Literals and names
    Ident,
    IntLit,
    True,
    False,
    // Operators
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    NotEq,
    AndAnd,
    OrOr,
    Bang,
    Assign,
    PlusEq,
    MinusEq,
    StarEq,
    SlashEq,
    PercentEq,
    PlusPlus,
    MinusMinus,
    // Punctuation
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Colon,
    Comma,
    Eof,
}

/// Coarse token classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenCategory {
    Keyword,
    Identifier,
    IntLiteral,
    BoolLiteral,
    Operator,
    Punctuation,
    Eof,
}

impl TokenKind {
    pub fn category(self) -> TokenCategory {
        use TokenKind::*;
        match self {
            KwInt | KwBoolean | KwVoid | KwIf | KwElse | KwWhile | KwFor | KwSwitch | KwCase
            | KwDefault | KwReturn | KwBreak | KwContinue => TokenCategory::Keyword,
            Ident => TokenCategory::Identifier,
            IntLit => TokenCategory::IntLiteral,
            True | False => TokenCategory::BoolLiteral,
            Plus | Minus | Star | Slash | Percent | Lt | Le | Gt | Ge | EqEq | NotEq | AndAnd
            | OrOr | Bang | Assign | PlusEq | MinusEq | StarEq | SlashEq | PercentEq | PlusPlus
            | MinusMinus => TokenCategory::Operator,
            LParen | RParen | LBrace | RBrace | Semi | Colon | Comma => TokenCategory::Punctuation,
            Eof => TokenCategory::Eof,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("lex error at {span}: {message}")]
pub struct LexError {
    pub span: Span,
    pub message: String,
}

fn keyword_kind(word: &str) -> Option<TokenKind> {
    Some(match word {
        "int" => TokenKind::KwInt,
        "boolean" => TokenKind::KwBoolean,
        "void" => TokenKind::KwVoid,
        "if" => TokenKind::KwIf,
        "else" => TokenKind::KwElse,
        "while" => TokenKind::KwWhile,
        "for" => TokenKind::KwFor,
        "switch" => TokenKind::KwSwitch,
        "case" => TokenKind::KwCase,
        "default" => TokenKind::KwDefault,
        "return" => TokenKind::KwReturn,
        "break" => TokenKind::KwBreak,
        "continue" => TokenKind::KwContinue,
        "true" => TokenKind::True,
        "false" => TokenKind::False,
        _ => return None,
    })
}

/// Splits source text into tokens, ending with exactly one `Eof` token.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;

    while pos < bytes.len() {
        let b = bytes[pos];
        // Whitespace
        if b.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        // Comments are trivia: lexed and discarded.
        if b == b'/' && pos + 1 < bytes.len() && bytes[pos + 1] == b'/' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        if b == b'/' && pos + 1 < bytes.len() && bytes[pos + 1] == b'*' {
            let start = pos;
            pos += 2;
            loop {
                if pos + 1 >= bytes.len() {
                    return Err(LexError {
                        span: Span::new(start, bytes.len()),
                        message: "unterminated block comment".into(),
                    });
                }
                if bytes[pos] == b'*' && bytes[pos + 1] == b'/' {
                    pos += 2;
                    break;
                }
                pos += 1;
            }
            continue;
        }

        let start = pos;
        if b.is_ascii_alphabetic() || b == b'_' {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            let text = &source[start..pos];
            let kind = keyword_kind(text).unwrap_or(TokenKind::Ident);
            tokens.push(Token {
                kind,
                text: text.to_string(),
                span: Span::new(start, pos),
            });
            continue;
        }
        if b.is_ascii_digit() {
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            tokens.push(Token {
                kind: TokenKind::IntLit,
                text: source[start..pos].to_string(),
                span: Span::new(start, pos),
            });
            continue;
        }

        // Operators and punctuation, longest match first.
        let rest = &source[pos..];
        let table: &[(&str, TokenKind)] = &[
            ("<=", TokenKind::Le),
            (">=", TokenKind::Ge),
            ("==", TokenKind::EqEq),
            ("!=", TokenKind::NotEq),
            ("&&", TokenKind::AndAnd),
            ("||", TokenKind::OrOr),
            ("+=", TokenKind::PlusEq),
            ("-=", TokenKind::MinusEq),
            ("*=", TokenKind::StarEq),
            ("/=", TokenKind::SlashEq),
            ("%=", TokenKind::PercentEq),
            ("++", TokenKind::PlusPlus),
            ("--", TokenKind::MinusMinus),
            ("+", TokenKind::Plus),
            ("-", TokenKind::Minus),
            ("*", TokenKind::Star),
            ("/", TokenKind::Slash),
            ("%", TokenKind::Percent),
            ("<", TokenKind::Lt),
            (">", TokenKind::Gt),
            ("!", TokenKind::Bang),
            ("=", TokenKind::Assign),
            ("(", TokenKind::LParen),
            (")", TokenKind::RParen),
            ("{", TokenKind::LBrace),
            ("}", TokenKind::RBrace),
            (";", TokenKind::Semi),
            (":", TokenKind::Colon),
            (",", TokenKind::Comma),
        ];
        let mut matched = false;
        for (s, kind) in table {
            if rest.starts_with(s) {
                tokens.push(Token {
                    kind: *kind,
                    text: (*s).to_string(),
                    span: Span::new(pos, pos + s.len()),
                });
                pos += s.len();
                matched = true;
                break;
            }
        }
        if !matched {
            let ch_len = source[pos..].chars().next().map_or(1, char::len_utf8);
            return Err(LexError {
                span: Span::new(pos, pos + ch_len),
                message: format!(
                    "unexpected character {:?}",
                    source[pos..pos + ch_len].chars().next().unwrap()
                ),
            });
        }
    }

    tokens.push(Token {
        kind: TokenKind::Eof,
        text: String::new(),
        span: Span::new(source.len(), source.len()),
    });
    Ok(tokens)
}
