//! Lexing, parsing, canonical printing, and structural comparison for MJ,
//! the Java subset the transformations operate on.
//!
//! The grammar covers `int`/`boolean`/`void` methods with locals, `if`,
//! `while`, `for`, `switch`, `return`/`break`/`continue`, nested blocks, and
//! intra-unit calls. No fields, objects, strings, or arrays.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use ast::{
    ast_equal, expr_equal, node_ids_unique, stmt_equal, AssignOp, BinaryOp, Block,
    CompilationUnit, Expr, ForInit, IncDecOp, MethodDecl, NodeId, Param, Stmt, SwitchCase, Type,
    UnaryOp,
};
pub use lexer::{tokenize, LexError, Span, Token, TokenCategory, TokenKind};
pub use parser::{parse, parse_source, ParseError};
pub use printer::{print, print_method};

use thiserror::Error;

/// Either phase of turning text into an AST can fail.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SyntaxError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}
