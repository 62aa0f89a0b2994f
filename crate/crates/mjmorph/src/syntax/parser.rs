//! Recursive descent parser for MJ.
//!
//! Produces a [`CompilationUnit`] with fresh, unique NodeIds. Fails on the
//! first violation with no recovery. Branch statements are normalized to
//! blocks so the printer can always emit braces.

use thiserror::Error;

use super::ast::*;
use super::lexer::{Span, Token, TokenKind};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("parse error at {span}: expected {expected}, found {found}")]
pub struct ParseError {
    pub span: Span,
    pub expected: String,
    pub found: String,
}

pub fn parse(tokens: &[Token]) -> Result<CompilationUnit, ParseError> {
    let mut p = Parser {
        tokens,
        pos: 0,
        next_id: 0,
    };
    p.unit()
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    next_id: u32,
}

impl<'a> Parser<'a> {
    fn fresh(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_kind(&self) -> TokenKind {
        self.peek().kind
    }

    fn advance(&mut self) -> &Token {
        let t = &self.tokens[self.pos.min(self.tokens.len() - 1)];
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        let t = self.peek();
        let found = if t.kind == TokenKind::Eof {
            "end of input".to_string()
        } else {
            format!("`{}`", t.text)
        };
        ParseError {
            span: t.span,
            expected: expected.to_string(),
            found,
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<&Token, ParseError> {
        if self.peek_kind() == kind {
            Ok(self.advance())
        } else {
            Err(self.error(what))
        }
    }

    fn eat(&mut self, kind: TokenKind) -> bool {
        if self.peek_kind() == kind {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unit(&mut self) -> Result<CompilationUnit, ParseError> {
        let mut methods = Vec::new();
        while self.peek_kind() != TokenKind::Eof {
            methods.push(self.method()?);
        }
        if methods.is_empty() {
            return Err(self.error("at least one method declaration"));
        }
        let mut names = std::collections::HashSet::new();
        for m in &methods {
            if !names.insert(m.name.clone()) {
                return Err(ParseError {
                    span: Span::new(0, 0),
                    expected: "unique method names within the unit".into(),
                    found: format!("duplicate method `{}`", m.name),
                });
            }
        }
        Ok(CompilationUnit { methods })
    }

    fn type_keyword(&mut self) -> Result<Type, ParseError> {
        match self.peek_kind() {
            TokenKind::KwInt => {
                self.advance();
                Ok(Type::Int)
            }
            TokenKind::KwBoolean => {
                self.advance();
                Ok(Type::Boolean)
            }
            TokenKind::KwVoid => {
                self.advance();
                Ok(Type::Void)
            }
            _ => Err(self.error("a type (`int`, `boolean`, or `void`)")),
        }
    }

    fn method(&mut self) -> Result<MethodDecl, ParseError> {
        let return_type = self.type_keyword()?;
        let name = self.ident("method name")?;
        self.expect(TokenKind::LParen, "`(`")?;
        let mut params = Vec::new();
        if self.peek_kind() != TokenKind::RParen {
            loop {
                params.push(self.param()?);
                if !self.eat(TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen, "`)`")?;
        let mut seen = std::collections::HashSet::new();
        for p in &params {
            if !seen.insert(p.name.clone()) {
                return Err(ParseError {
                    span: self.peek().span,
                    expected: "pairwise distinct parameter names".into(),
                    found: format!("duplicate parameter `{}`", p.name),
                });
            }
        }
        let id = self.fresh();
        let body = self.block()?;
        Ok(MethodDecl {
            id,
            name,
            return_type,
            params,
            body,
        })
    }

    fn param(&mut self) -> Result<Param, ParseError> {
        let ty = match self.peek_kind() {
            TokenKind::KwInt => Type::Int,
            TokenKind::KwBoolean => Type::Boolean,
            _ => return Err(self.error("a parameter type (`int` or `boolean`)")),
        };
        self.advance();
        let name = self.ident("parameter name")?;
        Ok(Param {
            id: self.fresh(),
            name,
            ty,
        })
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        if self.peek_kind() == TokenKind::Ident {
            Ok(self.advance().text.clone())
        } else {
            Err(self.error(what))
        }
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        let id = self.fresh();
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while self.peek_kind() != TokenKind::RBrace {
            if self.peek_kind() == TokenKind::Eof {
                return Err(self.error("`}`"));
            }
            stmts.push(self.stmt()?);
        }
        self.expect(TokenKind::RBrace, "`}`")?;
        Ok(Block { id, stmts })
    }

    /// Parses a statement in branch position and normalizes it to a block.
    fn branch_block(&mut self) -> Result<Block, ParseError> {
        if self.peek_kind() == TokenKind::LBrace {
            return self.block();
        }
        let id = self.fresh();
        let stmt = self.stmt()?;
        Ok(Block {
            id,
            stmts: vec![stmt],
        })
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        match self.peek_kind() {
            TokenKind::KwInt | TokenKind::KwBoolean => self.var_decl(),
            TokenKind::KwIf => self.if_stmt(),
            TokenKind::KwWhile => self.while_stmt(),
            TokenKind::KwFor => self.for_stmt(),
            TokenKind::KwSwitch => self.switch_stmt(),
            TokenKind::KwReturn => {
                let id = self.fresh();
                self.advance();
                let value = if self.peek_kind() == TokenKind::Semi {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(TokenKind::Semi, "`;`")?;
                Ok(Stmt::Return { id, value })
            }
            TokenKind::KwBreak => {
                let id = self.fresh();
                self.advance();
                self.expect(TokenKind::Semi, "`;`")?;
                Ok(Stmt::Break { id })
            }
            TokenKind::KwContinue => {
                let id = self.fresh();
                self.advance();
                self.expect(TokenKind::Semi, "`;`")?;
                Ok(Stmt::Continue { id })
            }
            TokenKind::LBrace => Ok(Stmt::Block(self.block()?)),
            _ => {
                let id = self.fresh();
                let expr = self.statement_expr()?;
                self.expect(TokenKind::Semi, "`;`")?;
                Ok(Stmt::Expr { id, expr })
            }
        }
    }

    fn var_decl(&mut self) -> Result<Stmt, ParseError> {
        let id = self.fresh();
        let (name, ty, init) = self.var_decl_parts()?;
        self.expect(TokenKind::Semi, "`;`")?;
        Ok(Stmt::VarDecl { id, name, ty, init })
    }

    fn var_decl_parts(&mut self) -> Result<(String, Type, Option<Expr>), ParseError> {
        let ty = match self.peek_kind() {
            TokenKind::KwInt => Type::Int,
            TokenKind::KwBoolean => Type::Boolean,
            _ => return Err(self.error("`int` or `boolean`")),
        };
        self.advance();
        let name = self.ident("variable name")?;
        let init = if self.eat(TokenKind::Assign) {
            Some(self.expr()?)
        } else {
            None
        };
        Ok((name, ty, init))
    }

    fn if_stmt(&mut self) -> Result<Stmt, ParseError> {
        let id = self.fresh();
        self.advance();
        self.expect(TokenKind::LParen, "`(`")?;
        let cond = self.expr()?;
        self.expect(TokenKind::RParen, "`)`")?;
        let then_block = self.branch_block()?;
        let else_block = if self.eat(TokenKind::KwElse) {
            Some(self.branch_block()?)
        } else {
            None
        };
        Ok(Stmt::If {
            id,
            cond,
            then_block,
            else_block,
        })
    }

    fn while_stmt(&mut self) -> Result<Stmt, ParseError> {
        let id = self.fresh();
        self.advance();
        self.expect(TokenKind::LParen, "`(`")?;
        let cond = self.expr()?;
        self.expect(TokenKind::RParen, "`)`")?;
        let body = self.branch_block()?;
        Ok(Stmt::While { id, cond, body })
    }

    fn for_stmt(&mut self) -> Result<Stmt, ParseError> {
        let id = self.fresh();
        self.advance();
        self.expect(TokenKind::LParen, "`(`")?;
        let init = match self.peek_kind() {
            TokenKind::Semi => {
                self.advance();
                None
            }
            TokenKind::KwInt | TokenKind::KwBoolean => {
                let decl_id = self.fresh();
                let (name, ty, init) = self.var_decl_parts()?;
                self.expect(TokenKind::Semi, "`;`")?;
                Some(ForInit::Decl {
                    id: decl_id,
                    name,
                    ty,
                    init,
                })
            }
            _ => {
                let expr_id = self.fresh();
                let expr = self.statement_expr()?;
                self.expect(TokenKind::Semi, "`;`")?;
                Some(ForInit::Expr { id: expr_id, expr })
            }
        };
        let cond = if self.peek_kind() == TokenKind::Semi {
            None
        } else {
            Some(self.expr()?)
        };
        self.expect(TokenKind::Semi, "`;`")?;
        let update = if self.peek_kind() == TokenKind::RParen {
            None
        } else {
            Some(self.statement_expr()?)
        };
        self.expect(TokenKind::RParen, "`)`")?;
        let body = self.branch_block()?;
        Ok(Stmt::For {
            id,
            init,
            cond,
            update,
            body,
        })
    }

    fn switch_stmt(&mut self) -> Result<Stmt, ParseError> {
        let id = self.fresh();
        self.advance();
        self.expect(TokenKind::LParen, "`(`")?;
        let scrutinee = self.expr()?;
        self.expect(TokenKind::RParen, "`)`")?;
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut cases: Vec<SwitchCase> = Vec::new();
        let mut default = None;
        loop {
            match self.peek_kind() {
                TokenKind::KwCase => {
                    if default.is_some() {
                        return Err(self.error("`}` (default must be the last arm)"));
                    }
                    self.advance();
                    let label_tok = self.expect(TokenKind::IntLit, "an integer case label")?;
                    let label = parse_int_literal(&label_tok.text, label_tok.span, false)?;
                    if cases.iter().any(|c| c.label == label) {
                        return Err(ParseError {
                            span: self.peek().span,
                            expected: "distinct case labels".into(),
                            found: format!("duplicate case label `{label}`"),
                        });
                    }
                    self.expect(TokenKind::Colon, "`:`")?;
                    let body = self.case_body()?;
                    cases.push(SwitchCase { label, body });
                }
                TokenKind::KwDefault => {
                    if default.is_some() {
                        return Err(self.error("at most one default arm"));
                    }
                    self.advance();
                    self.expect(TokenKind::Colon, "`:`")?;
                    default = Some(self.case_body()?);
                }
                TokenKind::RBrace => {
                    self.advance();
                    break;
                }
                _ => return Err(self.error("`case`, `default`, or `}`")),
            }
        }
        Ok(Stmt::Switch {
            id,
            scrutinee,
            cases,
            default,
        })
    }

    fn case_body(&mut self) -> Result<Vec<Stmt>, ParseError> {
        let mut stmts = Vec::new();
        loop {
            match self.peek_kind() {
                TokenKind::KwCase | TokenKind::KwDefault | TokenKind::RBrace => break,
                TokenKind::Eof => return Err(self.error("`}`")),
                _ => stmts.push(self.stmt()?),
            }
        }
        Ok(stmts)
    }

    /// An expression allowed in statement position: assignment, increment/
    /// decrement, or a call (the Java statement-expression rule).
    fn statement_expr(&mut self) -> Result<Expr, ParseError> {
        let span = self.peek().span;
        let expr = self.expr()?;
        match expr {
            Expr::Assign { .. } | Expr::IncDec { .. } | Expr::Call { .. } => Ok(expr),
            _ => Err(ParseError {
                span,
                expected: "an assignment, increment/decrement, or call".into(),
                found: "a value expression".into(),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.assignment()
    }

    fn assignment(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.or_expr()?;
        let op = match self.peek_kind() {
            TokenKind::Assign => AssignOp::Assign,
            TokenKind::PlusEq => AssignOp::AddAssign,
            TokenKind::MinusEq => AssignOp::SubAssign,
            TokenKind::StarEq => AssignOp::MulAssign,
            TokenKind::SlashEq => AssignOp::DivAssign,
            TokenKind::PercentEq => AssignOp::RemAssign,
            _ => return Ok(lhs),
        };
        if !matches!(lhs, Expr::Var { .. }) {
            return Err(self.error("a variable on the left of an assignment"));
        }
        self.advance();
        let value = self.assignment()?;
        Ok(Expr::Assign {
            id: self.fresh(),
            target: Box::new(lhs),
            op,
            value: Box::new(value),
        })
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.peek_kind() == TokenKind::OrOr {
            self.advance();
            let rhs = self.and_expr()?;
            lhs = Expr::Binary {
                id: self.fresh(),
                op: BinaryOp::Or,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.equality()?;
        while self.peek_kind() == TokenKind::AndAnd {
            self.advance();
            let rhs = self.equality()?;
            lhs = Expr::Binary {
                id: self.fresh(),
                op: BinaryOp::And,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn equality(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.relational()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::EqEq => BinaryOp::Eq,
                TokenKind::NotEq => BinaryOp::Ne,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.relational()?;
            lhs = Expr::Binary {
                id: self.fresh(),
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn relational(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.additive()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::Lt => BinaryOp::Lt,
                TokenKind::Le => BinaryOp::Le,
                TokenKind::Gt => BinaryOp::Gt,
                TokenKind::Ge => BinaryOp::Ge,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.additive()?;
            lhs = Expr::Binary {
                id: self.fresh(),
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::Plus => BinaryOp::Add,
                TokenKind::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Expr::Binary {
                id: self.fresh(),
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::Star => BinaryOp::Mul,
                TokenKind::Slash => BinaryOp::Div,
                TokenKind::Percent => BinaryOp::Rem,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::Binary {
                id: self.fresh(),
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek_kind() {
            TokenKind::Minus => {
                let span = self.peek().span;
                self.advance();
                // `- INT_LITERAL` folds into a negative literal so the full
                // i32 range (including -2147483648) is expressible, matching
                // Java's treatment of int literals.
                if self.peek_kind() == TokenKind::IntLit {
                    let tok = self.advance();
                    let value = parse_int_literal(&tok.text, tok.span, true)?;
                    return Ok(Expr::IntLit {
                        id: self.fresh(),
                        value,
                    });
                }
                let operand = self.unary()?;
                // Negation of a literal (e.g. through parentheses) also folds.
                if let Expr::IntLit { value, .. } = operand {
                    return Ok(Expr::IntLit {
                        id: self.fresh(),
                        value: value.wrapping_neg(),
                    });
                }
                let _ = span;
                Ok(Expr::Unary {
                    id: self.fresh(),
                    op: UnaryOp::Neg,
                    operand: Box::new(operand),
                })
            }
            TokenKind::Bang => {
                self.advance();
                let operand = self.unary()?;
                Ok(Expr::Unary {
                    id: self.fresh(),
                    op: UnaryOp::Not,
                    operand: Box::new(operand),
                })
            }
            TokenKind::PlusPlus | TokenKind::MinusMinus => {
                let op = if self.peek_kind() == TokenKind::PlusPlus {
                    IncDecOp::Inc
                } else {
                    IncDecOp::Dec
                };
                self.advance();
                let target = self.unary()?;
                if !matches!(target, Expr::Var { .. }) {
                    return Err(self.error("a variable after `++`/`--`"));
                }
                Ok(Expr::IncDec {
                    id: self.fresh(),
                    target: Box::new(target),
                    op,
                    prefix: true,
                })
            }
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut expr = self.primary()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::PlusPlus => IncDecOp::Inc,
                TokenKind::MinusMinus => IncDecOp::Dec,
                _ => return Ok(expr),
            };
            if !matches!(expr, Expr::Var { .. }) {
                return Err(self.error("a variable before `++`/`--`"));
            }
            self.advance();
            expr = Expr::IncDec {
                id: self.fresh(),
                target: Box::new(expr),
                op,
                prefix: false,
            };
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek_kind() {
            TokenKind::IntLit => {
                let tok = self.advance();
                let value = parse_int_literal(&tok.text, tok.span, false)?;
                Ok(Expr::IntLit {
                    id: self.fresh(),
                    value,
                })
            }
            TokenKind::True => {
                self.advance();
                Ok(Expr::BoolLit {
                    id: self.fresh(),
                    value: true,
                })
            }
            TokenKind::False => {
                self.advance();
                Ok(Expr::BoolLit {
                    id: self.fresh(),
                    value: false,
                })
            }
            TokenKind::Ident => {
                let name = self.advance().text.clone();
                if self.peek_kind() == TokenKind::LParen {
                    self.advance();
                    let mut args = Vec::new();
                    if self.peek_kind() != TokenKind::RParen {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(TokenKind::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect(TokenKind::RParen, "`)`")?;
                    Ok(Expr::Call {
                        id: self.fresh(),
                        callee: name,
                        args,
                    })
                } else {
                    Ok(Expr::Var {
                        id: self.fresh(),
                        name,
                    })
                }
            }
            TokenKind::LParen => {
                self.advance();
                let expr = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(expr)
            }
            _ => Err(self.error("an expression")),
        }
    }
}

/// Parses a decimal literal, enforcing the 32-bit int range. With `negated`,
/// the value is `-text`, which admits `-2147483648`.
fn parse_int_literal(text: &str, span: Span, negated: bool) -> Result<i32, ParseError> {
    let raw: i64 = text.parse().map_err(|_| ParseError {
        span,
        expected: "an integer literal within the 32-bit range".into(),
        found: format!("`{text}`"),
    })?;
    let value = if negated { -raw } else { raw };
    i32::try_from(value).map_err(|_| ParseError {
        span,
        expected: "an integer literal within the 32-bit range".into(),
        found: format!("`{}{}`", if negated { "-" } else { "" }, text),
    })
}

/// Convenience: tokenize and parse in one step.
pub fn parse_source(source: &str) -> Result<CompilationUnit, super::SyntaxError> {
    let tokens = super::lexer::tokenize(source)?;
    Ok(parse(&tokens)?)
}
