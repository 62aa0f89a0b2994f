//! Typed AST for the MJ language: compilation units, methods, statements,
//! expressions.
//!
//! Every statement and expression node carries a [`NodeId`] that is unique
//! within its compilation unit. Structural comparison ([`ast_equal`]) ignores
//! ids, so rebuilt or transformed trees compare by shape and content only.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Stable identity of an AST node within one compilation unit.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// MJ types. `Void` is only valid as a method return type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Boolean,
    Void,
}

impl Type {
    pub fn keyword(self) -> &'static str {
        match self {
            Type::Int => "int",
            Type::Boolean => "boolean",
            Type::Void => "void",
        }
    }
}

/// One source file: an ordered list of methods with pairwise-distinct names.
#[derive(Debug, Clone)]
pub struct CompilationUnit {
    pub methods: Vec<MethodDecl>,
}

#[derive(Debug, Clone)]
pub struct MethodDecl {
    pub id: NodeId,
    pub name: String,
    pub return_type: Type,
    pub params: Vec<Param>,
    pub body: Block,
}

#[derive(Debug, Clone)]
pub struct Param {
    pub id: NodeId,
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub id: NodeId,
    pub stmts: Vec<Stmt>,
}

/// Initializer slot of a `for` header: a declaration or a bare expression.
#[derive(Debug, Clone)]
pub enum ForInit {
    Decl {
        id: NodeId,
        name: String,
        ty: Type,
        init: Option<Expr>,
    },
    Expr {
        id: NodeId,
        expr: Expr,
    },
}

#[derive(Debug, Clone)]
pub struct SwitchCase {
    pub label: i32,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone)]
pub enum Stmt {
    VarDecl {
        id: NodeId,
        name: String,
        ty: Type,
        init: Option<Expr>,
    },
    Expr {
        id: NodeId,
        expr: Expr,
    },
    If {
        id: NodeId,
        cond: Expr,
        then_block: Block,
        else_block: Option<Block>,
    },
    While {
        id: NodeId,
        cond: Expr,
        body: Block,
    },
    For {
        id: NodeId,
        init: Option<ForInit>,
        cond: Option<Expr>,
        update: Option<Expr>,
        body: Block,
    },
    Switch {
        id: NodeId,
        scrutinee: Expr,
        cases: Vec<SwitchCase>,
        default: Option<Vec<Stmt>>,
    },
    Return {
        id: NodeId,
        value: Option<Expr>,
    },
    Break {
        id: NodeId,
    },
    Continue {
        id: NodeId,
    },
    Block(Block),
}

impl Stmt {
    pub fn id(&self) -> NodeId {
        match self {
            Stmt::VarDecl { id, .. }
            | Stmt::Expr { id, .. }
            | Stmt::If { id, .. }
            | Stmt::While { id, .. }
            | Stmt::For { id, .. }
            | Stmt::Switch { id, .. }
            | Stmt::Return { id, .. }
            | Stmt::Break { id }
            | Stmt::Continue { id } => *id,
            Stmt::Block(b) => b.id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Not => "!",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssignOp {
    Assign,
    AddAssign,
    SubAssign,
    MulAssign,
    DivAssign,
    RemAssign,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::AddAssign => "+=",
            AssignOp::SubAssign => "-=",
            AssignOp::MulAssign => "*=",
            AssignOp::DivAssign => "/=",
            AssignOp::RemAssign => "%=",
        }
    }

    /// The arithmetic operator applied by a compound assignment, if any.
    pub fn binary_op(self) -> Option<BinaryOp> {
        match self {
            AssignOp::Assign => None,
            AssignOp::AddAssign => Some(BinaryOp::Add),
            AssignOp::SubAssign => Some(BinaryOp::Sub),
            AssignOp::MulAssign => Some(BinaryOp::Mul),
            AssignOp::DivAssign => Some(BinaryOp::Div),
            AssignOp::RemAssign => Some(BinaryOp::Rem),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IncDecOp {
    Inc,
    Dec,
}

impl IncDecOp {
    pub fn symbol(self) -> &'static str {
        match self {
            IncDecOp::Inc => "++",
            IncDecOp::Dec => "--",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Expr {
    IntLit {
        id: NodeId,
        value: i32,
    },
    BoolLit {
        id: NodeId,
        value: bool,
    },
    Var {
        id: NodeId,
        name: String,
    },
    Unary {
        id: NodeId,
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        id: NodeId,
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    /// `target` is always a `Var` node; the parser enforces it.
    Assign {
        id: NodeId,
        target: Box<Expr>,
        op: AssignOp,
        value: Box<Expr>,
    },
    /// `target` is always a `Var` node; the parser enforces it.
    IncDec {
        id: NodeId,
        target: Box<Expr>,
        op: IncDecOp,
        prefix: bool,
    },
    Call {
        id: NodeId,
        callee: String,
        args: Vec<Expr>,
    },
}

impl Expr {
    pub fn id(&self) -> NodeId {
        match self {
            Expr::IntLit { id, .. }
            | Expr::BoolLit { id, .. }
            | Expr::Var { id, .. }
            | Expr::Unary { id, .. }
            | Expr::Binary { id, .. }
            | Expr::Assign { id, .. }
            | Expr::IncDec { id, .. }
            | Expr::Call { id, .. } => *id,
        }
    }
}

impl CompilationUnit {
    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name)
    }

    /// Largest NodeId in the unit; fresh ids for rewrites start past it.
    pub fn max_node_id(&self) -> u32 {
        let mut max = 0;
        for m in &self.methods {
            visit_unit_ids(m, &mut |id| max = max.max(id.0));
        }
        max
    }
}

fn visit_unit_ids(method: &MethodDecl, f: &mut impl FnMut(NodeId)) {
    f(method.id);
    for p in &method.params {
        f(p.id);
    }
    visit_block_ids(&method.body, f);
}

fn visit_block_ids(block: &Block, f: &mut impl FnMut(NodeId)) {
    f(block.id);
    for s in &block.stmts {
        visit_stmt_ids(s, f);
    }
}

fn visit_stmt_ids(stmt: &Stmt, f: &mut impl FnMut(NodeId)) {
    f(stmt.id());
    match stmt {
        Stmt::VarDecl { init, .. } => {
            if let Some(e) = init {
                visit_expr_ids(e, f);
            }
        }
        Stmt::Expr { expr, .. } => visit_expr_ids(expr, f),
        Stmt::If {
            cond,
            then_block,
            else_block,
            ..
        } => {
            visit_expr_ids(cond, f);
            visit_block_ids(then_block, f);
            if let Some(b) = else_block {
                visit_block_ids(b, f);
            }
        }
        Stmt::While { cond, body, .. } => {
            visit_expr_ids(cond, f);
            visit_block_ids(body, f);
        }
        Stmt::For {
            init,
            cond,
            update,
            body,
            ..
        } => {
            match init {
                Some(ForInit::Decl { id, init, .. }) => {
                    f(*id);
                    if let Some(e) = init {
                        visit_expr_ids(e, f);
                    }
                }
                Some(ForInit::Expr { id, expr }) => {
                    f(*id);
                    visit_expr_ids(expr, f);
                }
                None => {}
            }
            if let Some(e) = cond {
                visit_expr_ids(e, f);
            }
            if let Some(e) = update {
                visit_expr_ids(e, f);
            }
            visit_block_ids(body, f);
        }
        Stmt::Switch {
            scrutinee,
            cases,
            default,
            ..
        } => {
            visit_expr_ids(scrutinee, f);
            for c in cases {
                for s in &c.body {
                    visit_stmt_ids(s, f);
                }
            }
            if let Some(d) = default {
                for s in d {
                    visit_stmt_ids(s, f);
                }
            }
        }
        Stmt::Return { value, .. } => {
            if let Some(e) = value {
                visit_expr_ids(e, f);
            }
        }
        Stmt::Break { .. } | Stmt::Continue { .. } => {}
        Stmt::Block(b) => {
            // Block id already visited via stmt.id(); recurse into children.
            for s in &b.stmts {
                visit_stmt_ids(s, f);
            }
        }
    }
}

fn visit_expr_ids(expr: &Expr, f: &mut impl FnMut(NodeId)) {
    f(expr.id());
    match expr {
        Expr::IntLit { .. } | Expr::BoolLit { .. } | Expr::Var { .. } => {}
        Expr::Unary { operand, .. } => visit_expr_ids(operand, f),
        Expr::Binary { lhs, rhs, .. } => {
            visit_expr_ids(lhs, f);
            visit_expr_ids(rhs, f);
        }
        Expr::Assign { target, value, .. } => {
            visit_expr_ids(target, f);
            visit_expr_ids(value, f);
        }
        Expr::IncDec { target, .. } => visit_expr_ids(target, f),
        Expr::Call { args, .. } => {
            for a in args {
                visit_expr_ids(a, f);
            }
        }
    }
}

/// Structural equality of two units, ignoring NodeIds.
pub fn ast_equal(a: &CompilationUnit, b: &CompilationUnit) -> bool {
    a.methods.len() == b.methods.len()
        && a.methods
            .iter()
            .zip(&b.methods)
            .all(|(x, y)| method_equal(x, y))
}

fn method_equal(a: &MethodDecl, b: &MethodDecl) -> bool {
    a.name == b.name
        && a.return_type == b.return_type
        && a.params.len() == b.params.len()
        && a.params
            .iter()
            .zip(&b.params)
            .all(|(p, q)| p.name == q.name && p.ty == q.ty)
        && block_equal(&a.body, &b.body)
}

fn block_equal(a: &Block, b: &Block) -> bool {
    a.stmts.len() == b.stmts.len() && a.stmts.iter().zip(&b.stmts).all(|(x, y)| stmt_equal(x, y))
}

/// Structural equality of two statements, ignoring NodeIds.
pub fn stmt_equal(a: &Stmt, b: &Stmt) -> bool {
    match (a, b) {
        (
            Stmt::VarDecl {
                name: n1,
                ty: t1,
                init: i1,
                ..
            },
            Stmt::VarDecl {
                name: n2,
                ty: t2,
                init: i2,
                ..
            },
        ) => n1 == n2 && t1 == t2 && opt_expr_equal(i1, i2),
        (Stmt::Expr { expr: e1, .. }, Stmt::Expr { expr: e2, .. }) => expr_equal(e1, e2),
        (
            Stmt::If {
                cond: c1,
                then_block: t1,
                else_block: e1,
                ..
            },
            Stmt::If {
                cond: c2,
                then_block: t2,
                else_block: e2,
                ..
            },
        ) => {
            expr_equal(c1, c2)
                && block_equal(t1, t2)
                && match (e1, e2) {
                    (None, None) => true,
                    (Some(x), Some(y)) => block_equal(x, y),
                    _ => false,
                }
        }
        (
            Stmt::While {
                cond: c1, body: b1, ..
            },
            Stmt::While {
                cond: c2, body: b2, ..
            },
        ) => expr_equal(c1, c2) && block_equal(b1, b2),
        (
            Stmt::For {
                init: i1,
                cond: c1,
                update: u1,
                body: b1,
                ..
            },
            Stmt::For {
                init: i2,
                cond: c2,
                update: u2,
                body: b2,
                ..
            },
        ) => {
            let init_eq = match (i1, i2) {
                (None, None) => true,
                (
                    Some(ForInit::Decl {
                        name: n1,
                        ty: t1,
                        init: e1,
                        ..
                    }),
                    Some(ForInit::Decl {
                        name: n2,
                        ty: t2,
                        init: e2,
                        ..
                    }),
                ) => n1 == n2 && t1 == t2 && opt_expr_equal(e1, e2),
                (Some(ForInit::Expr { expr: e1, .. }), Some(ForInit::Expr { expr: e2, .. })) => {
                    expr_equal(e1, e2)
                }
                _ => false,
            };
            init_eq && opt_expr_equal(c1, c2) && opt_expr_equal(u1, u2) && block_equal(b1, b2)
        }
        (
            Stmt::Switch {
                scrutinee: s1,
                cases: c1,
                default: d1,
                ..
            },
            Stmt::Switch {
                scrutinee: s2,
                cases: c2,
                default: d2,
                ..
            },
        ) => {
            expr_equal(s1, s2)
                && c1.len() == c2.len()
                && c1
                    .iter()
                    .zip(c2)
                    .all(|(x, y)| x.label == y.label && stmts_equal(&x.body, &y.body))
                && match (d1, d2) {
                    (None, None) => true,
                    (Some(x), Some(y)) => stmts_equal(x, y),
                    _ => false,
                }
        }
        (Stmt::Return { value: v1, .. }, Stmt::Return { value: v2, .. }) => opt_expr_equal(v1, v2),
        (Stmt::Break { .. }, Stmt::Break { .. }) => true,
        (Stmt::Continue { .. }, Stmt::Continue { .. }) => true,
        (Stmt::Block(b1), Stmt::Block(b2)) => block_equal(b1, b2),
        _ => false,
    }
}

fn stmts_equal(a: &[Stmt], b: &[Stmt]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| stmt_equal(x, y))
}

fn opt_expr_equal(a: &Option<Expr>, b: &Option<Expr>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => expr_equal(x, y),
        _ => false,
    }
}

/// Structural equality of two expressions, ignoring NodeIds.
pub fn expr_equal(a: &Expr, b: &Expr) -> bool {
    match (a, b) {
        (Expr::IntLit { value: v1, .. }, Expr::IntLit { value: v2, .. }) => v1 == v2,
        (Expr::BoolLit { value: v1, .. }, Expr::BoolLit { value: v2, .. }) => v1 == v2,
        (Expr::Var { name: n1, .. }, Expr::Var { name: n2, .. }) => n1 == n2,
        (
            Expr::Unary {
                op: o1, operand: e1, ..
            },
            Expr::Unary {
                op: o2, operand: e2, ..
            },
        ) => o1 == o2 && expr_equal(e1, e2),
        (
            Expr::Binary {
                op: o1,
                lhs: l1,
                rhs: r1,
                ..
            },
            Expr::Binary {
                op: o2,
                lhs: l2,
                rhs: r2,
                ..
            },
        ) => o1 == o2 && expr_equal(l1, l2) && expr_equal(r1, r2),
        (
            Expr::Assign {
                target: t1,
                op: o1,
                value: v1,
                ..
            },
            Expr::Assign {
                target: t2,
                op: o2,
                value: v2,
                ..
            },
        ) => o1 == o2 && expr_equal(t1, t2) && expr_equal(v1, v2),
        (
            Expr::IncDec {
                target: t1,
                op: o1,
                prefix: p1,
                ..
            },
            Expr::IncDec {
                target: t2,
                op: o2,
                prefix: p2,
                ..
            },
        ) => o1 == o2 && p1 == p2 && expr_equal(t1, t2),
        (
            Expr::Call {
                callee: c1, args: a1, ..
            },
            Expr::Call {
                callee: c2, args: a2, ..
            },
        ) => c1 == c2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| expr_equal(x, y)),
        _ => false,
    }
}

/// Checks that NodeIds are unique across the whole unit.
pub fn node_ids_unique(unit: &CompilationUnit) -> bool {
    let mut seen = std::collections::HashSet::new();
    let mut ok = true;
    for m in &unit.methods {
        visit_unit_ids(m, &mut |id| {
            if !seen.insert(id) {
                ok = false;
            }
        });
    }
    ok
}
