//! The five semantic-preserving transformations: variable renaming, loop
//! exchange, boolean swapping, switch conversion, and statement permutation.
//!
//! Each operation takes an original unit, an addressable site, and a seed,
//! and produces a new unit; originals are never mutated. Site enumeration is
//! complete and deterministic, ordered by (method index, node id). Every
//! applied transformation changes the printed text while preserving behavior,
//! which the interpreter verifies differentially.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::scope::{self, ResolveError, SymbolId, SymbolTable};
use crate::syntax::ast::*;
use crate::syntax::print;

/// The transformation catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TransformKind {
    RenameVariable,
    ExchangeLoop,
    SwapBoolean,
    ConvertSwitch,
    PermuteStatements,
}

impl TransformKind {
    pub const ALL: [TransformKind; 5] = [
        TransformKind::RenameVariable,
        TransformKind::ExchangeLoop,
        TransformKind::SwapBoolean,
        TransformKind::ConvertSwitch,
        TransformKind::PermuteStatements,
    ];
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TransformKind::RenameVariable => "rename-variable",
            TransformKind::ExchangeLoop => "exchange-loop",
            TransformKind::SwapBoolean => "swap-boolean",
            TransformKind::ConvertSwitch => "convert-switch",
            TransformKind::PermuteStatements => "permute-statements",
        };
        f.write_str(name)
    }
}

impl FromStr for TransformKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "rename-variable" | "rename" => TransformKind::RenameVariable,
            "exchange-loop" | "loop" => TransformKind::ExchangeLoop,
            "swap-boolean" | "boolean" => TransformKind::SwapBoolean,
            "convert-switch" | "switch" => TransformKind::ConvertSwitch,
            "permute-statements" | "permute" => TransformKind::PermuteStatements,
            other => {
                return Err(format!(
                    "unknown transformation `{other}` (expected rename-variable, exchange-loop, \
                     swap-boolean, convert-switch, or permute-statements)"
                ))
            }
        })
    }
}

/// Which way a loop exchange rewrites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoopDirection {
    ForToWhile,
    WhileToFor,
}

/// Kind-specific addressing information for a site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiteDetail {
    /// Rename this symbol; target is its declaring node.
    Rename { symbol: SymbolId },
    /// Exchange this loop; target is the loop statement.
    Loop { direction: LoopDirection },
    /// Rewrite `true`/`false`; target is the literal node.
    BoolLiteral,
    /// Negate the condition and exchange branches; target is the `if`.
    IfElse,
    /// Lower to an if-else chain; target is the `switch`.
    Switch,
    /// Exchange statements `index` and `index + 1`; target is the block.
    Permute { index: usize },
}

/// An addressable location where one transformation kind applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformSite {
    pub kind: TransformKind,
    /// Index of the enclosing method within the unit.
    pub method_index: usize,
    pub target: NodeId,
    pub detail: SiteDetail,
}

/// Provenance of one applied transformation, in the shape reports serialize.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TransformRecord {
    pub kind: TransformKind,
    /// Name of the method the site lives in.
    pub method: String,
    /// Slash-free dotted path from the method to the target node.
    pub node_path: String,
    pub seed: u64,
    pub before_sha256: String,
    pub after_sha256: String,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TransformError {
    /// Reserved: unreachable while the fresh-name pool is unbounded.
    #[error("no fresh name available")]
    NoFreshName,
    #[error("loop body contains a `continue` bound to this loop")]
    ContinueInBody,
    #[error("switch arm falls through (or contains a non-trailing break bound to this switch)")]
    FallThrough,
    #[error("statements at this site cannot be exchanged safely")]
    UnsafeSwap,
    #[error("site does not address a matching node in this unit")]
    SiteNotFound,
    #[error("unit does not resolve: {0}")]
    Resolve(#[from] ResolveError),
}

/// Fresh NodeId source for rewrite-created nodes.
struct IdGen {
    next: u32,
}

impl IdGen {
    fn after(unit: &CompilationUnit) -> IdGen {
        IdGen {
            next: unit.max_node_id() + 1,
        }
    }

    fn fresh(&mut self) -> NodeId {
        let id = NodeId(self.next);
        self.next += 1;
        id
    }
}

// ---------------------------------------------------------------------------
// Site enumeration
// ---------------------------------------------------------------------------

/// Lists every site where `kind` applies, ordered by (method index, node id)
/// and, for permutation, by statement index.
pub fn enumerate_sites(
    unit: &CompilationUnit,
    table: &SymbolTable,
    kind: TransformKind,
) -> Vec<TransformSite> {
    let mut sites = Vec::new();
    for (method_index, method) in unit.methods.iter().enumerate() {
        match kind {
            TransformKind::RenameVariable => {
                for p in &method.params {
                    if let Some(symbol) = table.symbol_of(p.id) {
                        sites.push(TransformSite {
                            kind,
                            method_index,
                            target: p.id,
                            detail: SiteDetail::Rename { symbol },
                        });
                    }
                }
                walk_stmts(&method.body.stmts, &mut |stmt| {
                    let decl_id = match stmt {
                        Stmt::VarDecl { id, .. } => Some(*id),
                        Stmt::For {
                            init: Some(ForInit::Decl { id, .. }),
                            ..
                        } => Some(*id),
                        _ => None,
                    };
                    if let Some(id) = decl_id {
                        if let Some(symbol) = table.symbol_of(id) {
                            sites.push(TransformSite {
                                kind,
                                method_index,
                                target: id,
                                detail: SiteDetail::Rename { symbol },
                            });
                        }
                    }
                });
            }
            TransformKind::ExchangeLoop => {
                walk_stmts(&method.body.stmts, &mut |stmt| match stmt {
                    Stmt::While { id, .. } => sites.push(TransformSite {
                        kind,
                        method_index,
                        target: *id,
                        detail: SiteDetail::Loop {
                            direction: LoopDirection::WhileToFor,
                        },
                    }),
                    Stmt::For { id, body, .. } => {
                        if !has_loop_bound_continue(&body.stmts) {
                            sites.push(TransformSite {
                                kind,
                                method_index,
                                target: *id,
                                detail: SiteDetail::Loop {
                                    direction: LoopDirection::ForToWhile,
                                },
                            });
                        }
                    }
                    _ => {}
                });
            }
            TransformKind::SwapBoolean => {
                walk_stmts(&method.body.stmts, &mut |stmt| {
                    if let Stmt::If {
                        id,
                        else_block: Some(_),
                        ..
                    } = stmt
                    {
                        sites.push(TransformSite {
                            kind,
                            method_index,
                            target: *id,
                            detail: SiteDetail::IfElse,
                        });
                    }
                    walk_stmt_exprs(stmt, &mut |expr| {
                        if let Expr::BoolLit { id, .. } = expr {
                            sites.push(TransformSite {
                                kind,
                                method_index,
                                target: *id,
                                detail: SiteDetail::BoolLiteral,
                            });
                        }
                    });
                });
            }
            TransformKind::ConvertSwitch => {
                walk_stmts(&method.body.stmts, &mut |stmt| {
                    if let Stmt::Switch { id, cases, default, .. } = stmt {
                        if switch_is_convertible(cases, default) {
                            sites.push(TransformSite {
                                kind,
                                method_index,
                                target: *id,
                                detail: SiteDetail::Switch,
                            });
                        }
                    }
                });
            }
            TransformKind::PermuteStatements => {
                let mut blocks: Vec<&Block> = vec![&method.body];
                walk_stmts(&method.body.stmts, &mut |stmt| {
                    collect_blocks(stmt, &mut blocks);
                });
                for block in blocks {
                    for i in 0..block.stmts.len().saturating_sub(1) {
                        let a = &block.stmts[i];
                        let b = &block.stmts[i + 1];
                        // Exchanging structurally identical statements would
                        // leave the text unchanged, so it is not a site.
                        if scope::can_swap(a, b, table) && !stmt_equal(a, b) {
                            sites.push(TransformSite {
                                kind,
                                method_index,
                                target: block.id,
                                detail: SiteDetail::Permute { index: i },
                            });
                        }
                    }
                }
            }
        }
    }
    sites.sort_by_key(|s| {
        let index = match s.detail {
            SiteDetail::Permute { index } => index,
            _ => 0,
        };
        (s.method_index, s.target, index)
    });
    sites
}

/// Pre-order walk over statements, visiting nested bodies and switch arms.
fn walk_stmts<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for s in stmts {
        f(s);
        match s {
            Stmt::If {
                then_block,
                else_block,
                ..
            } => {
                walk_stmts(&then_block.stmts, f);
                if let Some(b) = else_block {
                    walk_stmts(&b.stmts, f);
                }
            }
            Stmt::While { body, .. } => walk_stmts(&body.stmts, f),
            Stmt::For { body, .. } => walk_stmts(&body.stmts, f),
            Stmt::Switch { cases, default, .. } => {
                for c in cases {
                    walk_stmts(&c.body, f);
                }
                if let Some(d) = default {
                    walk_stmts(d, f);
                }
            }
            Stmt::Block(b) => walk_stmts(&b.stmts, f),
            _ => {}
        }
    }
}

/// Visits every expression in one statement (not descending into nested
/// statements).
fn walk_stmt_exprs<'a>(stmt: &'a Stmt, f: &mut impl FnMut(&'a Expr)) {
    match stmt {
        Stmt::VarDecl { init, .. } => {
            if let Some(e) = init {
                walk_exprs(e, f);
            }
        }
        Stmt::Expr { expr, .. } => walk_exprs(expr, f),
        Stmt::If { cond, .. } => walk_exprs(cond, f),
        Stmt::While { cond, .. } => walk_exprs(cond, f),
        Stmt::For {
            init, cond, update, ..
        } => {
            match init {
                Some(ForInit::Decl { init: Some(e), .. }) => walk_exprs(e, f),
                Some(ForInit::Expr { expr, .. }) => walk_exprs(expr, f),
                _ => {}
            }
            if let Some(e) = cond {
                walk_exprs(e, f);
            }
            if let Some(e) = update {
                walk_exprs(e, f);
            }
        }
        Stmt::Switch { scrutinee, .. } => walk_exprs(scrutinee, f),
        Stmt::Return { value, .. } => {
            if let Some(e) = value {
                walk_exprs(e, f);
            }
        }
        Stmt::Break { .. } | Stmt::Continue { .. } | Stmt::Block(_) => {}
    }
}

fn walk_exprs<'a>(expr: &'a Expr, f: &mut impl FnMut(&'a Expr)) {
    f(expr);
    match expr {
        Expr::IntLit { .. } | Expr::BoolLit { .. } | Expr::Var { .. } => {}
        Expr::Unary { operand, .. } => walk_exprs(operand, f),
        Expr::Binary { lhs, rhs, .. } => {
            walk_exprs(lhs, f);
            walk_exprs(rhs, f);
        }
        Expr::Assign { target, value, .. } => {
            walk_exprs(target, f);
            walk_exprs(value, f);
        }
        Expr::IncDec { target, .. } => walk_exprs(target, f),
        Expr::Call { args, .. } => {
            for a in args {
                walk_exprs(a, f);
            }
        }
    }
}

fn collect_blocks<'a>(stmt: &'a Stmt, out: &mut Vec<&'a Block>) {
    match stmt {
        Stmt::Block(b) => out.push(b),
        Stmt::If {
            then_block,
            else_block,
            ..
        } => {
            out.push(then_block);
            if let Some(b) = else_block {
                out.push(b);
            }
        }
        Stmt::While { body, .. } | Stmt::For { body, .. } => out.push(body),
        _ => {}
    }
}

/// True when `stmts` contains a `continue` that would bind to the loop the
/// statements belong to (nested loops capture their own continues; switch
/// arms do not).
fn has_loop_bound_continue(stmts: &[Stmt]) -> bool {
    stmts.iter().any(|s| match s {
        Stmt::Continue { .. } => true,
        Stmt::If {
            then_block,
            else_block,
            ..
        } => {
            has_loop_bound_continue(&then_block.stmts)
                || else_block
                    .as_ref()
                    .is_some_and(|b| has_loop_bound_continue(&b.stmts))
        }
        Stmt::Block(b) => has_loop_bound_continue(&b.stmts),
        Stmt::Switch { cases, default, .. } => {
            cases.iter().any(|c| has_loop_bound_continue(&c.body))
                || default
                    .as_ref()
                    .is_some_and(|d| has_loop_bound_continue(d))
        }
        // While and For bind their own continues.
        _ => false,
    })
}

/// True when `stmts` contains a `break` that would bind to the switch the
/// statements belong to.
fn has_switch_bound_break(stmts: &[Stmt]) -> bool {
    stmts.iter().any(|s| match s {
        Stmt::Break { .. } => true,
        Stmt::If {
            then_block,
            else_block,
            ..
        } => {
            has_switch_bound_break(&then_block.stmts)
                || else_block
                    .as_ref()
                    .is_some_and(|b| has_switch_bound_break(&b.stmts))
        }
        Stmt::Block(b) => has_switch_bound_break(&b.stmts),
        // Loops and nested switches bind their own breaks.
        _ => false,
    })
}

/// A switch converts cleanly when every case arm ends in `break` or
/// `return` (no fall-through) and removing that trailing `break` leaves no
/// other break bound to this switch; the same break condition applies to the
/// default arm.
fn switch_is_convertible(cases: &[SwitchCase], default: &Option<Vec<Stmt>>) -> bool {
    for case in cases {
        match case.body.last() {
            Some(Stmt::Break { .. }) | Some(Stmt::Return { .. }) => {}
            _ => return false,
        }
        let interior = &case.body[..case.body.len() - 1];
        if has_switch_bound_break(interior) {
            return false;
        }
    }
    if let Some(d) = default {
        let interior = match d.last() {
            Some(Stmt::Break { .. }) => &d[..d.len() - 1],
            _ => &d[..],
        };
        if has_switch_bound_break(interior) {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// The five operations
// ---------------------------------------------------------------------------

/// Renames every occurrence of the site's symbol (declaration and uses) to a
/// fresh seed-derived name. No other node changes.
pub fn rename_variable(
    unit: &CompilationUnit,
    site: &TransformSite,
    seed: u64,
) -> Result<CompilationUnit, TransformError> {
    let SiteDetail::Rename { symbol } = site.detail else {
        return Err(TransformError::SiteNotFound);
    };
    let mut out = unit.clone();
    // Cloning preserves NodeIds, so resolving the clone reproduces the same
    // symbol ids the site was enumerated against.
    let table = scope::resolve(&out)?;
    if table.symbol_of(site.target) != Some(symbol) {
        return Err(TransformError::SiteNotFound);
    }
    let new_name = scope::fresh_name(&table, seed, 0);
    for method in &mut out.methods {
        for p in &mut method.params {
            if table.symbol_of(p.id) == Some(symbol) {
                p.name = new_name.clone();
            }
        }
        rename_in_stmts(&mut method.body.stmts, symbol, &table, &new_name);
    }
    Ok(out)
}

fn rename_in_stmts(stmts: &mut [Stmt], symbol: SymbolId, table: &SymbolTable, new_name: &str) {
    for s in stmts {
        match s {
            Stmt::VarDecl { id, name, init, .. } => {
                if table.symbol_of(*id) == Some(symbol) {
                    *name = new_name.to_string();
                }
                if let Some(e) = init {
                    rename_in_expr(e, symbol, table, new_name);
                }
            }
            Stmt::Expr { expr, .. } => rename_in_expr(expr, symbol, table, new_name),
            Stmt::If {
                cond,
                then_block,
                else_block,
                ..
            } => {
                rename_in_expr(cond, symbol, table, new_name);
                rename_in_stmts(&mut then_block.stmts, symbol, table, new_name);
                if let Some(b) = else_block {
                    rename_in_stmts(&mut b.stmts, symbol, table, new_name);
                }
            }
            Stmt::While { cond, body, .. } => {
                rename_in_expr(cond, symbol, table, new_name);
                rename_in_stmts(&mut body.stmts, symbol, table, new_name);
            }
            Stmt::For {
                init,
                cond,
                update,
                body,
                ..
            } => {
                match init {
                    Some(ForInit::Decl { id, name, init, .. }) => {
                        if table.symbol_of(*id) == Some(symbol) {
                            *name = new_name.to_string();
                        }
                        if let Some(e) = init {
                            rename_in_expr(e, symbol, table, new_name);
                        }
                    }
                    Some(ForInit::Expr { expr, .. }) => {
                        rename_in_expr(expr, symbol, table, new_name)
                    }
                    None => {}
                }
                if let Some(e) = cond {
                    rename_in_expr(e, symbol, table, new_name);
                }
                if let Some(e) = update {
                    rename_in_expr(e, symbol, table, new_name);
                }
                rename_in_stmts(&mut body.stmts, symbol, table, new_name);
            }
            Stmt::Switch {
                scrutinee,
                cases,
                default,
                ..
            } => {
                rename_in_expr(scrutinee, symbol, table, new_name);
                for c in cases {
                    rename_in_stmts(&mut c.body, symbol, table, new_name);
                }
                if let Some(d) = default {
                    rename_in_stmts(d, symbol, table, new_name);
                }
            }
            Stmt::Return { value, .. } => {
                if let Some(e) = value {
                    rename_in_expr(e, symbol, table, new_name);
                }
            }
            Stmt::Break { .. } | Stmt::Continue { .. } => {}
            Stmt::Block(b) => rename_in_stmts(&mut b.stmts, symbol, table, new_name),
        }
    }
}

fn rename_in_expr(expr: &mut Expr, symbol: SymbolId, table: &SymbolTable, new_name: &str) {
    match expr {
        Expr::Var { id, name } => {
            if table.symbol_of(*id) == Some(symbol) {
                *name = new_name.to_string();
            }
        }
        Expr::IntLit { .. } | Expr::BoolLit { .. } => {}
        Expr::Unary { operand, .. } => rename_in_expr(operand, symbol, table, new_name),
        Expr::Binary { lhs, rhs, .. } => {
            rename_in_expr(lhs, symbol, table, new_name);
            rename_in_expr(rhs, symbol, table, new_name);
        }
        Expr::Assign { target, value, .. } => {
            rename_in_expr(target, symbol, table, new_name);
            rename_in_expr(value, symbol, table, new_name);
        }
        Expr::IncDec { target, .. } => rename_in_expr(target, symbol, table, new_name),
        Expr::Call { args, .. } => {
            for a in args {
                rename_in_expr(a, symbol, table, new_name);
            }
        }
    }
}

/// Rewrites `for` to `while` (wrapped in a block that keeps the initializer
/// scoped) or `while` to `for`.
pub fn exchange_loop(
    unit: &CompilationUnit,
    site: &TransformSite,
    _seed: u64,
) -> Result<CompilationUnit, TransformError> {
    if !matches!(site.detail, SiteDetail::Loop { .. }) {
        return Err(TransformError::SiteNotFound);
    }
    let mut out = unit.clone();
    let mut ids = IdGen::after(&out);
    let mut replaced = false;
    let mut error = None;
    for method in &mut out.methods {
        replace_stmt(&mut method.body.stmts, site.target, &mut |stmt| {
            match exchange_one_loop(stmt, &mut ids) {
                Ok(new_stmt) => {
                    replaced = true;
                    Some(new_stmt)
                }
                Err(e) => {
                    error = Some(e);
                    None
                }
            }
        });
    }
    if let Some(e) = error {
        return Err(e);
    }
    if !replaced {
        return Err(TransformError::SiteNotFound);
    }
    Ok(out)
}

fn exchange_one_loop(stmt: Stmt, ids: &mut IdGen) -> Result<Stmt, TransformError> {
    match stmt {
        Stmt::While { id, cond, body } => Ok(Stmt::For {
            id,
            init: None,
            cond: Some(cond),
            update: None,
            body,
        }),
        Stmt::For {
            init,
            cond,
            update,
            mut body,
            ..
        } => {
            if has_loop_bound_continue(&body.stmts) {
                return Err(TransformError::ContinueInBody);
            }
            let cond = cond.unwrap_or(Expr::BoolLit {
                id: ids.fresh(),
                value: true,
            });
            if let Some(update) = update {
                // The update moves inside the loop body. If the body block
                // declares a name the update mentions, splicing would make
                // the update resolve against that inner declaration, so keep
                // the body nested as its own block in that case.
                let update_names = var_names(&update);
                let body_decls: Vec<&str> = body
                    .stmts
                    .iter()
                    .filter_map(|s| match s {
                        Stmt::VarDecl { name, .. } => Some(name.as_str()),
                        _ => None,
                    })
                    .collect();
                let conflict = body_decls
                    .iter()
                    .any(|d| update_names.iter().any(|n| n == d));
                let update_stmt = Stmt::Expr {
                    id: ids.fresh(),
                    expr: update,
                };
                if conflict {
                    let inner = std::mem::replace(
                        &mut body,
                        Block {
                            id: ids.fresh(),
                            stmts: Vec::new(),
                        },
                    );
                    body.stmts = vec![Stmt::Block(inner), update_stmt];
                } else {
                    body.stmts.push(update_stmt);
                }
            }
            let while_stmt = Stmt::While {
                id: ids.fresh(),
                cond,
                body,
            };
            let mut stmts = Vec::new();
            match init {
                Some(ForInit::Decl { id, name, ty, init }) => {
                    stmts.push(Stmt::VarDecl { id, name, ty, init });
                }
                Some(ForInit::Expr { id, expr }) => {
                    stmts.push(Stmt::Expr { id, expr });
                }
                None => {}
            }
            stmts.push(while_stmt);
            Ok(Stmt::Block(Block {
                id: ids.fresh(),
                stmts,
            }))
        }
        _ => Err(TransformError::SiteNotFound),
    }
}

fn var_names(expr: &Expr) -> Vec<String> {
    let mut names = Vec::new();
    walk_exprs(expr, &mut |e| {
        if let Expr::Var { name, .. } = e {
            names.push(name.clone());
        }
    });
    names
}

/// Rewrites a boolean literal to its negated complement (`true` ⇒ `!false`)
/// or negates an if-else condition and exchanges the branches.
pub fn swap_boolean(
    unit: &CompilationUnit,
    site: &TransformSite,
    _seed: u64,
) -> Result<CompilationUnit, TransformError> {
    match site.detail {
        SiteDetail::BoolLiteral => {
            let mut out = unit.clone();
            let mut ids = IdGen::after(&out);
            let mut replaced = false;
            for method in &mut out.methods {
                replace_expr_in_stmts(&mut method.body.stmts, site.target, &mut |expr| {
                    if let Expr::BoolLit { id, value } = expr {
                        replaced = true;
                        Some(Expr::Unary {
                            id: ids.fresh(),
                            op: UnaryOp::Not,
                            operand: Box::new(Expr::BoolLit { id, value: !value }),
                        })
                    } else {
                        None
                    }
                });
            }
            if !replaced {
                return Err(TransformError::SiteNotFound);
            }
            Ok(out)
        }
        SiteDetail::IfElse => {
            let mut out = unit.clone();
            let mut ids = IdGen::after(&out);
            let mut replaced = false;
            for method in &mut out.methods {
                replace_stmt(&mut method.body.stmts, site.target, &mut |stmt| {
                    if let Stmt::If {
                        id,
                        cond,
                        then_block,
                        else_block: Some(else_block),
                    } = stmt
                    {
                        replaced = true;
                        Some(Stmt::If {
                            id,
                            cond: Expr::Unary {
                                id: ids.fresh(),
                                op: UnaryOp::Not,
                                operand: Box::new(cond),
                            },
                            then_block: else_block,
                            else_block: Some(then_block),
                        })
                    } else {
                        None
                    }
                });
            }
            if !replaced {
                return Err(TransformError::SiteNotFound);
            }
            Ok(out)
        }
        _ => Err(TransformError::SiteNotFound),
    }
}

/// Lowers a switch to a block that binds the scrutinee to a fresh temporary
/// once, then selects with an if-else chain. Case arms keep their statements
/// minus the trailing `break`.
pub fn convert_switch(
    unit: &CompilationUnit,
    site: &TransformSite,
    seed: u64,
) -> Result<CompilationUnit, TransformError> {
    if site.detail != SiteDetail::Switch {
        return Err(TransformError::SiteNotFound);
    }
    let mut out = unit.clone();
    let table = scope::resolve(&out)?;
    let temp = scope::fresh_name(&table, seed, 0);
    let mut ids = IdGen::after(&out);
    let mut replaced = false;
    let mut error = None;
    for method in &mut out.methods {
        replace_stmt(&mut method.body.stmts, site.target, &mut |stmt| {
            if let Stmt::Switch {
                scrutinee,
                cases,
                default,
                ..
            } = stmt
            {
                if !switch_is_convertible(&cases, &default) {
                    error = Some(TransformError::FallThrough);
                    return None;
                }
                replaced = true;
                Some(lower_switch(scrutinee, cases, default, &temp, &mut ids))
            } else {
                None
            }
        });
    }
    if let Some(e) = error {
        return Err(e);
    }
    if !replaced {
        return Err(TransformError::SiteNotFound);
    }
    Ok(out)
}

fn lower_switch(
    scrutinee: Expr,
    cases: Vec<SwitchCase>,
    default: Option<Vec<Stmt>>,
    temp: &str,
    ids: &mut IdGen,
) -> Stmt {
    let decl = Stmt::VarDecl {
        id: ids.fresh(),
        name: temp.to_string(),
        ty: Type::Int,
        init: Some(scrutinee),
    };

    let strip_trailing_break = |mut body: Vec<Stmt>| -> Vec<Stmt> {
        if matches!(body.last(), Some(Stmt::Break { .. })) {
            body.pop();
        }
        body
    };

    let default_block = default.map(|d| Block {
        id: ids.fresh(),
        stmts: strip_trailing_break(d),
    });

    // Build the chain inside-out: the last case's else is the default.
    let mut else_block = default_block;
    for case in cases.into_iter().rev() {
        let cond = Expr::Binary {
            id: ids.fresh(),
            op: BinaryOp::Eq,
            lhs: Box::new(Expr::Var {
                id: ids.fresh(),
                name: temp.to_string(),
            }),
            rhs: Box::new(Expr::IntLit {
                id: ids.fresh(),
                value: case.label,
            }),
        };
        let then_block = Block {
            id: ids.fresh(),
            stmts: strip_trailing_break(case.body),
        };
        let if_stmt = Stmt::If {
            id: ids.fresh(),
            cond,
            then_block,
            else_block,
        };
        else_block = Some(Block {
            id: ids.fresh(),
            stmts: vec![if_stmt],
        });
    }

    let mut stmts = vec![decl];
    match else_block {
        // At least one case: unwrap the outermost single-if block.
        Some(block) if block.stmts.len() == 1 && matches!(block.stmts[0], Stmt::If { .. }) => {
            stmts.extend(block.stmts);
        }
        // No cases at all: degenerate to the default body (or nothing).
        Some(block) => stmts.push(Stmt::Block(block)),
        None => {}
    }
    Stmt::Block(Block {
        id: ids.fresh(),
        stmts,
    })
}

/// Exchanges the adjacent statements at the site if the dependence facts
/// still permit it.
pub fn permute_statements(
    unit: &CompilationUnit,
    site: &TransformSite,
    _seed: u64,
) -> Result<CompilationUnit, TransformError> {
    let SiteDetail::Permute { index } = site.detail else {
        return Err(TransformError::SiteNotFound);
    };
    let mut out = unit.clone();
    let table = scope::resolve(&out)?;
    let mut found = false;
    let mut safe = true;
    for method in &mut out.methods {
        swap_in_block(
            &mut method.body,
            site.target,
            index,
            &table,
            &mut found,
            &mut safe,
        );
    }
    if !found {
        return Err(TransformError::SiteNotFound);
    }
    if !safe {
        return Err(TransformError::UnsafeSwap);
    }
    Ok(out)
}

fn swap_in_block(
    block: &mut Block,
    target: NodeId,
    index: usize,
    table: &SymbolTable,
    found: &mut bool,
    safe: &mut bool,
) {
    if block.id == target {
        *found = true;
        if index + 1 >= block.stmts.len()
            || !scope::can_swap(&block.stmts[index], &block.stmts[index + 1], table)
        {
            *safe = false;
            return;
        }
        block.stmts.swap(index, index + 1);
        return;
    }
    for s in &mut block.stmts {
        match s {
            Stmt::If {
                then_block,
                else_block,
                ..
            } => {
                swap_in_block(then_block, target, index, table, found, safe);
                if let Some(b) = else_block {
                    swap_in_block(b, target, index, table, found, safe);
                }
            }
            Stmt::While { body, .. } | Stmt::For { body, .. } => {
                swap_in_block(body, target, index, table, found, safe);
            }
            Stmt::Block(b) => swap_in_block(b, target, index, table, found, safe),
            Stmt::Switch { cases, default, .. } => {
                for c in cases {
                    for s in &mut c.body {
                        if let Stmt::Block(b) = s {
                            swap_in_block(b, target, index, table, found, safe);
                        } else {
                            swap_in_nested(s, target, index, table, found, safe);
                        }
                    }
                }
                if let Some(d) = default {
                    for s in d {
                        if let Stmt::Block(b) = s {
                            swap_in_block(b, target, index, table, found, safe);
                        } else {
                            swap_in_nested(s, target, index, table, found, safe);
                        }
                    }
                }
            }
            _ => {}
        }
    }
}

fn swap_in_nested(
    stmt: &mut Stmt,
    target: NodeId,
    index: usize,
    table: &SymbolTable,
    found: &mut bool,
    safe: &mut bool,
) {
    match stmt {
        Stmt::If {
            then_block,
            else_block,
            ..
        } => {
            swap_in_block(then_block, target, index, table, found, safe);
            if let Some(b) = else_block {
                swap_in_block(b, target, index, table, found, safe);
            }
        }
        Stmt::While { body, .. } | Stmt::For { body, .. } => {
            swap_in_block(body, target, index, table, found, safe);
        }
        Stmt::Block(b) => swap_in_block(b, target, index, table, found, safe),
        Stmt::Switch { cases, default, .. } => {
            for c in cases {
                for s in &mut c.body {
                    swap_in_nested(s, target, index, table, found, safe);
                }
            }
            if let Some(d) = default {
                for s in d {
                    swap_in_nested(s, target, index, table, found, safe);
                }
            }
        }
        _ => {}
    }
}

/// Replaces the statement with NodeId `target` using `f`. `f` returning
/// `None` puts the original back.
fn replace_stmt(stmts: &mut Vec<Stmt>, target: NodeId, f: &mut impl FnMut(Stmt) -> Option<Stmt>) {
    for slot in stmts.iter_mut() {
        if slot.id() == target {
            // Temporarily take the statement out to transform it by value.
            let placeholder = Stmt::Break { id: NodeId(u32::MAX) };
            let original = std::mem::replace(slot, placeholder);
            match f(original.clone()) {
                Some(new_stmt) => *slot = new_stmt,
                None => *slot = original,
            }
            return;
        }
        match slot {
            Stmt::If {
                then_block,
                else_block,
                ..
            } => {
                replace_stmt(&mut then_block.stmts, target, f);
                if let Some(b) = else_block {
                    replace_stmt(&mut b.stmts, target, f);
                }
            }
            Stmt::While { body, .. } | Stmt::For { body, .. } => {
                replace_stmt(&mut body.stmts, target, f);
            }
            Stmt::Switch { cases, default, .. } => {
                for c in cases {
                    replace_stmt(&mut c.body, target, f);
                }
                if let Some(d) = default {
                    replace_stmt(d, target, f);
                }
            }
            Stmt::Block(b) => replace_stmt(&mut b.stmts, target, f),
            _ => {}
        }
    }
}

/// Replaces the expression with NodeId `target` anywhere under `stmts`.
fn replace_expr_in_stmts(
    stmts: &mut [Stmt],
    target: NodeId,
    f: &mut impl FnMut(Expr) -> Option<Expr>,
) {
    for s in stmts {
        match s {
            Stmt::VarDecl { init, .. } => {
                if let Some(e) = init {
                    replace_expr(e, target, f);
                }
            }
            Stmt::Expr { expr, .. } => replace_expr(expr, target, f),
            Stmt::If {
                cond,
                then_block,
                else_block,
                ..
            } => {
                replace_expr(cond, target, f);
                replace_expr_in_stmts(&mut then_block.stmts, target, f);
                if let Some(b) = else_block {
                    replace_expr_in_stmts(&mut b.stmts, target, f);
                }
            }
            Stmt::While { cond, body, .. } => {
                replace_expr(cond, target, f);
                replace_expr_in_stmts(&mut body.stmts, target, f);
            }
            Stmt::For {
                init,
                cond,
                update,
                body,
                ..
            } => {
                match init {
                    Some(ForInit::Decl { init: Some(e), .. }) => replace_expr(e, target, f),
                    Some(ForInit::Expr { expr, .. }) => replace_expr(expr, target, f),
                    _ => {}
                }
                if let Some(e) = cond {
                    replace_expr(e, target, f);
                }
                if let Some(e) = update {
                    replace_expr(e, target, f);
                }
                replace_expr_in_stmts(&mut body.stmts, target, f);
            }
            Stmt::Switch {
                scrutinee,
                cases,
                default,
                ..
            } => {
                replace_expr(scrutinee, target, f);
                for c in cases {
                    replace_expr_in_stmts(&mut c.body, target, f);
                }
                if let Some(d) = default {
                    replace_expr_in_stmts(d, target, f);
                }
            }
            Stmt::Return { value, .. } => {
                if let Some(e) = value {
                    replace_expr(e, target, f);
                }
            }
            Stmt::Break { .. } | Stmt::Continue { .. } => {}
            Stmt::Block(b) => replace_expr_in_stmts(&mut b.stmts, target, f),
        }
    }
}

fn replace_expr(expr: &mut Expr, target: NodeId, f: &mut impl FnMut(Expr) -> Option<Expr>) {
    if expr.id() == target {
        let placeholder = Expr::IntLit {
            id: NodeId(u32::MAX),
            value: 0,
        };
        let original = std::mem::replace(expr, placeholder);
        match f(original.clone()) {
            Some(new_expr) => *expr = new_expr,
            None => *expr = original,
        }
        return;
    }
    match expr {
        Expr::IntLit { .. } | Expr::BoolLit { .. } | Expr::Var { .. } => {}
        Expr::Unary { operand, .. } => replace_expr(operand, target, f),
        Expr::Binary { lhs, rhs, .. } => {
            replace_expr(lhs, target, f);
            replace_expr(rhs, target, f);
        }
        Expr::Assign { target: t, value, .. } => {
            replace_expr(t, target, f);
            replace_expr(value, target, f);
        }
        Expr::IncDec { target: t, .. } => replace_expr(t, target, f),
        Expr::Call { args, .. } => {
            for a in args {
                replace_expr(a, target, f);
            }
        }
    }
}

/// Applies the site's transformation kind.
pub fn apply(
    unit: &CompilationUnit,
    site: &TransformSite,
    seed: u64,
) -> Result<CompilationUnit, TransformError> {
    match site.kind {
        TransformKind::RenameVariable => rename_variable(unit, site, seed),
        TransformKind::ExchangeLoop => exchange_loop(unit, site, seed),
        TransformKind::SwapBoolean => swap_boolean(unit, site, seed),
        TransformKind::ConvertSwitch => convert_switch(unit, site, seed),
        TransformKind::PermuteStatements => permute_statements(unit, site, seed),
    }
}

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

/// What the planner should generate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanConfig {
    pub kinds: Vec<TransformKind>,
    pub max_per_kind: usize,
    pub seed: u64,
}

/// One planned variant: the transformed unit plus its provenance record.
#[derive(Debug, Clone)]
pub struct PlannedVariant {
    pub site: TransformSite,
    pub record: TransformRecord,
    pub unit: CompilationUnit,
}

pub fn sha256_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// For each requested kind, shuffles the enumerated sites with the seed and
/// applies up to `max_per_kind` of them, each to a fresh copy of the
/// original. Deterministic in `(unit, config)`.
pub fn plan(
    unit: &CompilationUnit,
    table: &SymbolTable,
    config: &PlanConfig,
) -> Vec<PlannedVariant> {
    let before_hash = sha256_hex(&print(unit));
    let mut variants = Vec::new();
    for kind in TransformKind::ALL {
        if !config.kinds.contains(&kind) {
            continue;
        }
        let mut sites = enumerate_sites(unit, table, kind);
        let kind_index = TransformKind::ALL.iter().position(|k| *k == kind).unwrap() as u64;
        let salt = kind_index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ salt);
        sites.shuffle(&mut rng);
        sites.truncate(config.max_per_kind);
        for site in sites {
            let variant = apply(unit, &site, config.seed)
                .expect("an enumerated site is applicable by construction");
            let record = TransformRecord {
                kind,
                method: unit.methods[site.method_index].name.clone(),
                node_path: node_path(unit, &site),
                seed: config.seed,
                before_sha256: before_hash.clone(),
                after_sha256: sha256_hex(&print(&variant)),
            };
            variants.push(PlannedVariant {
                site,
                record,
                unit: variant,
            });
        }
    }
    variants
}

// ---------------------------------------------------------------------------
// Node paths
// ---------------------------------------------------------------------------

/// Dotted path from the site's method to its target node, for reports.
/// Permutation sites append the statement index.
pub fn node_path(unit: &CompilationUnit, site: &TransformSite) -> String {
    let method = &unit.methods[site.method_index];
    let mut path = String::new();
    if let Some(i) = method
        .params
        .iter()
        .position(|p| p.id == site.target)
    {
        path = format!("param{i}");
    } else if method.body.id == site.target {
        path = "body".to_string();
    } else if let Some(p) = path_in_block(&method.body, site.target) {
        path = format!("body.{p}");
    }
    if path.is_empty() {
        path = format!("node{}", site.target.0);
    }
    if let SiteDetail::Permute { index } = site.detail {
        path.push_str(&format!(".swap{index}"));
    }
    path
}

fn path_in_block(block: &Block, target: NodeId) -> Option<String> {
    for (i, s) in block.stmts.iter().enumerate() {
        if s.id() == target {
            return Some(i.to_string());
        }
        if let Some(p) = path_in_stmt(s, target) {
            return Some(format!("{i}.{p}"));
        }
    }
    None
}

fn path_in_stmt(stmt: &Stmt, target: NodeId) -> Option<String> {
    match stmt {
        Stmt::VarDecl { init, .. } => init
            .as_ref()
            .and_then(|e| path_in_expr(e, target))
            .map(|p| format!("init.{p}")),
        Stmt::Expr { expr, .. } => path_in_expr(expr, target).map(|p| format!("expr.{p}")),
        Stmt::If {
            cond,
            then_block,
            else_block,
            ..
        } => {
            if let Some(p) = path_in_expr(cond, target) {
                return Some(format!("cond.{p}"));
            }
            if then_block.id == target {
                return Some("then".to_string());
            }
            if let Some(p) = path_in_block(then_block, target) {
                return Some(format!("then.{p}"));
            }
            if let Some(b) = else_block {
                if b.id == target {
                    return Some("else".to_string());
                }
                if let Some(p) = path_in_block(b, target) {
                    return Some(format!("else.{p}"));
                }
            }
            None
        }
        Stmt::While { cond, body, .. } => {
            if let Some(p) = path_in_expr(cond, target) {
                return Some(format!("cond.{p}"));
            }
            if body.id == target {
                return Some("body".to_string());
            }
            path_in_block(body, target).map(|p| format!("body.{p}"))
        }
        Stmt::For {
            init,
            cond,
            update,
            body,
            ..
        } => {
            match init {
                Some(ForInit::Decl { id, init: e, .. }) => {
                    if *id == target {
                        return Some("init".to_string());
                    }
                    if let Some(p) = e.as_ref().and_then(|e| path_in_expr(e, target)) {
                        return Some(format!("init.{p}"));
                    }
                }
                Some(ForInit::Expr { id, expr }) => {
                    if *id == target {
                        return Some("init".to_string());
                    }
                    if let Some(p) = path_in_expr(expr, target) {
                        return Some(format!("init.{p}"));
                    }
                }
                None => {}
            }
            if let Some(p) = cond.as_ref().and_then(|e| path_in_expr(e, target)) {
                return Some(format!("cond.{p}"));
            }
            if let Some(p) = update.as_ref().and_then(|e| path_in_expr(e, target)) {
                return Some(format!("update.{p}"));
            }
            if body.id == target {
                return Some("body".to_string());
            }
            path_in_block(body, target).map(|p| format!("body.{p}"))
        }
        Stmt::Switch {
            scrutinee,
            cases,
            default,
            ..
        } => {
            if let Some(p) = path_in_expr(scrutinee, target) {
                return Some(format!("scrutinee.{p}"));
            }
            for case in cases {
                for (i, s) in case.body.iter().enumerate() {
                    if s.id() == target {
                        return Some(format!("case{}.{i}", case.label));
                    }
                    if let Some(p) = path_in_stmt(s, target) {
                        return Some(format!("case{}.{i}.{p}", case.label));
                    }
                }
            }
            if let Some(d) = default {
                for (i, s) in d.iter().enumerate() {
                    if s.id() == target {
                        return Some(format!("default.{i}"));
                    }
                    if let Some(p) = path_in_stmt(s, target) {
                        return Some(format!("default.{i}.{p}"));
                    }
                }
            }
            None
        }
        Stmt::Return { value, .. } => value
            .as_ref()
            .and_then(|e| path_in_expr(e, target))
            .map(|p| format!("value.{p}")),
        Stmt::Break { .. } | Stmt::Continue { .. } => None,
        Stmt::Block(b) => {
            if b.id == target {
                return None; // handled by the caller through stmt.id()
            }
            path_in_block(b, target)
        }
    }
}

fn path_in_expr(expr: &Expr, target: NodeId) -> Option<String> {
    if expr.id() == target {
        return Some("here".to_string());
    }
    match expr {
        Expr::IntLit { .. } | Expr::BoolLit { .. } | Expr::Var { .. } => None,
        Expr::Unary { operand, .. } => {
            path_in_expr(operand, target).map(|p| format!("operand.{p}"))
        }
        Expr::Binary { lhs, rhs, .. } => {
            if let Some(p) = path_in_expr(lhs, target) {
                return Some(format!("lhs.{p}"));
            }
            path_in_expr(rhs, target).map(|p| format!("rhs.{p}"))
        }
        Expr::Assign { target: t, value, .. } => {
            if let Some(p) = path_in_expr(t, target) {
                return Some(format!("target.{p}"));
            }
            path_in_expr(value, target).map(|p| format!("value.{p}"))
        }
        Expr::IncDec { target: t, .. } => {
            path_in_expr(t, target).map(|p| format!("target.{p}"))
        }
        Expr::Call { args, .. } => {
            for (i, a) in args.iter().enumerate() {
                if let Some(p) = path_in_expr(a, target) {
                    return Some(format!("arg{i}.{p}"));
                }
            }
            None
        }
    }
}
