//! Name resolution and the read/write dependence facts that gate variable
//! renaming and statement permutation.
//!
//! Scoping is lexical with block shadowing: inner declarations shadow outer
//! ones, a name is visible only after its declaration point, and two
//! declarations in the same block may not share a name. Each `switch` arm is
//! its own scope, so converting arms to `if` branches cannot change what a
//! name refers to.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::ast::*;

/// Identity of a resolved variable (parameter or local).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct SymbolId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Param,
    Local,
}

#[derive(Debug, Clone)]
pub struct SymbolInfo {
    pub name: String,
    pub decl: NodeId,
    pub kind: SymbolKind,
}

/// Resolution result: every `Var`, declaration, and parameter node is mapped
/// to the symbol it denotes.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    symbols: Vec<SymbolInfo>,
    node_to_symbol: HashMap<NodeId, SymbolId>,
    method_names: BTreeSet<String>,
}

impl SymbolTable {
    pub fn symbol_of(&self, node: NodeId) -> Option<SymbolId> {
        self.node_to_symbol.get(&node).copied()
    }

    pub fn info(&self, sym: SymbolId) -> &SymbolInfo {
        &self.symbols[sym.0 as usize]
    }

    pub fn symbols(&self) -> impl Iterator<Item = (SymbolId, &SymbolInfo)> {
        self.symbols
            .iter()
            .enumerate()
            .map(|(i, info)| (SymbolId(i as u32), info))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Every name that could capture or be captured by a new identifier:
    /// all declared variables plus all method names.
    fn taken_names(&self) -> BTreeSet<String> {
        let mut names: BTreeSet<String> =
            self.symbols.iter().map(|s| s.name.clone()).collect();
        names.extend(self.method_names.iter().cloned());
        names
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolveErrorKind {
    UnknownName,
    DuplicateInScope,
    UseBeforeDecl,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{kind:?} for `{name}` at node {node}")]
pub struct ResolveError {
    pub node: NodeId,
    pub kind: ResolveErrorKind,
    pub name: String,
}

/// Resolves every identifier in the unit to a symbol.
pub fn resolve(unit: &CompilationUnit) -> Result<SymbolTable, ResolveError> {
    let mut table = SymbolTable::default();
    table.method_names = unit.methods.iter().map(|m| m.name.clone()).collect();

    for method in &unit.methods {
        let mut resolver = Resolver {
            table: &mut table,
            unit,
            scopes: Vec::new(),
        };
        resolver.push_scope(&[]);
        for p in &method.params {
            resolver.declare(p.id, &p.name, SymbolKind::Param)?;
        }
        // The body block shares the parameter scope: a top-level local may
        // not redeclare a parameter name.
        resolver.stmts_in_current_scope(&method.body.stmts)?;
        resolver.pop_scope();
    }
    Ok(table)
}

struct Scope {
    /// Bound so far, in declaration order.
    bound: HashMap<String, SymbolId>,
    /// Everything this scope will eventually declare, for use-before-decl
    /// detection.
    all_decls: BTreeSet<String>,
}

struct Resolver<'a> {
    table: &'a mut SymbolTable,
    unit: &'a CompilationUnit,
    scopes: Vec<Scope>,
}

impl<'a> Resolver<'a> {
    fn push_scope(&mut self, stmts: &[Stmt]) {
        let mut all_decls = BTreeSet::new();
        for s in stmts {
            if let Stmt::VarDecl { name, .. } = s {
                all_decls.insert(name.clone());
            }
        }
        self.scopes.push(Scope {
            bound: HashMap::new(),
            all_decls,
        });
    }

    fn pop_scope(&mut self) {
        self.scopes.pop();
    }

    fn declare(
        &mut self,
        node: NodeId,
        name: &str,
        kind: SymbolKind,
    ) -> Result<SymbolId, ResolveError> {
        let scope = self.scopes.last_mut().expect("scope stack is never empty");
        if scope.bound.contains_key(name) {
            return Err(ResolveError {
                node,
                kind: ResolveErrorKind::DuplicateInScope,
                name: name.to_string(),
            });
        }
        let sym = SymbolId(self.table.symbols.len() as u32);
        self.table.symbols.push(SymbolInfo {
            name: name.to_string(),
            decl: node,
            kind,
        });
        self.table.node_to_symbol.insert(node, sym);
        scope.bound.insert(name.to_string(), sym);
        Ok(sym)
    }

    fn lookup(&mut self, node: NodeId, name: &str) -> Result<SymbolId, ResolveError> {
        for scope in self.scopes.iter().rev() {
            if let Some(sym) = scope.bound.get(name) {
                let sym = *sym;
                self.table.node_to_symbol.insert(node, sym);
                return Ok(sym);
            }
            // Declared later in this scope but not bound yet.
            if scope.all_decls.contains(name) {
                return Err(ResolveError {
                    node,
                    kind: ResolveErrorKind::UseBeforeDecl,
                    name: name.to_string(),
                });
            }
        }
        Err(ResolveError {
            node,
            kind: ResolveErrorKind::UnknownName,
            name: name.to_string(),
        })
    }

    fn block(&mut self, block: &Block) -> Result<(), ResolveError> {
        self.push_scope(&block.stmts);
        self.stmts_in_current_scope(&block.stmts)?;
        self.pop_scope();
        Ok(())
    }

    fn stmts_in_current_scope(&mut self, stmts: &[Stmt]) -> Result<(), ResolveError> {
        // Record upcoming declarations for use-before-decl checks even when
        // the statements live in an existing scope (the method body).
        let mut extra = Vec::new();
        for s in stmts {
            if let Stmt::VarDecl { name, .. } = s {
                let scope = self.scopes.last_mut().unwrap();
                if scope.all_decls.insert(name.clone()) {
                    extra.push(name.clone());
                }
            }
        }
        let result = (|| {
            for s in stmts {
                self.stmt(s)?;
            }
            Ok(())
        })();
        if result.is_err() {
            let scope = self.scopes.last_mut().unwrap();
            for name in extra {
                scope.all_decls.remove(&name);
            }
        }
        result
    }

    fn stmt(&mut self, stmt: &Stmt) -> Result<(), ResolveError> {
        match stmt {
            Stmt::VarDecl { id, name, init, .. } => {
                // The initializer is evaluated before the name is bound.
                if let Some(e) = init {
                    self.expr(e)?;
                }
                self.declare(*id, name, SymbolKind::Local)?;
                Ok(())
            }
            Stmt::Expr { expr, .. } => self.expr(expr),
            Stmt::If {
                cond,
                then_block,
                else_block,
                ..
            } => {
                self.expr(cond)?;
                self.block(then_block)?;
                if let Some(b) = else_block {
                    self.block(b)?;
                }
                Ok(())
            }
            Stmt::While { cond, body, .. } => {
                self.expr(cond)?;
                self.block(body)
            }
            Stmt::For {
                init,
                cond,
                update,
                body,
                ..
            } => {
                // The for header introduces a scope that covers the whole
                // statement.
                self.push_scope(&[]);
                match init {
                    Some(ForInit::Decl {
                        id, name, init: e, ..
                    }) => {
                        if let Some(e) = e {
                            self.expr(e)?;
                        }
                        self.declare(*id, name, SymbolKind::Local)?;
                    }
                    Some(ForInit::Expr { expr, .. }) => self.expr(expr)?,
                    None => {}
                }
                if let Some(e) = cond {
                    self.expr(e)?;
                }
                if let Some(e) = update {
                    self.expr(e)?;
                }
                self.block(body)?;
                self.pop_scope();
                Ok(())
            }
            Stmt::Switch {
                scrutinee,
                cases,
                default,
                ..
            } => {
                self.expr(scrutinee)?;
                for case in cases {
                    self.push_scope(&case.body);
                    self.stmts_in_current_scope(&case.body)?;
                    self.pop_scope();
                }
                if let Some(d) = default {
                    self.push_scope(d);
                    self.stmts_in_current_scope(d)?;
                    self.pop_scope();
                }
                Ok(())
            }
            Stmt::Return { value, .. } => {
                if let Some(e) = value {
                    self.expr(e)?;
                }
                Ok(())
            }
            Stmt::Break { .. } | Stmt::Continue { .. } => Ok(()),
            Stmt::Block(b) => self.block(b),
        }
    }

    fn expr(&mut self, expr: &Expr) -> Result<(), ResolveError> {
        match expr {
            Expr::IntLit { .. } | Expr::BoolLit { .. } => Ok(()),
            Expr::Var { id, name } => self.lookup(*id, name).map(|_| ()),
            Expr::Unary { operand, .. } => self.expr(operand),
            Expr::Binary { lhs, rhs, .. } => {
                self.expr(lhs)?;
                self.expr(rhs)
            }
            Expr::Assign { target, value, .. } => {
                self.expr(target)?;
                self.expr(value)
            }
            Expr::IncDec { target, .. } => self.expr(target),
            Expr::Call { id, callee, args } => {
                if self.unit.method(callee).is_none() {
                    return Err(ResolveError {
                        node: *id,
                        kind: ResolveErrorKind::UnknownName,
                        name: callee.clone(),
                    });
                }
                for a in args {
                    self.expr(a)?;
                }
                Ok(())
            }
        }
    }
}

/// Variable reads and writes a statement may perform, plus whether it
/// contains calls or control jumps. Over-approximation is allowed;
/// under-approximation is not.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Effects {
    pub reads: BTreeSet<SymbolId>,
    pub writes: BTreeSet<SymbolId>,
    pub calls: bool,
    pub jumps: bool,
}

/// Computes the effect summary of one statement.
pub fn effects(stmt: &Stmt, table: &SymbolTable) -> Effects {
    let mut e = Effects::default();
    stmt_effects(stmt, table, &mut e);
    e
}

fn stmt_effects(stmt: &Stmt, table: &SymbolTable, out: &mut Effects) {
    match stmt {
        Stmt::VarDecl { id, init, .. } => {
            if let Some(e) = init {
                expr_effects(e, table, out);
            }
            if let Some(sym) = table.symbol_of(*id) {
                out.writes.insert(sym);
            }
        }
        Stmt::Expr { expr, .. } => expr_effects(expr, table, out),
        Stmt::If {
            cond,
            then_block,
            else_block,
            ..
        } => {
            expr_effects(cond, table, out);
            for s in &then_block.stmts {
                stmt_effects(s, table, out);
            }
            if let Some(b) = else_block {
                for s in &b.stmts {
                    stmt_effects(s, table, out);
                }
            }
        }
        Stmt::While { cond, body, .. } => {
            expr_effects(cond, table, out);
            for s in &body.stmts {
                stmt_effects(s, table, out);
            }
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
                    if let Some(e) = e {
                        expr_effects(e, table, out);
                    }
                    if let Some(sym) = table.symbol_of(*id) {
                        out.writes.insert(sym);
                    }
                }
                Some(ForInit::Expr { expr, .. }) => expr_effects(expr, table, out),
                None => {}
            }
            if let Some(e) = cond {
                expr_effects(e, table, out);
            }
            if let Some(e) = update {
                expr_effects(e, table, out);
            }
            for s in &body.stmts {
                stmt_effects(s, table, out);
            }
        }
        Stmt::Switch {
            scrutinee,
            cases,
            default,
            ..
        } => {
            expr_effects(scrutinee, table, out);
            for c in cases {
                for s in &c.body {
                    stmt_effects(s, table, out);
                }
            }
            if let Some(d) = default {
                for s in d {
                    stmt_effects(s, table, out);
                }
            }
        }
        Stmt::Return { value, .. } => {
            if let Some(e) = value {
                expr_effects(e, table, out);
            }
            out.jumps = true;
        }
        Stmt::Break { .. } | Stmt::Continue { .. } => out.jumps = true,
        Stmt::Block(b) => {
            for s in &b.stmts {
                stmt_effects(s, table, out);
            }
        }
    }
}

fn expr_effects(expr: &Expr, table: &SymbolTable, out: &mut Effects) {
    match expr {
        Expr::IntLit { .. } | Expr::BoolLit { .. } => {}
        Expr::Var { id, .. } => {
            if let Some(sym) = table.symbol_of(*id) {
                out.reads.insert(sym);
            }
        }
        Expr::Unary { operand, .. } => expr_effects(operand, table, out),
        Expr::Binary { lhs, rhs, .. } => {
            expr_effects(lhs, table, out);
            expr_effects(rhs, table, out);
        }
        Expr::Assign {
            target, op, value, ..
        } => {
            if let Some(sym) = table.symbol_of(target.id()) {
                out.writes.insert(sym);
                // Compound assignment reads the old value.
                if op.binary_op().is_some() {
                    out.reads.insert(sym);
                }
            }
            expr_effects(value, table, out);
        }
        Expr::IncDec { target, .. } => {
            if let Some(sym) = table.symbol_of(target.id()) {
                out.reads.insert(sym);
                out.writes.insert(sym);
            }
        }
        Expr::Call { args, .. } => {
            out.calls = true;
            for a in args {
                expr_effects(a, table, out);
            }
        }
    }
}

/// Symbols a statement introduces into its enclosing block's scope.
fn declared_symbols(stmt: &Stmt, table: &SymbolTable) -> BTreeSet<SymbolId> {
    match stmt {
        Stmt::VarDecl { id, .. } => table.symbol_of(*id).into_iter().collect(),
        _ => BTreeSet::new(),
    }
}

/// Whether two adjacent statements of the same block may be exchanged
/// without changing behavior: no read/write conflicts, no control jumps,
/// at most one side calling, and neither declaring a name the other
/// mentions.
pub fn can_swap(a: &Stmt, b: &Stmt, table: &SymbolTable) -> bool {
    let ea = effects(a, table);
    let eb = effects(b, table);
    if ea.jumps || eb.jumps {
        return false;
    }
    if ea.calls && eb.calls {
        return false;
    }
    if !ea.writes.is_disjoint(&eb.reads) {
        return false;
    }
    if !ea.reads.is_disjoint(&eb.writes) {
        return false;
    }
    if !ea.writes.is_disjoint(&eb.writes) {
        return false;
    }
    let da = declared_symbols(a, table);
    let db = declared_symbols(b, table);
    let mentions_a: BTreeSet<_> = ea.reads.union(&ea.writes).copied().collect();
    let mentions_b: BTreeSet<_> = eb.reads.union(&eb.writes).copied().collect();
    if !da.is_disjoint(&mentions_b) || !db.is_disjoint(&mentions_a) {
        return false;
    }
    true
}

/// Picks a fresh identifier from the pool `v0, v1, ...`, shuffled by `seed`.
///
/// The chosen name collides with no declared variable or method name in the
/// unit, which subsumes every scope. `index` selects successive distinct
/// names for the same seed.
pub fn fresh_name(table: &SymbolTable, seed: u64, index: usize) -> String {
    let taken = table.taken_names();
    // The window is independent of `index` below 64 picks, so successive
    // indices draw from one shuffled pool.
    let window = taken.len() + 64 * (index / 64 + 1);
    let mut pool: Vec<String> = (0..window).map(|i| format!("v{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    pool.into_iter()
        .filter(|name| !taken.contains(name))
        .nth(index)
        .expect("pool window always exceeds taken names")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_source;

    fn resolved(src: &str) -> (CompilationUnit, SymbolTable) {
        let unit = parse_source(src).unwrap();
        let table = resolve(&unit).unwrap();
        (unit, table)
    }

    fn body_stmt(unit: &CompilationUnit, i: usize) -> &Stmt {
        &unit.methods[0].body.stmts[i]
    }

    #[test]
    fn param_use_resolves_to_param() {
        let (unit, table) = resolved("void f(int x){ x = 1; }");
        let param_id = unit.methods[0].params[0].id;
        let param_sym = table.symbol_of(param_id).unwrap();
        match body_stmt(&unit, 0) {
            Stmt::Expr {
                expr: Expr::Assign { target, .. },
                ..
            } => {
                assert_eq!(table.symbol_of(target.id()), Some(param_sym));
                assert_eq!(table.info(param_sym).kind, SymbolKind::Param);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inner_declaration_shadows_outer() {
        let (unit, table) = resolved("void f(){ int x; { int x; x = 1; } }");
        let outer_id = body_stmt(&unit, 0).id();
        let (inner_decl_id, use_id) = match body_stmt(&unit, 1) {
            Stmt::Block(b) => {
                let decl = b.stmts[0].id();
                let use_id = match &b.stmts[1] {
                    Stmt::Expr {
                        expr: Expr::Assign { target, .. },
                        ..
                    } => target.id(),
                    other => panic!("unexpected {other:?}"),
                };
                (decl, use_id)
            }
            other => panic!("unexpected {other:?}"),
        };
        let outer = table.symbol_of(outer_id).unwrap();
        let inner = table.symbol_of(inner_decl_id).unwrap();
        assert_ne!(outer, inner);
        assert_eq!(table.symbol_of(use_id), Some(inner));
    }

    #[test]
    fn unknown_name_is_an_error() {
        let unit = parse_source("void f(){ x = 1; }").unwrap();
        let err = resolve(&unit).unwrap_err();
        assert_eq!(err.kind, ResolveErrorKind::UnknownName);
        assert_eq!(err.name, "x");
    }

    #[test]
    fn use_before_declaration_in_same_block() {
        let unit = parse_source("void f(){ x = 1; int x; }").unwrap();
        let err = resolve(&unit).unwrap_err();
        assert_eq!(err.kind, ResolveErrorKind::UseBeforeDecl);
        // Also when an outer binding exists: the inner block declares x
        // later, so the earlier use is still an error.
        let unit = parse_source("void f(){ int x; { x = 1; int x; } }").unwrap();
        let err = resolve(&unit).unwrap_err();
        assert_eq!(err.kind, ResolveErrorKind::UseBeforeDecl);
    }

    #[test]
    fn self_referencing_initializer_is_use_before_decl() {
        let unit = parse_source("void f(){ int x = x + 1; }").unwrap();
        let err = resolve(&unit).unwrap_err();
        assert_eq!(err.kind, ResolveErrorKind::UseBeforeDecl);
    }

    #[test]
    fn duplicate_in_scope() {
        let unit = parse_source("void f(){ int x; int x; }").unwrap();
        let err = resolve(&unit).unwrap_err();
        assert_eq!(err.kind, ResolveErrorKind::DuplicateInScope);
        // A parameter occupies the method body scope.
        let unit = parse_source("void f(int x){ int x; }").unwrap();
        let err = resolve(&unit).unwrap_err();
        assert_eq!(err.kind, ResolveErrorKind::DuplicateInScope);
    }

    #[test]
    fn call_to_unknown_method() {
        let unit = parse_source("void f(){ g(); }").unwrap();
        let err = resolve(&unit).unwrap_err();
        assert_eq!(err.kind, ResolveErrorKind::UnknownName);
        assert_eq!(err.name, "g");
    }

    #[test]
    fn switch_arms_do_not_share_scope() {
        let unit = parse_source(
            "void f(int x){ switch(x){ case 0: int y = 1; break; case 1: y = 2; break; } }",
        )
        .unwrap();
        let err = resolve(&unit).unwrap_err();
        assert_eq!(err.kind, ResolveErrorKind::UnknownName);
        assert_eq!(err.name, "y");
    }

    #[test]
    fn for_scope_covers_header_and_body() {
        let (_, table) = resolved("void f(int n){ for(int i = 0; i < n; i++){ n += i; } }");
        assert_eq!(table.len(), 2); // n and i
    }

    #[test]
    fn effects_of_literal_declaration() {
        let (unit, table) = resolved("void f(){ int a = 1; }");
        let e = effects(body_stmt(&unit, 0), &table);
        assert!(e.reads.is_empty());
        assert_eq!(e.writes.len(), 1);
        assert!(!e.calls);
        assert!(!e.jumps);
    }

    #[test]
    fn compound_assignment_reads_and_writes_target() {
        let (unit, table) = resolved("void f(int a, int b){ a += b; }");
        let e = effects(body_stmt(&unit, 0), &table);
        let a = table.symbol_of(unit.methods[0].params[0].id).unwrap();
        let b = table.symbol_of(unit.methods[0].params[1].id).unwrap();
        assert_eq!(e.reads, [a, b].into_iter().collect());
        assert_eq!(e.writes, [a].into_iter().collect());
    }

    #[test]
    fn return_is_a_jump() {
        let (unit, table) = resolved("void f(boolean p){ if (p) return; }");
        let e = effects(body_stmt(&unit, 0), &table);
        let p = table.symbol_of(unit.methods[0].params[0].id).unwrap();
        assert_eq!(e.reads, [p].into_iter().collect());
        assert!(e.writes.is_empty());
        assert!(e.jumps);
    }

    #[test]
    fn break_inside_switch_counts_as_jump() {
        let (unit, table) =
            resolved("void f(int x){ switch(x){ case 0: break; } }");
        let e = effects(body_stmt(&unit, 0), &table);
        assert!(e.jumps);
    }

    #[test]
    fn call_sets_the_call_flag() {
        let (unit, table) = resolved("void g(){} void f(){ g(); }");
        let stmt = &unit.methods[1].body.stmts[0];
        assert!(effects(stmt, &table).calls);
    }

    #[test]
    fn incdec_reads_and_writes() {
        let (unit, table) = resolved("void f(int i){ i++; }");
        let e = effects(body_stmt(&unit, 0), &table);
        let i = table.symbol_of(unit.methods[0].params[0].id).unwrap();
        assert_eq!(e.reads, [i].into_iter().collect());
        assert_eq!(e.writes, [i].into_iter().collect());
    }

    #[test]
    fn block_effects_are_the_union_of_children() {
        let (unit, table) = resolved("void f(int a, int b){ { a = 1; b = a; } }");
        let e = effects(body_stmt(&unit, 0), &table);
        let a = table.symbol_of(unit.methods[0].params[0].id).unwrap();
        let b = table.symbol_of(unit.methods[0].params[1].id).unwrap();
        assert_eq!(e.reads, [a].into_iter().collect());
        assert_eq!(e.writes, [a, b].into_iter().collect());
    }

    #[test]
    fn can_swap_examples() {
        let (unit, table) = resolved("void f(){ int a = 1; int b = 2; }");
        assert!(can_swap(body_stmt(&unit, 0), body_stmt(&unit, 1), &table));

        let (unit, table) = resolved("void f(){ int a = 1; int b = a; }");
        assert!(!can_swap(body_stmt(&unit, 0), body_stmt(&unit, 1), &table));

        let (unit, table) = resolved("void f(){ return; int b = 2; }");
        assert!(!can_swap(body_stmt(&unit, 0), body_stmt(&unit, 1), &table));
    }

    #[test]
    fn two_calls_never_swap() {
        let (unit, table) = resolved("void g(){} void h(){} void f(){ g(); h(); }");
        let body = &unit.methods[2].body.stmts;
        assert!(!can_swap(&body[0], &body[1], &table));
    }

    #[test]
    fn one_call_swaps_with_conflict_free_statement() {
        let (unit, table) = resolved("int g(){ return 1; } void f(int x){ int a = g(); int b = x; }");
        let body = &unit.methods[1].body.stmts;
        assert!(can_swap(&body[0], &body[1], &table));
    }

    #[test]
    fn can_swap_is_symmetric() {
        let srcs = [
            "void f(int a, int b){ a = 1; b = 2; }",
            "void f(int a, int b){ a = 1; b = a; }",
            "void f(int a){ a = 1; a = 2; }",
            "void f(int a){ int b = 1; a += 1; }",
        ];
        for src in srcs {
            let (unit, table) = resolved(src);
            let body = &unit.methods[0].body.stmts;
            assert_eq!(
                can_swap(&body[0], &body[1], &table),
                can_swap(&body[1], &body[0], &table),
                "asymmetric for {src}"
            );
        }
    }

    #[test]
    fn fresh_name_avoids_occupied_pool() {
        let (_, table) = resolved(
            "void f(){ int v0; int v1; int v2; int v3; int v4; int v5; int v6; int v7; int v8; int v9; }",
        );
        for seed in 0..20 {
            let name = fresh_name(&table, seed, 0);
            for k in 0..10 {
                assert_ne!(name, format!("v{k}"));
            }
        }
    }

    #[test]
    fn fresh_name_is_deterministic_and_index_distinct() {
        let (_, table) = resolved("void f(int x){ x = 1; }");
        assert_eq!(fresh_name(&table, 7, 0), fresh_name(&table, 7, 0));
        assert_ne!(fresh_name(&table, 7, 0), fresh_name(&table, 7, 1));
    }

    #[test]
    fn fresh_name_avoids_method_names() {
        let (_, table) = resolved("void v0(){} void f(){ v0(); }");
        for seed in 0..20 {
            assert_ne!(fresh_name(&table, seed, 0), "v0");
        }
    }

    #[test]
    fn resolve_is_deterministic() {
        let src = "int f(int a){ int b = a; { int c = b; b = c; } return b; }";
        let unit = parse_source(src).unwrap();
        let t1 = resolve(&unit).unwrap();
        let t2 = resolve(&unit).unwrap();
        assert_eq!(t1.len(), t2.len());
        for (sym, info) in t1.symbols() {
            let other = t2.info(sym);
            assert_eq!(info.name, other.name);
            assert_eq!(info.decl, other.decl);
        }
    }
}
