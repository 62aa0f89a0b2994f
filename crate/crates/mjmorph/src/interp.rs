//! Fuel-bounded reference interpreter for MJ and differential equivalence
//! checking between program variants.
//!
//! Arithmetic follows Java `int` semantics: 32-bit two's-complement wrapping,
//! division truncating toward zero, remainder sign following the dividend.
//! Every statement and expression node consumes one unit of fuel, so
//! nontermination surfaces as [`Outcome::FuelExhausted`] instead of hanging.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::ast::*;

/// Runtime value of the three MJ types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum Value {
    Int(i32),
    Bool(bool),
    Void,
}

impl Value {
    pub fn ty(&self) -> Type {
        match self {
            Value::Int(_) => Type::Int,
            Value::Bool(_) => Type::Boolean,
            Value::Void => Type::Void,
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Void => write!(f, "void"),
        }
    }
}

/// Why an execution stopped with an error. `DivByZero` is the only kind a
/// well-typed program can produce; the others make the interpreter total on
/// arbitrary parser output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RuntimeErrorKind {
    DivByZero,
    TypeMismatch,
    ArityMismatch,
    UnknownMethod,
    UnboundVariable,
    UninitializedVariable,
    CallDepthExceeded,
}

/// Result of one bounded execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Outcome {
    Returned(Value),
    RuntimeError { kind: RuntimeErrorKind, at: NodeId },
    FuelExhausted,
}

impl Outcome {
    /// Outcome comparison for equivalence: returned values must be bitwise
    /// equal, runtime errors must agree on kind (node ids differ across
    /// variants). Fuel exhaustion is handled before this is consulted.
    pub fn matches(&self, other: &Outcome) -> bool {
        match (self, other) {
            (Outcome::Returned(a), Outcome::Returned(b)) => a == b,
            (
                Outcome::RuntimeError { kind: a, .. },
                Outcome::RuntimeError { kind: b, .. },
            ) => a == b,
            (Outcome::FuelExhausted, Outcome::FuelExhausted) => true,
            _ => false,
        }
    }
}

/// Maximum MJ call depth; recursion past this yields a deterministic
/// `CallDepthExceeded` outcome well before the host stack is at risk.
const MAX_CALL_DEPTH: usize = 128;

/// Variable accesses observed during a traced run, recorded by name.
#[derive(Debug, Clone, Default)]
pub struct AccessTrace {
    pub reads: BTreeSet<String>,
    pub writes: BTreeSet<String>,
}

/// Runs `method` on `args` with a step budget. Total: every failure mode is
/// an [`Outcome`], never a panic.
pub fn evaluate(unit: &CompilationUnit, method: &str, args: &[Value], fuel: u64) -> Outcome {
    evaluate_counted(unit, method, args, fuel).0
}

/// Like [`evaluate`], also reporting how much fuel the run consumed.
pub fn evaluate_counted(
    unit: &CompilationUnit,
    method: &str,
    args: &[Value],
    fuel: u64,
) -> (Outcome, u64) {
    let mut interp = Interp {
        unit,
        fuel,
        depth: 0,
        trace: None,
    };
    let outcome = interp.run(method, args);
    (outcome, fuel - interp.fuel)
}

/// Like [`evaluate`], also recording which variable names were read and
/// written. Useful as an independent check of static effect summaries on
/// programs without shadowing.
pub fn evaluate_traced(
    unit: &CompilationUnit,
    method: &str,
    args: &[Value],
    fuel: u64,
) -> (Outcome, AccessTrace) {
    let mut interp = Interp {
        unit,
        fuel,
        depth: 0,
        trace: Some(AccessTrace::default()),
    };
    let outcome = interp.run(method, args);
    (outcome, interp.trace.unwrap_or_default())
}

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Value),
}

enum Halt {
    Error { kind: RuntimeErrorKind, at: NodeId },
    Fuel,
}

impl Halt {
    fn err(kind: RuntimeErrorKind, at: NodeId) -> Halt {
        Halt::Error { kind, at }
    }
}

type Exec = Result<Flow, Halt>;
type Eval = Result<Value, Halt>;

/// One call frame: a stack of block scopes mapping names to slots.
/// `None` marks a declared-but-unassigned local.
struct Frame {
    scopes: Vec<HashMap<String, Option<Value>>>,
}

struct Interp<'a> {
    unit: &'a CompilationUnit,
    fuel: u64,
    depth: usize,
    trace: Option<AccessTrace>,
}

impl<'a> Interp<'a> {
    fn run(&mut self, method: &str, args: &[Value]) -> Outcome {
        match self.call(method, args.to_vec(), NodeId(u32::MAX)) {
            Ok(v) => Outcome::Returned(v),
            Err(Halt::Error { kind, at }) => Outcome::RuntimeError { kind, at },
            Err(Halt::Fuel) => Outcome::FuelExhausted,
        }
    }

    fn spend(&mut self) -> Result<(), Halt> {
        if self.fuel == 0 {
            return Err(Halt::Fuel);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn call(&mut self, name: &str, args: Vec<Value>, at: NodeId) -> Eval {
        let Some(method) = self.unit.method(name) else {
            return Err(Halt::err(RuntimeErrorKind::UnknownMethod, at));
        };
        if args.len() != method.params.len() {
            return Err(Halt::err(RuntimeErrorKind::ArityMismatch, at));
        }
        if self.depth >= MAX_CALL_DEPTH {
            return Err(Halt::err(RuntimeErrorKind::CallDepthExceeded, at));
        }
        let mut frame = Frame {
            scopes: vec![HashMap::new()],
        };
        for (param, value) in method.params.iter().zip(args) {
            if value.ty() != param.ty {
                return Err(Halt::err(RuntimeErrorKind::TypeMismatch, at));
            }
            frame.scopes[0].insert(param.name.clone(), Some(value));
        }
        self.depth += 1;
        let result = self.stmts(&method.body.stmts, &mut frame);
        self.depth -= 1;
        match result? {
            Flow::Return(v) => Ok(v),
            // Falling off the end returns void; `break`/`continue` cannot
            // escape a method body in parser output.
            _ => Ok(Value::Void),
        }
    }

    fn stmts(&mut self, stmts: &[Stmt], frame: &mut Frame) -> Exec {
        for s in stmts {
            match self.stmt(s, frame)? {
                Flow::Normal => {}
                flow => return Ok(flow),
            }
        }
        Ok(Flow::Normal)
    }

    fn scoped_stmts(&mut self, stmts: &[Stmt], frame: &mut Frame) -> Exec {
        frame.scopes.push(HashMap::new());
        let result = self.stmts(stmts, frame);
        frame.scopes.pop();
        result
    }

    fn stmt(&mut self, stmt: &Stmt, frame: &mut Frame) -> Exec {
        self.spend()?;
        match stmt {
            Stmt::VarDecl { name, init, .. } => {
                let value = match init {
                    Some(e) => {
                        let v = self.expr(e, frame)?;
                        self.trace_write(name);
                        Some(v)
                    }
                    None => None,
                };
                frame
                    .scopes
                    .last_mut()
                    .expect("frame always has a scope")
                    .insert(name.clone(), value);
                Ok(Flow::Normal)
            }
            Stmt::Expr { expr, .. } => {
                self.expr(expr, frame)?;
                Ok(Flow::Normal)
            }
            Stmt::If {
                cond,
                then_block,
                else_block,
                ..
            } => {
                let c = self.bool_value(cond, frame)?;
                if c {
                    self.scoped_stmts(&then_block.stmts, frame)
                } else if let Some(b) = else_block {
                    self.scoped_stmts(&b.stmts, frame)
                } else {
                    Ok(Flow::Normal)
                }
            }
            Stmt::While { cond, body, .. } => loop {
                if !self.bool_value(cond, frame)? {
                    return Ok(Flow::Normal);
                }
                match self.scoped_stmts(&body.stmts, frame)? {
                    Flow::Normal | Flow::Continue => {}
                    Flow::Break => return Ok(Flow::Normal),
                    flow @ Flow::Return(_) => return Ok(flow),
                }
            },
            Stmt::For {
                init,
                cond,
                update,
                body,
                ..
            } => {
                // The header scope covers init, cond, update, and body.
                frame.scopes.push(HashMap::new());
                let result = self.for_loop(init, cond, update, body, frame);
                frame.scopes.pop();
                result
            }
            Stmt::Switch {
                scrutinee,
                cases,
                default,
                ..
            } => {
                let v = self.int_value(scrutinee, frame)?;
                // Arms in source order: matching case first, then
                // fall-through into subsequent arms until a break.
                let start = cases.iter().position(|c| c.label == v);
                let mut arms: Vec<&[Stmt]> = Vec::new();
                match start {
                    Some(i) => {
                        for c in &cases[i..] {
                            arms.push(&c.body);
                        }
                        if let Some(d) = default {
                            arms.push(d);
                        }
                    }
                    None => {
                        if let Some(d) = default {
                            arms.push(d);
                        }
                    }
                }
                for arm in arms {
                    match self.scoped_stmts(arm, frame)? {
                        Flow::Normal => {}
                        Flow::Break => return Ok(Flow::Normal),
                        flow => return Ok(flow),
                    }
                }
                Ok(Flow::Normal)
            }
            Stmt::Return { value, .. } => {
                let v = match value {
                    Some(e) => self.expr(e, frame)?,
                    None => Value::Void,
                };
                Ok(Flow::Return(v))
            }
            Stmt::Break { .. } => Ok(Flow::Break),
            Stmt::Continue { .. } => Ok(Flow::Continue),
            Stmt::Block(b) => self.scoped_stmts(&b.stmts, frame),
        }
    }

    fn for_loop(
        &mut self,
        init: &Option<ForInit>,
        cond: &Option<Expr>,
        update: &Option<Expr>,
        body: &Block,
        frame: &mut Frame,
    ) -> Exec {
        match init {
            Some(ForInit::Decl { name, init: e, .. }) => {
                let value = match e {
                    Some(e) => {
                        let v = self.expr(e, frame)?;
                        self.trace_write(name);
                        Some(v)
                    }
                    None => None,
                };
                frame
                    .scopes
                    .last_mut()
                    .unwrap()
                    .insert(name.clone(), value);
            }
            Some(ForInit::Expr { expr, .. }) => {
                self.expr(expr, frame)?;
            }
            None => {}
        }
        loop {
            if let Some(c) = cond {
                if !self.bool_value(c, frame)? {
                    return Ok(Flow::Normal);
                }
            }
            match self.scoped_stmts(&body.stmts, frame)? {
                Flow::Normal | Flow::Continue => {}
                Flow::Break => return Ok(Flow::Normal),
                flow @ Flow::Return(_) => return Ok(flow),
            }
            if let Some(u) = update {
                self.expr(u, frame)?;
            }
        }
    }

    fn bool_value(&mut self, expr: &Expr, frame: &mut Frame) -> Result<bool, Halt> {
        match self.expr(expr, frame)? {
            Value::Bool(b) => Ok(b),
            _ => Err(Halt::err(RuntimeErrorKind::TypeMismatch, expr.id())),
        }
    }

    fn int_value(&mut self, expr: &Expr, frame: &mut Frame) -> Result<i32, Halt> {
        match self.expr(expr, frame)? {
            Value::Int(v) => Ok(v),
            _ => Err(Halt::err(RuntimeErrorKind::TypeMismatch, expr.id())),
        }
    }

    fn read_var(&mut self, name: &str, at: NodeId, frame: &Frame) -> Eval {
        for scope in frame.scopes.iter().rev() {
            if let Some(slot) = scope.get(name) {
                return match slot {
                    Some(v) => {
                        self.trace_read(name);
                        Ok(*v)
                    }
                    None => Err(Halt::err(RuntimeErrorKind::UninitializedVariable, at)),
                };
            }
        }
        Err(Halt::err(RuntimeErrorKind::UnboundVariable, at))
    }

    fn write_var(&mut self, name: &str, value: Value, at: NodeId, frame: &mut Frame) -> Result<(), Halt> {
        for scope in frame.scopes.iter_mut().rev() {
            if let Some(slot) = scope.get_mut(name) {
                *slot = Some(value);
                self.trace_write(name);
                return Ok(());
            }
        }
        Err(Halt::err(RuntimeErrorKind::UnboundVariable, at))
    }

    fn trace_read(&mut self, name: &str) {
        if let Some(t) = &mut self.trace {
            t.reads.insert(name.to_string());
        }
    }

    fn trace_write(&mut self, name: &str) {
        if let Some(t) = &mut self.trace {
            t.writes.insert(name.to_string());
        }
    }

    fn expr(&mut self, expr: &Expr, frame: &mut Frame) -> Eval {
        self.spend()?;
        match expr {
            Expr::IntLit { value, .. } => Ok(Value::Int(*value)),
            Expr::BoolLit { value, .. } => Ok(Value::Bool(*value)),
            Expr::Var { id, name } => self.read_var(name, *id, frame),
            Expr::Unary { id, op, operand } => {
                let v = self.expr(operand, frame)?;
                match (op, v) {
                    (UnaryOp::Neg, Value::Int(v)) => Ok(Value::Int(v.wrapping_neg())),
                    (UnaryOp::Not, Value::Bool(v)) => Ok(Value::Bool(!v)),
                    _ => Err(Halt::err(RuntimeErrorKind::TypeMismatch, *id)),
                }
            }
            Expr::Binary { id, op, lhs, rhs } => {
                // Short-circuit forms do not evaluate the right operand.
                match op {
                    BinaryOp::And => {
                        let l = self.bool_value(lhs, frame)?;
                        if !l {
                            return Ok(Value::Bool(false));
                        }
                        return Ok(Value::Bool(self.bool_value(rhs, frame)?));
                    }
                    BinaryOp::Or => {
                        let l = self.bool_value(lhs, frame)?;
                        if l {
                            return Ok(Value::Bool(true));
                        }
                        return Ok(Value::Bool(self.bool_value(rhs, frame)?));
                    }
                    _ => {}
                }
                let l = self.expr(lhs, frame)?;
                let r = self.expr(rhs, frame)?;
                binary_op(*op, l, r, *id)
            }
            Expr::Assign {
                id,
                target,
                op,
                value,
            } => {
                let Expr::Var { name, id: var_id } = target.as_ref() else {
                    return Err(Halt::err(RuntimeErrorKind::TypeMismatch, *id));
                };
                let rhs = self.expr(value, frame)?;
                let result = match op.binary_op() {
                    None => rhs,
                    Some(bin) => {
                        let old = self.read_var(name, *var_id, frame)?;
                        binary_op(bin, old, rhs, *id)?
                    }
                };
                self.write_var(name, result, *id, frame)?;
                Ok(result)
            }
            Expr::IncDec {
                id,
                target,
                op,
                prefix,
            } => {
                let Expr::Var { name, id: var_id } = target.as_ref() else {
                    return Err(Halt::err(RuntimeErrorKind::TypeMismatch, *id));
                };
                let old = match self.read_var(name, *var_id, frame)? {
                    Value::Int(v) => v,
                    _ => return Err(Halt::err(RuntimeErrorKind::TypeMismatch, *id)),
                };
                let new = match op {
                    IncDecOp::Inc => old.wrapping_add(1),
                    IncDecOp::Dec => old.wrapping_sub(1),
                };
                self.write_var(name, Value::Int(new), *id, frame)?;
                Ok(Value::Int(if *prefix { new } else { old }))
            }
            Expr::Call { id, callee, args } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.expr(a, frame)?);
                }
                self.call(callee, values, *id)
            }
        }
    }
}

/// Java `int` operator semantics: wrapping arithmetic, truncating division,
/// remainder sign following the dividend, `INT_MIN / -1 == INT_MIN`,
/// `INT_MIN % -1 == 0`.
fn binary_op(op: BinaryOp, l: Value, r: Value, at: NodeId) -> Eval {
    use BinaryOp::*;
    match (l, r) {
        (Value::Int(a), Value::Int(b)) => match op {
            Add => Ok(Value::Int(a.wrapping_add(b))),
            Sub => Ok(Value::Int(a.wrapping_sub(b))),
            Mul => Ok(Value::Int(a.wrapping_mul(b))),
            Div => {
                if b == 0 {
                    Err(Halt::err(RuntimeErrorKind::DivByZero, at))
                } else {
                    Ok(Value::Int(a.wrapping_div(b)))
                }
            }
            Rem => {
                if b == 0 {
                    Err(Halt::err(RuntimeErrorKind::DivByZero, at))
                } else {
                    Ok(Value::Int(a.wrapping_rem(b)))
                }
            }
            Lt => Ok(Value::Bool(a < b)),
            Le => Ok(Value::Bool(a <= b)),
            Gt => Ok(Value::Bool(a > b)),
            Ge => Ok(Value::Bool(a >= b)),
            Eq => Ok(Value::Bool(a == b)),
            Ne => Ok(Value::Bool(a != b)),
            And | Or => Err(Halt::err(RuntimeErrorKind::TypeMismatch, at)),
        },
        (Value::Bool(a), Value::Bool(b)) => match op {
            Eq => Ok(Value::Bool(a == b)),
            Ne => Ok(Value::Bool(a != b)),
            // And/Or are handled before operand evaluation.
            _ => Err(Halt::err(RuntimeErrorKind::TypeMismatch, at)),
        },
        _ => Err(Halt::err(RuntimeErrorKind::TypeMismatch, at)),
    }
}

/// Boundary values every int parameter is driven through.
pub const INT_BOUNDARY_VALUES: [i32; 10] =
    [i32::MIN, -100, -2, -1, 0, 1, 2, 7, 100, i32::MAX];

/// Generates `n` argument vectors for a parameter signature.
///
/// Even-indexed trials cycle ints through [`INT_BOUNDARY_VALUES`] and
/// alternate booleans, so every boundary value appears once the trial count
/// reaches 20; odd-indexed trials sample ints uniformly from
/// `[-1000, 1000]` and booleans uniformly. Deterministic in
/// `(signature, seed, n)`.
pub fn gen_inputs(signature: &[Type], seed: u64, n: usize) -> Vec<Vec<Value>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::with_capacity(n);
    for i in 0..n {
        let mut args = Vec::with_capacity(signature.len());
        for (j, ty) in signature.iter().enumerate() {
            let value = match ty {
                Type::Int => {
                    if i % 2 == 0 {
                        Value::Int(INT_BOUNDARY_VALUES[(i / 2 + j) % INT_BOUNDARY_VALUES.len()])
                    } else {
                        Value::Int(rng.gen_range(-1000..=1000))
                    }
                }
                Type::Boolean => {
                    if i % 2 == 0 {
                        Value::Bool((i / 2 + j) % 2 == 0)
                    } else {
                        Value::Bool(rng.gen())
                    }
                }
                Type::Void => Value::Void,
            };
            args.push(value);
        }
        trials.push(args);
    }
    trials
}

/// One differential trial: the arguments and both outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Trial {
    pub args: Vec<Value>,
    pub outcome_original: Outcome,
    pub outcome_variant: Outcome,
}

/// Differential verdict over a set of trials.
#[derive(Debug, Clone, PartialEq)]
pub enum EquivalenceVerdict {
    /// Every trial completed on both sides and matched.
    Equivalent,
    /// Some completed trial disagreed; carries the first such trial.
    Divergent(Trial),
    /// No disagreement, but this many trials hit the fuel limit on at least
    /// one side and prove nothing.
    Inconclusive(usize),
}

impl EquivalenceVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivalenceVerdict::Equivalent)
    }
}

/// Ways a differential check can be set up incorrectly.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ContractError {
    #[error("method `{0}` not found in {1}")]
    MethodMissing(String, &'static str),
    #[error("method `{0}` has different signatures in the two units")]
    SignatureMismatch(String),
    #[error("exhaustive domain of {0} inputs exceeds the cap of {1}")]
    DomainTooLarge(u64, u64),
}

fn signature_of<'u>(
    unit: &'u CompilationUnit,
    method: &str,
    side: &'static str,
) -> Result<(&'u MethodDecl, Vec<Type>), ContractError> {
    let decl = unit
        .method(method)
        .ok_or_else(|| ContractError::MethodMissing(method.to_string(), side))?;
    Ok((decl, decl.params.iter().map(|p| p.ty).collect()))
}

/// Runs `trials` generated inputs through `method` in both units and compares
/// outcomes. Trials run in input order, so the first divergent trial is
/// deterministic.
pub fn check_equivalence(
    original: &CompilationUnit,
    variant: &CompilationUnit,
    method: &str,
    trials: usize,
    seed: u64,
    fuel: u64,
) -> Result<EquivalenceVerdict, ContractError> {
    let (orig_decl, orig_sig) = signature_of(original, method, "the original unit")?;
    let (var_decl, var_sig) = signature_of(variant, method, "the variant unit")?;
    if orig_sig != var_sig || orig_decl.return_type != var_decl.return_type {
        return Err(ContractError::SignatureMismatch(method.to_string()));
    }
    let inputs = gen_inputs(&orig_sig, seed, trials);
    run_trials(original, variant, method, inputs.into_iter(), fuel)
}

/// Differential check over the full input domain: booleans exhaustively,
/// ints over `int_range` inclusive. Intended for methods with small
/// signatures; refuses domains beyond `1 << 20` inputs.
pub fn exhaustive_equivalence(
    original: &CompilationUnit,
    variant: &CompilationUnit,
    method: &str,
    int_range: (i32, i32),
    fuel: u64,
) -> Result<EquivalenceVerdict, ContractError> {
    const CAP: u64 = 1 << 20;
    let (orig_decl, orig_sig) = signature_of(original, method, "the original unit")?;
    let (var_decl, var_sig) = signature_of(variant, method, "the variant unit")?;
    if orig_sig != var_sig || orig_decl.return_type != var_decl.return_type {
        return Err(ContractError::SignatureMismatch(method.to_string()));
    }
    let (lo, hi) = int_range;
    let int_count = (hi as i64 - lo as i64 + 1).max(0) as u64;
    let mut total: u64 = 1;
    for ty in &orig_sig {
        let per = match ty {
            Type::Int => int_count,
            Type::Boolean => 2,
            Type::Void => 1,
        };
        total = total.saturating_mul(per);
        if total > CAP {
            return Err(ContractError::DomainTooLarge(total, CAP));
        }
    }
    let domains: Vec<Vec<Value>> = orig_sig
        .iter()
        .map(|ty| match ty {
            Type::Int => (lo..=hi).map(Value::Int).collect(),
            Type::Boolean => vec![Value::Bool(false), Value::Bool(true)],
            Type::Void => vec![Value::Void],
        })
        .collect();
    let inputs = cartesian(&domains);
    run_trials(original, variant, method, inputs.into_iter(), fuel)
}

fn cartesian(domains: &[Vec<Value>]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for domain in domains {
        let mut next = Vec::with_capacity(out.len() * domain.len());
        for prefix in &out {
            for v in domain {
                let mut args = prefix.clone();
                args.push(*v);
                next.push(args);
            }
        }
        out = next;
    }
    out
}

fn run_trials(
    original: &CompilationUnit,
    variant: &CompilationUnit,
    method: &str,
    inputs: impl Iterator<Item = Vec<Value>>,
    fuel: u64,
) -> Result<EquivalenceVerdict, ContractError> {
    let mut fuel_exhausted = 0usize;
    for args in inputs {
        let o = evaluate(original, method, &args, fuel);
        let v = evaluate(variant, method, &args, fuel);
        if o == Outcome::FuelExhausted || v == Outcome::FuelExhausted {
            fuel_exhausted += 1;
            continue;
        }
        if !o.matches(&v) {
            return Ok(EquivalenceVerdict::Divergent(Trial {
                args,
                outcome_original: o,
                outcome_variant: v,
            }));
        }
    }
    if fuel_exhausted > 0 {
        Ok(EquivalenceVerdict::Inconclusive(fuel_exhausted))
    } else {
        Ok(EquivalenceVerdict::Equivalent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_source;

    const IS_PRIME_FOR: &str = "boolean isPrime(int n) {\n    if (n < 2) {\n        return false;\n    }\n    for (int i = 2; i * i <= n; i++) {\n        if (n % i == 0) {\n            return false;\n        }\n    }\n    return true;\n}\n";

    fn eval_src(src: &str, method: &str, args: &[Value]) -> Outcome {
        let unit = parse_source(src).unwrap();
        evaluate(&unit, method, args, 100_000)
    }

    #[test]
    fn is_prime_basics() {
        let unit = parse_source(IS_PRIME_FOR).unwrap();
        assert_eq!(
            evaluate(&unit, "isPrime", &[Value::Int(7)], 100_000),
            Outcome::Returned(Value::Bool(true))
        );
        assert_eq!(
            evaluate(&unit, "isPrime", &[Value::Int(9)], 100_000),
            Outcome::Returned(Value::Bool(false))
        );
        assert_eq!(
            evaluate(&unit, "isPrime", &[Value::Int(1)], 100_000),
            Outcome::Returned(Value::Bool(false))
        );
    }

    #[test]
    fn division_by_zero() {
        match eval_src("int f(){ return 1 / 0; }", "f", &[]) {
            Outcome::RuntimeError { kind, .. } => assert_eq!(kind, RuntimeErrorKind::DivByZero),
            other => panic!("unexpected {other:?}"),
        }
        match eval_src("int f(int x){ x %= 0; return x; }", "f", &[Value::Int(3)]) {
            Outcome::RuntimeError { kind, .. } => assert_eq!(kind, RuntimeErrorKind::DivByZero),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nontermination_exhausts_fuel() {
        let unit = parse_source("void f(){ while(true){} }").unwrap();
        assert_eq!(evaluate(&unit, "f", &[], 1000), Outcome::FuelExhausted);
    }

    #[test]
    fn java_int_arithmetic_edge_cases() {
        // (expression, expected) table, checked against Java semantics.
        let cases: &[(&str, i32)] = &[
            ("return -2147483648 / -1;", i32::MIN),
            ("return -2147483648 % -1;", 0),
            ("return 2147483647 + 1;", i32::MIN),
            ("return -2147483648 - 1;", i32::MAX),
            ("return 65536 * 65536;", 0),
            ("return 100000 * 100000;", 1410065408),
            ("return -7 / 2;", -3),
            ("return 7 / -2;", -3),
            ("return -7 % 2;", -1),
            ("return 7 % -2;", 1),
            ("return -(-2147483648);", i32::MIN),
        ];
        for (body, expected) in cases {
            let src = format!("int f() {{ {body} }}");
            assert_eq!(
                eval_src(&src, "f", &[]),
                Outcome::Returned(Value::Int(*expected)),
                "for {body}"
            );
        }
    }

    #[test]
    fn short_circuit_evaluation() {
        assert_eq!(
            eval_src("boolean f(){ return false && 1 / 0 == 0; }", "f", &[]),
            Outcome::Returned(Value::Bool(false))
        );
        assert_eq!(
            eval_src("boolean f(){ return true || 1 / 0 == 0; }", "f", &[]),
            Outcome::Returned(Value::Bool(true))
        );
    }

    #[test]
    fn switch_falls_through_without_break() {
        let src = "int f(int x){ int r = 0; switch(x){ case 0: r = r + 1; case 1: r = r + 10; break; case 2: r = r + 100; } return r; }";
        assert_eq!(eval_src(src, "f", &[Value::Int(0)]), Outcome::Returned(Value::Int(11)));
        assert_eq!(eval_src(src, "f", &[Value::Int(1)]), Outcome::Returned(Value::Int(10)));
        assert_eq!(eval_src(src, "f", &[Value::Int(2)]), Outcome::Returned(Value::Int(100)));
        assert_eq!(eval_src(src, "f", &[Value::Int(5)]), Outcome::Returned(Value::Int(0)));
    }

    #[test]
    fn switch_falls_through_into_default() {
        let src = "int f(int x){ int r = 0; switch(x){ case 0: r = r + 1; default: r = r + 10; } return r; }";
        assert_eq!(eval_src(src, "f", &[Value::Int(0)]), Outcome::Returned(Value::Int(11)));
        assert_eq!(eval_src(src, "f", &[Value::Int(9)]), Outcome::Returned(Value::Int(10)));
    }

    #[test]
    fn continue_in_for_runs_update() {
        let src = "int f(){ int s = 0; for (int i = 0; i < 5; i++) { if (i % 2 == 0) { continue; } s += i; } return s; }";
        assert_eq!(eval_src(src, "f", &[]), Outcome::Returned(Value::Int(4)));
    }

    #[test]
    fn continue_in_while_rechecks_condition() {
        let src = "int f(){ int i = 0; int s = 0; while (i < 5) { i++; if (i == 3) { continue; } s += i; } return s; }";
        assert_eq!(eval_src(src, "f", &[]), Outcome::Returned(Value::Int(12)));
    }

    #[test]
    fn break_exits_innermost_loop_only() {
        let src = "int f(){ int s = 0; for (int i = 0; i < 3; i++) { for (int j = 0; j < 10; j++) { if (j == 2) { break; } s++; } } return s; }";
        assert_eq!(eval_src(src, "f", &[]), Outcome::Returned(Value::Int(6)));
    }

    #[test]
    fn recursion_works_and_depth_is_bounded() {
        let src = "int fact(int n){ if (n <= 1) { return 1; } return n * fact(n - 1); }";
        assert_eq!(eval_src(src, "fact", &[Value::Int(10)]), Outcome::Returned(Value::Int(3628800)));
        match eval_src(src, "fact", &[Value::Int(100000)]) {
            Outcome::RuntimeError { kind, .. } => {
                assert_eq!(kind, RuntimeErrorKind::CallDepthExceeded)
            }
            Outcome::FuelExhausted => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn assignment_yields_the_assigned_value() {
        let src = "int f(){ int a = 0; int b = 0; a = b = 5; return a + b; }";
        assert_eq!(eval_src(src, "f", &[]), Outcome::Returned(Value::Int(10)));
    }

    #[test]
    fn prefix_and_postfix_incdec_values() {
        let src = "int f(){ int i = 1; int a = i++; int b = ++i; int c = i--; int d = --i; return a * 1000 + b * 100 + c * 10 + d; }";
        // a=1 (i=2), b=3 (i=3), c=3 (i=2), d=1 (i=1)
        assert_eq!(eval_src(src, "f", &[]), Outcome::Returned(Value::Int(1331)));
    }

    #[test]
    fn uninitialized_read_is_an_error() {
        match eval_src("int f(){ int x; return x; }", "f", &[]) {
            Outcome::RuntimeError { kind, .. } => {
                assert_eq!(kind, RuntimeErrorKind::UninitializedVariable)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn void_fall_off_returns_void() {
        assert_eq!(eval_src("void f(){ int x = 1; }", "f", &[]), Outcome::Returned(Value::Void));
    }

    #[test]
    fn evaluate_is_deterministic_including_fuel() {
        let unit = parse_source(IS_PRIME_FOR).unwrap();
        let (o1, f1) = evaluate_counted(&unit, "isPrime", &[Value::Int(997)], 100_000);
        let (o2, f2) = evaluate_counted(&unit, "isPrime", &[Value::Int(997)], 100_000);
        assert_eq!(o1, o2);
        assert_eq!(f1, f2);
        assert_eq!(o1, Outcome::Returned(Value::Bool(true)));
    }

    #[test]
    fn gen_inputs_shape_and_determinism() {
        let sig = [Type::Int];
        let a = gen_inputs(&sig, 42, 10);
        let b = gen_inputs(&sig, 42, 10);
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        assert!(a.iter().all(|args| args.len() == 1));
        let has_boundary = a
            .iter()
            .any(|args| matches!(args[0], Value::Int(v) if INT_BOUNDARY_VALUES.contains(&v)));
        assert!(has_boundary);

        let nullary = gen_inputs(&[], 1, 5);
        assert_eq!(nullary, vec![Vec::new(); 5]);

        // 20 even-indexed trials cover the whole boundary set.
        let many = gen_inputs(&sig, 3, 40);
        for boundary in INT_BOUNDARY_VALUES {
            assert!(
                many.iter().any(|args| args[0] == Value::Int(boundary)),
                "missing boundary {boundary}"
            );
        }
    }

    #[test]
    fn gen_inputs_booleans_alternate_on_even_trials() {
        let sig = [Type::Boolean];
        let inputs = gen_inputs(&sig, 9, 8);
        assert_eq!(inputs[0][0], Value::Bool(true));
        assert_eq!(inputs[2][0], Value::Bool(false));
        assert_eq!(inputs[4][0], Value::Bool(true));
        assert_eq!(inputs[6][0], Value::Bool(false));
    }

    #[test]
    fn check_equivalence_reflexive() {
        let unit = parse_source("int f(int a, int b){ return a * b + a % (b * b + 1); }").unwrap();
        let verdict = check_equivalence(&unit, &unit, "f", 64, 1, 100_000).unwrap();
        assert_eq!(verdict, EquivalenceVerdict::Equivalent);
    }

    #[test]
    fn check_equivalence_flags_a_semantic_difference() {
        let a = parse_source("boolean f(int x){ return x < 7; }").unwrap();
        let b = parse_source("boolean f(int x){ return x <= 7; }").unwrap();
        match check_equivalence(&a, &b, "f", 64, 1, 100_000).unwrap() {
            EquivalenceVerdict::Divergent(trial) => {
                assert_eq!(trial.args, vec![Value::Int(7)]);
                assert_eq!(trial.outcome_original, Outcome::Returned(Value::Bool(false)));
                assert_eq!(trial.outcome_variant, Outcome::Returned(Value::Bool(true)));
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn check_equivalence_rejects_signature_mismatch() {
        let a = parse_source("int f(int x){ return x; }").unwrap();
        let b = parse_source("int f(boolean x){ return 1; }").unwrap();
        assert!(matches!(
            check_equivalence(&a, &b, "f", 8, 1, 1000),
            Err(ContractError::SignatureMismatch(_))
        ));
        let c = parse_source("int g(int x){ return x; }").unwrap();
        assert!(matches!(
            check_equivalence(&a, &c, "f", 8, 1, 1000),
            Err(ContractError::MethodMissing(..))
        ));
    }

    #[test]
    fn fuel_exhaustion_makes_trials_inconclusive() {
        let a = parse_source("int f(int x){ while (x == 0) {} return x; }").unwrap();
        match check_equivalence(&a, &a, "f", 64, 1, 1000).unwrap() {
            EquivalenceVerdict::Inconclusive(count) => assert!(count > 0),
            other => panic!("expected inconclusive, got {other:?}"),
        }
    }

    #[test]
    fn exhaustive_small_domain_check() {
        let a = parse_source("int f(int x, boolean b){ if (b) { return x * 2; } return x; }").unwrap();
        let b = parse_source("int f(int x, boolean b){ if (!b) { return x; } return x + x; }").unwrap();
        let verdict = exhaustive_equivalence(&a, &b, "f", (-8, 8), 100_000).unwrap();
        assert_eq!(verdict, EquivalenceVerdict::Equivalent);

        let c = parse_source("int f(int x, boolean b){ if (b) { return x * 2; } return x - 1; }").unwrap();
        assert!(matches!(
            exhaustive_equivalence(&a, &c, "f", (-8, 8), 100_000).unwrap(),
            EquivalenceVerdict::Divergent(_)
        ));
    }

    #[test]
    fn exhaustive_check_refuses_large_domains() {
        let a = parse_source("int f(int x, int y){ return x + y; }").unwrap();
        assert!(matches!(
            exhaustive_equivalence(&a, &a, "f", (i32::MIN, i32::MAX), 1000),
            Err(ContractError::DomainTooLarge(..))
        ));
    }

    #[test]
    fn traced_accesses_are_recorded() {
        let unit = parse_source("int f(int a, int b){ int c = a + 1; c += b; return c; }").unwrap();
        let (outcome, trace) =
            evaluate_traced(&unit, "f", &[Value::Int(1), Value::Int(2)], 10_000);
        assert_eq!(outcome, Outcome::Returned(Value::Int(4)));
        assert!(trace.reads.contains("a"));
        assert!(trace.reads.contains("b"));
        assert!(trace.reads.contains("c"));
        assert!(trace.writes.contains("c"));
        assert!(!trace.writes.contains("a"));
    }
}
