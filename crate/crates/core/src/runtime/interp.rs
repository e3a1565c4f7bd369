//! Tree-walking interpreter that records a line-level execution trace.
//!
//! Every user function is traced. Locals are diffed by repr after each
//! statement and each compound-statement header; a change becomes a
//! `VarUpdate`. When a nested traced call returns, the caller's current
//! line is emitted again before its next update or return, mirroring how a
//! line tracer reports a frame resuming mid-line.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::builtins::{call_builtin, call_method};
use super::ops::{self, err, type_error, Halt, Res, SizeGuard};
use super::trace::{BudgetKind, ExecutionTrace, Outcome, TraceEvent};
use super::value::{repr_value, Bindings, Value};
use crate::lang::ast::{BinOp, BoolOp, Expr, ExprKind, Function, Stmt, StmtKind, Target, UnaryOp};
use crate::lang::{LineNo, SourceProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecutionLimits {
    /// Maximum number of line events.
    pub max_steps: u64,
    pub max_call_depth: usize,
    pub max_collection_size: usize,
    pub wall_clock_ms: Option<u64>,
}

impl Default for ExecutionLimits {
    fn default() -> Self {
        ExecutionLimits { max_steps: 100_000, max_call_depth: 1000, max_collection_size: 100_000, wall_clock_ms: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InputError {
    #[error("missing input for parameter '{0}'")]
    MissingArgument(String),
    #[error("input '{0}' does not match any parameter of the entry function")]
    UnexpectedArgument(String),
}

#[derive(Debug, Clone)]
pub struct Execution {
    /// Return value of the entry function, when it completed.
    pub value: Option<Value>,
    pub trace: ExecutionTrace,
}

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Value),
}

struct Frame {
    locals: IndexMap<String, Value>,
    snapshot: IndexMap<String, String>,
    current_line: LineNo,
    interrupted: bool,
    depth: usize,
}

struct Interp<'p> {
    program: &'p SourceProgram,
    functions: HashMap<&'p str, &'p Function>,
    defaults: HashMap<&'p str, Vec<Option<Value>>>,
    globals: IndexMap<String, Value>,
    frames: Vec<Frame>,
    events: Vec<TraceEvent>,
    steps: u64,
    limits: ExecutionLimits,
    guard: SizeGuard,
    deadline: Option<Instant>,
    tracing: bool,
    fault_line: Option<LineNo>,
}

fn deep_copy(v: &Value) -> Value {
    match v {
        Value::Sequence(items) => Value::seq(items.borrow().iter().map(deep_copy).collect()),
        Value::Tuple(items) => Value::tuple(items.iter().map(deep_copy).collect()),
        Value::Mapping(m) => Value::mapping(m.borrow().iter().map(|(k, v)| (k.clone(), deep_copy(v))).collect()),
        other => other.clone(),
    }
}

/// Runs the entry function of `program` on `inputs`.
///
/// Runtime faults and budget overruns are not errors here: they end the
/// trace and are reported through its outcome. Only inputs that cannot be
/// bound to the entry signature are rejected up front.
pub fn execute(program: &SourceProgram, inputs: &Bindings, limits: &ExecutionLimits) -> Result<Execution, InputError> {
    let entry = program.entry();
    for name in inputs.keys() {
        if !entry.params.iter().any(|p| &p.name == name) {
            return Err(InputError::UnexpectedArgument(name.clone()));
        }
    }
    if let Some(p) = entry.params.iter().find(|p| p.default.is_none() && !inputs.contains_key(&p.name)) {
        return Err(InputError::MissingArgument(p.name.clone()));
    }

    let mut it = Interp {
        program,
        functions: program.ast.functions().map(|f| (f.name.as_str(), f)).collect(),
        defaults: HashMap::new(),
        globals: IndexMap::new(),
        frames: Vec::new(),
        events: Vec::new(),
        steps: 0,
        limits: *limits,
        guard: SizeGuard { max_len: limits.max_collection_size },
        deadline: limits.wall_clock_ms.map(|ms| Instant::now() + Duration::from_millis(ms)),
        tracing: false,
        fault_line: None,
    };

    let result = it.initialize().and_then(|()| {
        it.steps = 0;
        it.tracing = true;
        let kwargs = inputs.iter().map(|(k, v)| (k.clone(), deep_copy(v))).collect();
        it.call_user(entry, vec![], kwargs)
    });

    let (value, outcome) = match result {
        Ok(v) => {
            let r = repr_value(&v);
            (Some(v), Outcome::Completed(r))
        }
        Err(Halt::Error(msg)) => {
            let msg = match it.fault_line {
                Some(line) => format!("{msg} (line {line})"),
                None => msg,
            };
            (None, Outcome::RuntimeError(msg))
        }
        Err(Halt::Budget(kind)) => (None, Outcome::BudgetExceeded(kind)),
    };
    Ok(Execution { value, trace: ExecutionTrace { events: it.events, step_count: it.steps, outcome } })
}

impl<'p> Interp<'p> {
    /// Evaluates parameter defaults and top-level constants, untraced.
    fn initialize(&mut self) -> Res<()> {
        for stmt in &self.program.ast.body {
            match &stmt.kind {
                StmtKind::FunctionDef(f) => {
                    let mut values = Vec::with_capacity(f.params.len());
                    for p in &f.params {
                        values.push(match &p.default {
                            Some(e) => Some(self.eval(e)?),
                            None => None,
                        });
                    }
                    self.defaults.insert(f.name.as_str(), values);
                }
                StmtKind::Assign { .. } | StmtKind::AugAssign { .. } => {
                    if let Err(e) = self.exec_stmt(stmt) {
                        self.fault_line.get_or_insert(stmt.line);
                        return Err(e);
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn frame(&mut self) -> Option<&mut Frame> {
        self.frames.last_mut()
    }

    fn count_step(&mut self) -> Res<()> {
        if self.steps >= self.limits.max_steps {
            return Err(Halt::Budget(BudgetKind::Steps));
        }
        self.steps += 1;
        if let Some(deadline) = self.deadline {
            if self.steps.is_multiple_of(256) && Instant::now() > deadline {
                return Err(Halt::Budget(BudgetKind::WallClock));
            }
        }
        Ok(())
    }

    fn push_line(&mut self, line: LineNo, depth: usize) {
        if self.tracing {
            let source_text = self.program.line_text(line).to_string();
            self.events.push(TraceEvent::Line { line_number: line, source_text, depth });
        }
    }

    fn emit_line(&mut self, line: LineNo) -> Res<()> {
        self.count_step()?;
        let Some(frame) = self.frames.last_mut() else {
            return Ok(());
        };
        frame.current_line = line;
        frame.interrupted = false;
        let depth = frame.depth;
        self.push_line(line, depth);
        Ok(())
    }

    /// Re-emits the current line if a nested call ran since it was emitted.
    fn resume_if_interrupted(&mut self) -> Res<()> {
        let Some(frame) = self.frames.last() else {
            return Ok(());
        };
        if frame.interrupted {
            let line = frame.current_line;
            self.emit_line(line)?;
        }
        Ok(())
    }

    fn flush_updates(&mut self) -> Res<()> {
        let Some(frame) = self.frames.last() else {
            return Ok(());
        };
        let changed: Vec<(String, String)> = frame
            .locals
            .iter()
            .filter_map(|(name, v)| {
                let r = repr_value(v);
                (frame.snapshot.get(name) != Some(&r)).then(|| (name.clone(), r))
            })
            .collect();
        if changed.is_empty() {
            return Ok(());
        }
        self.resume_if_interrupted()?;
        let frame = self.frames.last_mut().expect("checked above");
        let depth = frame.depth;
        for (name, r) in changed {
            frame.snapshot.insert(name.clone(), r.clone());
            if self.tracing {
                self.events.push(TraceEvent::VarUpdate { name, value_repr: r, depth });
            }
        }
        Ok(())
    }

    fn call_user(&mut self, f: &'p Function, args: Vec<Value>, kwargs: Vec<(String, Value)>) -> Res<Value> {
        let name = f.name.as_str();
        if args.len() > f.params.len() {
            return type_error(format!(
                "{name}() takes {} positional arguments but {} were given",
                f.params.len(),
                args.len()
            ));
        }
        let mut slots: Vec<Option<Value>> = vec![None; f.params.len()];
        for (i, a) in args.into_iter().enumerate() {
            slots[i] = Some(a);
        }
        for (k, v) in kwargs {
            let Some(i) = f.params.iter().position(|p| p.name == k) else {
                return type_error(format!("{name}() got an unexpected keyword argument '{k}'"));
            };
            if slots[i].is_some() {
                return type_error(format!("{name}() got multiple values for argument '{k}'"));
            }
            slots[i] = Some(v);
        }
        let mut locals = IndexMap::with_capacity(f.params.len());
        for (i, p) in f.params.iter().enumerate() {
            let v = match slots[i].take() {
                Some(v) => v,
                None => match self.defaults.get(name).and_then(|d| d[i].clone()) {
                    Some(v) => v,
                    None => return type_error(format!("{name}() missing required argument: '{}'", p.name)),
                },
            };
            locals.insert(p.name.clone(), v);
        }

        if self.frames.len() >= self.limits.max_call_depth {
            return Err(Halt::Budget(BudgetKind::CallDepth));
        }
        let depth = self.frames.len();
        let snapshot: IndexMap<String, String> = locals.iter().map(|(k, v)| (k.clone(), repr_value(v))).collect();
        if self.tracing {
            let args = snapshot.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
            self.events.push(TraceEvent::Call { function_name: f.name.clone(), args, depth });
        }
        self.frames.push(Frame { locals, snapshot, current_line: f.line, interrupted: false, depth });

        let result = stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || {
            self.emit_line(f.line)?;
            let value = match self.exec_block(&f.body)? {
                Flow::Return(v) => v,
                _ => Value::None,
            };
            self.flush_updates()?;
            self.resume_if_interrupted()?;
            Ok(value)
        });

        let frame = self.frames.pop().expect("pushed above");
        match result {
            Ok(value) => {
                if self.tracing {
                    self.events.push(TraceEvent::Return {
                        function_name: f.name.clone(),
                        value_repr: repr_value(&value),
                        depth,
                    });
                }
                if let Some(parent) = self.frame() {
                    parent.interrupted = true;
                }
                Ok(value)
            }
            Err(e) => {
                self.fault_line.get_or_insert(frame.current_line);
                Err(e)
            }
        }
    }

    fn exec_block(&mut self, body: &'p [Stmt]) -> Res<Flow> {
        for stmt in body {
            match self.exec_stmt(stmt)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_stmt(&mut self, stmt: &'p Stmt) -> Res<Flow> {
        match &stmt.kind {
            StmtKind::FunctionDef(_) | StmtKind::Import { .. } => Ok(Flow::Normal),
            StmtKind::If { branches, orelse } => {
                for b in branches {
                    self.emit_line(b.line)?;
                    let cond = self.eval(&b.cond)?.truthy();
                    self.flush_updates()?;
                    if cond {
                        return self.exec_block(&b.body);
                    }
                }
                self.exec_block(orelse)
            }
            StmtKind::While { cond, body } => loop {
                self.emit_line(stmt.line)?;
                let go = self.eval(cond)?.truthy();
                self.flush_updates()?;
                if !go {
                    return Ok(Flow::Normal);
                }
                match self.exec_block(body)? {
                    Flow::Break => return Ok(Flow::Normal),
                    r @ Flow::Return(_) => return Ok(r),
                    Flow::Normal | Flow::Continue => {}
                }
            },
            StmtKind::For { target, iter, body } => {
                self.emit_line(stmt.line)?;
                let items = ops::iterate(&self.eval(iter)?)?;
                self.flush_updates()?;
                for (i, item) in items.into_iter().enumerate() {
                    if i > 0 {
                        self.emit_line(stmt.line)?;
                    }
                    self.assign(target, item)?;
                    self.flush_updates()?;
                    match self.exec_block(body)? {
                        Flow::Break => return Ok(Flow::Normal),
                        r @ Flow::Return(_) => return Ok(r),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
                self.emit_line(stmt.line)?;
                Ok(Flow::Normal)
            }
            simple => {
                // top-level constants run with no frame and no line events
                if !self.frames.is_empty() {
                    self.emit_line(stmt.line)?;
                }
                let flow = match simple {
                    StmtKind::Assign { targets, value } => {
                        let v = self.eval(value)?;
                        for t in targets {
                            self.assign(t, v.clone())?;
                        }
                        Flow::Normal
                    }
                    StmtKind::AugAssign { target, op, value } => {
                        self.aug_assign(target, *op, value)?;
                        Flow::Normal
                    }
                    StmtKind::Expr(e) => {
                        self.eval(e)?;
                        Flow::Normal
                    }
                    StmtKind::Return(e) => {
                        // the caller flushes before emitting the return event
                        return Ok(Flow::Return(match e {
                            Some(e) => self.eval(e)?,
                            None => Value::None,
                        }));
                    }
                    StmtKind::Break => Flow::Break,
                    StmtKind::Continue => Flow::Continue,
                    _ => Flow::Normal,
                };
                self.flush_updates()?;
                Ok(flow)
            }
        }
    }

    fn bind_name(&mut self, name: &str, v: Value) {
        match self.frames.last_mut() {
            Some(frame) => frame.locals.insert(name.to_string(), v),
            None => self.globals.insert(name.to_string(), v),
        };
    }

    fn assign(&mut self, target: &'p Target, v: Value) -> Res<()> {
        match target {
            Target::Name(n) => {
                self.bind_name(n, v);
                Ok(())
            }
            Target::Index { obj, index } => {
                let o = self.eval(obj)?;
                let i = self.eval(index)?;
                ops::set_index(&o, &i, v, self.guard)
            }
            Target::Tuple(parts) => {
                let items = ops::iterate(&v)?;
                if items.len() != parts.len() {
                    return if items.len() > parts.len() {
                        err(format!("ValueError: too many values to unpack (expected {})", parts.len()))
                    } else {
                        err(format!(
                            "ValueError: not enough values to unpack (expected {}, got {})",
                            parts.len(),
                            items.len()
                        ))
                    };
                }
                for (t, item) in parts.iter().zip(items) {
                    self.assign(t, item)?;
                }
                Ok(())
            }
        }
    }

    fn aug_assign(&mut self, target: &'p Target, op: BinOp, value: &'p Expr) -> Res<()> {
        let combine = |it: &Self, current: Value, rhs: Value| -> Res<Value> {
            // list += iterable extends in place, so aliases observe the change
            if let (BinOp::Add, Value::Sequence(items)) = (op, &current) {
                let more = ops::iterate(&rhs)?;
                let len = items.borrow().len();
                it.guard.check(len + more.len())?;
                items.borrow_mut().extend(more);
                return Ok(current);
            }
            ops::binary(op, &current, &rhs, it.guard)
        };
        match target {
            Target::Name(n) => {
                let current = self.lookup(n)?;
                let rhs = self.eval(value)?;
                let v = combine(self, current, rhs)?;
                self.bind_name(n, v);
                Ok(())
            }
            Target::Index { obj, index } => {
                let o = self.eval(obj)?;
                let i = self.eval(index)?;
                let current = ops::index(&o, &i)?;
                let rhs = self.eval(value)?;
                let v = combine(self, current, rhs)?;
                ops::set_index(&o, &i, v, self.guard)
            }
            Target::Tuple(_) => err("SyntaxError: illegal expression for augmented assignment"),
        }
    }

    fn lookup(&self, name: &str) -> Res<Value> {
        if let Some(v) = self.frames.last().and_then(|f| f.locals.get(name)) {
            return Ok(v.clone());
        }
        if let Some(v) = self.globals.get(name) {
            return Ok(v.clone());
        }
        err(format!("NameError: name '{name}' is not defined"))
    }

    fn eval_args(&mut self, args: &'p [Expr], kwargs: &'p [(String, Expr)]) -> Res<(Vec<Value>, Vec<(String, Value)>)> {
        let mut a = Vec::with_capacity(args.len());
        for e in args {
            a.push(self.eval(e)?);
        }
        let mut kw = Vec::with_capacity(kwargs.len());
        for (k, e) in kwargs {
            kw.push((k.clone(), self.eval(e)?));
        }
        Ok((a, kw))
    }

    fn eval(&mut self, expr: &'p Expr) -> Res<Value> {
        Ok(match &expr.kind {
            ExprKind::Int(i) => Value::Int(*i),
            ExprKind::Float(f) => Value::Float(*f),
            ExprKind::Str(s) => Value::text(s),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::NoneLit => Value::None,
            ExprKind::List(items) | ExprKind::Tuple(items) => {
                self.guard.check(items.len())?;
                let mut out = Vec::with_capacity(items.len());
                for e in items {
                    out.push(self.eval(e)?);
                }
                if matches!(expr.kind, ExprKind::List(_)) {
                    Value::seq(out)
                } else {
                    Value::tuple(out)
                }
            }
            ExprKind::Dict(pairs) => {
                self.guard.check(pairs.len())?;
                let mut m = IndexMap::with_capacity(pairs.len());
                for (k, v) in pairs {
                    let key = ops::to_key(&self.eval(k)?)?;
                    let value = self.eval(v)?;
                    m.insert(key, value);
                }
                Value::mapping(m)
            }
            ExprKind::Name(n) => self.lookup(n)?,
            ExprKind::Binary { op, left, right } => {
                let l = self.eval(left)?;
                let r = self.eval(right)?;
                ops::binary(*op, &l, &r, self.guard)?
            }
            ExprKind::Unary { op, operand } => {
                let v = self.eval(operand)?;
                match op {
                    UnaryOp::Neg => ops::negate(&v)?,
                    UnaryOp::Pos => ops::unary_plus(&v)?,
                    UnaryOp::Not => Value::Bool(!v.truthy()),
                }
            }
            ExprKind::Compare { first, rest } => {
                let mut left = self.eval(first)?;
                for (op, e) in rest {
                    let right = self.eval(e)?;
                    if !ops::compare(*op, &left, &right)? {
                        return Ok(Value::Bool(false));
                    }
                    left = right;
                }
                Value::Bool(true)
            }
            ExprKind::BoolOp { op, left, right } => {
                let l = self.eval(left)?;
                match (op, l.truthy()) {
                    (BoolOp::And, false) | (BoolOp::Or, true) => l,
                    _ => self.eval(right)?,
                }
            }
            ExprKind::IfExp { cond, then, orelse } => {
                if self.eval(cond)?.truthy() {
                    self.eval(then)?
                } else {
                    self.eval(orelse)?
                }
            }
            ExprKind::Call { func, args, kwargs } => {
                let (a, kw) = self.eval_args(args, kwargs)?;
                match self.functions.get(func.as_str()) {
                    Some(f) => self.call_user(f, a, kw)?,
                    None => call_builtin(func, a, kw, self.guard)?,
                }
            }
            ExprKind::MethodCall { receiver, method, args, kwargs } => {
                let r = self.eval(receiver)?;
                let (a, kw) = self.eval_args(args, kwargs)?;
                call_method(&r, method, a, kw, self.guard)?
            }
            ExprKind::Index { obj, index } => {
                let o = self.eval(obj)?;
                let i = self.eval(index)?;
                ops::index(&o, &i)?
            }
            ExprKind::Slice { obj, lower, upper, step } => {
                let o = self.eval(obj)?;
                let mut bound = |b: &'p Option<Box<Expr>>| -> Res<Option<Value>> {
                    match b {
                        Some(e) => Ok(Some(self.eval(e)?)),
                        None => Ok(None),
                    }
                };
                let (lo, hi, st) = (bound(lower)?, bound(upper)?, bound(step)?);
                ops::slice(&o, lo.as_ref(), hi.as_ref(), st.as_ref())?
            }
        })
    }
}
