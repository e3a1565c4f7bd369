//! Syntax tree for the mini-language. Every node carries the program line
//! number it starts on (after any line offset is applied).

use serde_json::{json, Value as Json};

pub type LineNo = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub default: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decorator {
    pub name: String,
    pub line: LineNo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub decorators: Vec<Decorator>,
    pub line: LineNo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub cond: Expr,
    pub body: Vec<Stmt>,
    pub line: LineNo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub line: LineNo,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    FunctionDef(Function),
    /// `import a.b` or `from a.b import c`; `module` is the dotted path.
    Import { module: String },
    /// `a = b = value`
    Assign { targets: Vec<Target>, value: Expr },
    AugAssign { target: Target, op: BinOp, value: Expr },
    Expr(Expr),
    If { branches: Vec<Branch>, orelse: Vec<Stmt> },
    While { cond: Expr, body: Vec<Stmt> },
    For { target: Target, iter: Expr, body: Vec<Stmt> },
    Return(Option<Expr>),
    Break,
    Continue,
    Pass,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Name(String),
    Index { obj: Expr, index: Expr },
    Tuple(Vec<Target>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::FloorDiv => "//",
            BinOp::Mod => "%",
            BinOp::Pow => "**",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Pos,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    In,
    NotIn,
    Is,
    IsNot,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::In => "in",
            CmpOp::NotIn => "not in",
            CmpOp::Is => "is",
            CmpOp::IsNot => "is not",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub line: LineNo,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    NoneLit,
    List(Vec<Expr>),
    Tuple(Vec<Expr>),
    Dict(Vec<(Expr, Expr)>),
    Name(String),
    Binary { op: BinOp, left: Box<Expr>, right: Box<Expr> },
    Unary { op: UnaryOp, operand: Box<Expr> },
    Compare { first: Box<Expr>, rest: Vec<(CmpOp, Expr)> },
    BoolOp { op: BoolOp, left: Box<Expr>, right: Box<Expr> },
    IfExp { cond: Box<Expr>, then: Box<Expr>, orelse: Box<Expr> },
    Call { func: String, args: Vec<Expr>, kwargs: Vec<(String, Expr)> },
    MethodCall { receiver: Box<Expr>, method: String, args: Vec<Expr>, kwargs: Vec<(String, Expr)> },
    Index { obj: Box<Expr>, index: Box<Expr> },
    Slice { obj: Box<Expr>, lower: Option<Box<Expr>>, upper: Option<Box<Expr>>, step: Option<Box<Expr>> },
}

fn node(kind: impl Into<String>, line: LineNo, children: Vec<Json>) -> Json {
    json!({ "kind": kind.into(), "line": line, "children": children })
}

impl Module {
    /// Debug serialization: one `{kind, line, children}` object per node.
    pub fn to_json(&self) -> Json {
        let first = self.body.first().map_or(1, |s| s.line);
        node("Module", first, self.body.iter().map(Stmt::to_json).collect())
    }

    pub fn functions(&self) -> impl Iterator<Item = &Function> {
        self.body.iter().filter_map(|s| match &s.kind {
            StmtKind::FunctionDef(f) => Some(f),
            _ => None,
        })
    }
}

impl Function {
    fn to_json(&self, line: LineNo) -> Json {
        let mut children: Vec<Json> = self
            .params
            .iter()
            .map(|p| {
                let defaults = p.default.iter().map(Expr::to_json).collect();
                node(format!("Param:{}", p.name), line, defaults)
            })
            .collect();
        children.extend(self.body.iter().map(Stmt::to_json));
        node(format!("FunctionDef:{}", self.name), line, children)
    }
}

fn block(kind: &str, line: LineNo, stmts: &[Stmt]) -> Json {
    node(kind, line, stmts.iter().map(Stmt::to_json).collect())
}

impl Stmt {
    pub fn to_json(&self) -> Json {
        let l = self.line;
        match &self.kind {
            StmtKind::FunctionDef(f) => f.to_json(l),
            StmtKind::Import { module } => node(format!("Import:{module}"), l, vec![]),
            StmtKind::Assign { targets, value } => {
                let mut c: Vec<Json> = targets.iter().map(|t| t.to_json(l)).collect();
                c.push(value.to_json());
                node("Assign", l, c)
            }
            StmtKind::AugAssign { target, op, value } => {
                node(format!("AugAssign:{}=", op.symbol()), l, vec![target.to_json(l), value.to_json()])
            }
            StmtKind::Expr(e) => node("ExprStmt", l, vec![e.to_json()]),
            StmtKind::If { branches, orelse } => {
                let mut c: Vec<Json> = branches
                    .iter()
                    .map(|b| {
                        let mut bc = vec![b.cond.to_json()];
                        bc.extend(b.body.iter().map(Stmt::to_json));
                        node("Branch", b.line, bc)
                    })
                    .collect();
                if !orelse.is_empty() {
                    c.push(block("Else", orelse[0].line, orelse));
                }
                node("If", l, c)
            }
            StmtKind::While { cond, body } => {
                let mut c = vec![cond.to_json()];
                c.extend(body.iter().map(Stmt::to_json));
                node("While", l, c)
            }
            StmtKind::For { target, iter, body } => {
                let mut c = vec![target.to_json(l), iter.to_json()];
                c.extend(body.iter().map(Stmt::to_json));
                node("For", l, c)
            }
            StmtKind::Return(v) => node("Return", l, v.iter().map(Expr::to_json).collect()),
            StmtKind::Break => node("Break", l, vec![]),
            StmtKind::Continue => node("Continue", l, vec![]),
            StmtKind::Pass => node("Pass", l, vec![]),
        }
    }
}

impl Target {
    fn to_json(&self, line: LineNo) -> Json {
        match self {
            Target::Name(n) => node(format!("Target:{n}"), line, vec![]),
            Target::Index { obj, index } => node("TargetIndex", line, vec![obj.to_json(), index.to_json()]),
            Target::Tuple(ts) => node("TargetTuple", line, ts.iter().map(|t| t.to_json(line)).collect()),
        }
    }

    /// Names bound by assigning to this target.
    pub fn bound_names(&self, out: &mut Vec<String>) {
        match self {
            Target::Name(n) => out.push(n.clone()),
            Target::Index { .. } => {}
            Target::Tuple(ts) => ts.iter().for_each(|t| t.bound_names(out)),
        }
    }
}

fn kw_json(kwargs: &[(String, Expr)]) -> impl Iterator<Item = Json> + '_ {
    kwargs.iter().map(|(k, v)| {
        let line = v.line;
        node(format!("Keyword:{k}"), line, vec![v.to_json()])
    })
}

impl Expr {
    pub fn to_json(&self) -> Json {
        let l = self.line;
        match &self.kind {
            ExprKind::Int(i) => node(format!("Int:{i}"), l, vec![]),
            ExprKind::Float(f) => node(format!("Float:{f:?}"), l, vec![]),
            ExprKind::Str(s) => node(format!("Str:{s:?}"), l, vec![]),
            ExprKind::Bool(b) => node(format!("Bool:{b}"), l, vec![]),
            ExprKind::NoneLit => node("None", l, vec![]),
            ExprKind::List(xs) => node("List", l, xs.iter().map(Expr::to_json).collect()),
            ExprKind::Tuple(xs) => node("Tuple", l, xs.iter().map(Expr::to_json).collect()),
            ExprKind::Dict(kvs) => node(
                "Dict",
                l,
                kvs.iter().flat_map(|(k, v)| [k.to_json(), v.to_json()]).collect(),
            ),
            ExprKind::Name(n) => node(format!("Name:{n}"), l, vec![]),
            ExprKind::Binary { op, left, right } => {
                node(format!("BinOp:{}", op.symbol()), l, vec![left.to_json(), right.to_json()])
            }
            ExprKind::Unary { op, operand } => node(format!("UnaryOp:{op:?}"), l, vec![operand.to_json()]),
            ExprKind::Compare { first, rest } => {
                let mut c = vec![first.to_json()];
                for (op, e) in rest {
                    c.push(node(format!("CmpOp:{}", op.symbol()), e.line, vec![e.to_json()]));
                }
                node("Compare", l, c)
            }
            ExprKind::BoolOp { op, left, right } => {
                node(format!("BoolOp:{op:?}"), l, vec![left.to_json(), right.to_json()])
            }
            ExprKind::IfExp { cond, then, orelse } => {
                node("IfExp", l, vec![cond.to_json(), then.to_json(), orelse.to_json()])
            }
            ExprKind::Call { func, args, kwargs } => {
                let mut c: Vec<Json> = args.iter().map(Expr::to_json).collect();
                c.extend(kw_json(kwargs));
                node(format!("Call:{func}"), l, c)
            }
            ExprKind::MethodCall { receiver, method, args, kwargs } => {
                let mut c = vec![receiver.to_json()];
                c.extend(args.iter().map(Expr::to_json));
                c.extend(kw_json(kwargs));
                node(format!("MethodCall:{method}"), l, c)
            }
            ExprKind::Index { obj, index } => node("Index", l, vec![obj.to_json(), index.to_json()]),
            ExprKind::Slice { obj, lower, upper, step } => {
                let part = |p: &Option<Box<Expr>>, name: &str| {
                    node(name, l, p.iter().map(|e| e.to_json()).collect())
                };
                node(
                    "Slice",
                    l,
                    vec![obj.to_json(), part(lower, "Lower"), part(upper, "Upper"), part(step, "Step")],
                )
            }
        }
    }

    /// Visits this expression and all sub-expressions, pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::List(xs) | ExprKind::Tuple(xs) => xs.iter().for_each(|x| x.walk(f)),
            ExprKind::Dict(kvs) => kvs.iter().for_each(|(k, v)| {
                k.walk(f);
                v.walk(f);
            }),
            ExprKind::Binary { left, right, .. } | ExprKind::BoolOp { left, right, .. } => {
                left.walk(f);
                right.walk(f);
            }
            ExprKind::Unary { operand, .. } => operand.walk(f),
            ExprKind::Compare { first, rest } => {
                first.walk(f);
                rest.iter().for_each(|(_, e)| e.walk(f));
            }
            ExprKind::IfExp { cond, then, orelse } => {
                cond.walk(f);
                then.walk(f);
                orelse.walk(f);
            }
            ExprKind::Call { args, kwargs, .. } => {
                args.iter().for_each(|a| a.walk(f));
                kwargs.iter().for_each(|(_, a)| a.walk(f));
            }
            ExprKind::MethodCall { receiver, args, kwargs, .. } => {
                receiver.walk(f);
                args.iter().for_each(|a| a.walk(f));
                kwargs.iter().for_each(|(_, a)| a.walk(f));
            }
            ExprKind::Index { obj, index } => {
                obj.walk(f);
                index.walk(f);
            }
            ExprKind::Slice { obj, lower, upper, step } => {
                obj.walk(f);
                for p in [lower, upper, step].into_iter().flatten() {
                    p.walk(f);
                }
            }
            _ => {}
        }
    }
}

impl Stmt {
    /// Visits every expression reachable from this statement (including nested
    /// blocks and assignment targets).
    pub fn walk_exprs<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        fn target<'a>(t: &'a Target, f: &mut dyn FnMut(&'a Expr)) {
            match t {
                Target::Name(_) => {}
                Target::Index { obj, index } => {
                    obj.walk(f);
                    index.walk(f);
                }
                Target::Tuple(ts) => ts.iter().for_each(|t| target(t, f)),
            }
        }
        match &self.kind {
            StmtKind::FunctionDef(func) => {
                for p in &func.params {
                    if let Some(d) = &p.default {
                        d.walk(f);
                    }
                }
                func.body.iter().for_each(|s| s.walk_exprs(f));
            }
            StmtKind::Import { .. } | StmtKind::Break | StmtKind::Continue | StmtKind::Pass => {}
            StmtKind::Assign { targets, value } => {
                targets.iter().for_each(|t| target(t, f));
                value.walk(f);
            }
            StmtKind::AugAssign { target: t, value, .. } => {
                target(t, f);
                value.walk(f);
            }
            StmtKind::Expr(e) => e.walk(f),
            StmtKind::If { branches, orelse } => {
                for b in branches {
                    b.cond.walk(f);
                    b.body.iter().for_each(|s| s.walk_exprs(f));
                }
                orelse.iter().for_each(|s| s.walk_exprs(f));
            }
            StmtKind::While { cond, body } => {
                cond.walk(f);
                body.iter().for_each(|s| s.walk_exprs(f));
            }
            StmtKind::For { target: t, iter, body } => {
                target(t, f);
                iter.walk(f);
                body.iter().for_each(|s| s.walk_exprs(f));
            }
            StmtKind::Return(v) => {
                if let Some(v) = v {
                    v.walk(f);
                }
            }
        }
    }

    /// Visits this statement and every nested statement, pre-order.
    pub fn walk_stmts<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::FunctionDef(func) => func.body.iter().for_each(|s| s.walk_stmts(f)),
            StmtKind::If { branches, orelse } => {
                branches.iter().for_each(|b| b.body.iter().for_each(|s| s.walk_stmts(f)));
                orelse.iter().for_each(|s| s.walk_stmts(f));
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } => {
                body.iter().for_each(|s| s.walk_stmts(f))
            }
            _ => {}
        }
    }
}
