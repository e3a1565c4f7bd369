//! Recursive-descent parser over the token stream produced by [`super::lexer`].

use super::ast::*;
use super::lexer::{Tok, Token};
use super::ParseError;

const RESERVED: &[&str] = &[
    "def", "if", "elif", "else", "while", "for", "in", "return", "break", "continue", "pass", "and",
    "or", "not", "True", "False", "None", "import", "from", "as", "is", "lambda", "class", "try",
    "except", "finally", "with", "yield", "global", "nonlocal", "del", "assert", "raise", "async",
    "await",
];

const UNSUPPORTED_STMTS: &[&str] = &[
    "class", "try", "except", "finally", "with", "yield", "global", "nonlocal", "del", "assert",
    "raise", "async", "await", "lambda",
];

/// Module names whose import exists only to enable tracing; they are dropped.
const TRACER_MODULES: &[&str] = &["snoop", "pysnooper"];

pub struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    line_offset: u32,
    loop_depth: usize,
    in_function: bool,
}

impl Parser {
    pub fn new(tokens: Vec<Token>, line_offset: u32) -> Self {
        Parser { tokens, pos: 0, line_offset, loop_depth: 0, in_function: false }
    }

    fn tok(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_tok(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn line(&self) -> LineNo {
        self.line_offset + self.tokens[self.pos].line as u32 + 1
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError {
            line: t.line,
            column: t.column,
            expected: expected.into(),
            found: t.tok.describe(),
        }
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.tok(), Tok::Op(o) if *o == op)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.tok(), Tok::Name(n) if n == kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), ParseError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.error(format!("'{op}'")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(format!("'{kw}'")))
        }
    }

    fn identifier(&mut self) -> Result<String, ParseError> {
        match self.tok() {
            Tok::Name(n) if !RESERVED.contains(&n.as_str()) => {
                let n = n.clone();
                self.advance();
                Ok(n)
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn expect_newline(&mut self) -> Result<(), ParseError> {
        match self.tok() {
            Tok::Newline => {
                self.advance();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => Err(self.error("end of line")),
        }
    }

    /// A single expression spanning the whole token stream.
    pub fn parse_standalone_expr(&mut self) -> Result<Expr, ParseError> {
        let e = self.test()?;
        while matches!(self.tok(), Tok::Newline) {
            self.advance();
        }
        match self.tok() {
            Tok::Eof => Ok(e),
            _ => Err(self.error("end of expression")),
        }
    }

    pub fn parse_module(&mut self) -> Result<Module, ParseError> {
        let mut body = Vec::new();
        loop {
            match self.tok() {
                Tok::Eof => break,
                Tok::Newline => {
                    self.advance();
                }
                Tok::Indent => return Err(self.error("statement (unexpected indent)")),
                _ => body.extend(self.statement()?),
            }
        }
        Ok(Module { body })
    }

    /// Parses one logical statement line (or compound statement). Returns zero
    /// statements for stripped tracer imports.
    fn statement(&mut self) -> Result<Vec<Stmt>, ParseError> {
        if self.is_op("@") || self.is_kw("def") {
            return Ok(vec![self.function_def()?]);
        }
        if self.is_kw("if") {
            return Ok(vec![self.if_stmt()?]);
        }
        if self.is_kw("while") {
            let line = self.line();
            self.advance();
            let cond = self.test()?;
            self.expect_op(":")?;
            self.loop_depth += 1;
            let body = self.block();
            self.loop_depth -= 1;
            self.reject_loop_else()?;
            return Ok(vec![Stmt { kind: StmtKind::While { cond, body: body? }, line }]);
        }
        if self.is_kw("for") {
            let line = self.line();
            self.advance();
            let target = self.target_list()?;
            self.expect_kw("in")?;
            let iter = self.testlist()?;
            self.expect_op(":")?;
            self.loop_depth += 1;
            let body = self.block();
            self.loop_depth -= 1;
            self.reject_loop_else()?;
            return Ok(vec![Stmt { kind: StmtKind::For { target, iter, body: body? }, line }]);
        }
        let mut out = Vec::new();
        loop {
            if let Some(s) = self.simple_statement()? {
                out.push(s);
            }
            if !self.eat_op(";") {
                break;
            }
            if matches!(self.tok(), Tok::Newline | Tok::Eof) {
                break;
            }
        }
        self.expect_newline()?;
        Ok(out)
    }

    fn reject_loop_else(&self) -> Result<(), ParseError> {
        if self.is_kw("else") {
            return Err(self.error("statement (loop 'else' clauses are not supported)"));
        }
        Ok(())
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        if !matches!(self.tok(), Tok::Newline) {
            // single-line suite: `if x: return y`
            let mut out = Vec::new();
            loop {
                if let Some(s) = self.simple_statement()? {
                    out.push(s);
                }
                if !self.eat_op(";") || matches!(self.tok(), Tok::Newline | Tok::Eof) {
                    break;
                }
            }
            self.expect_newline()?;
            return Ok(out);
        }
        self.advance();
        if !matches!(self.tok(), Tok::Indent) {
            return Err(self.error("indented block"));
        }
        self.advance();
        let mut body = Vec::new();
        while !matches!(self.tok(), Tok::Dedent | Tok::Eof) {
            if matches!(self.tok(), Tok::Newline) {
                self.advance();
                continue;
            }
            body.extend(self.statement()?);
        }
        if matches!(self.tok(), Tok::Dedent) {
            self.advance();
        }
        Ok(body)
    }

    fn function_def(&mut self) -> Result<Stmt, ParseError> {
        let mut decorators = Vec::new();
        while self.is_op("@") {
            let line = self.line();
            self.advance();
            let mut name = self.identifier()?;
            while self.eat_op(".") {
                name.push('.');
                name.push_str(&self.identifier()?);
            }
            if self.eat_op("(") {
                // decorator arguments are irrelevant to us, only balance them
                let mut depth = 1;
                while depth > 0 {
                    match self.advance() {
                        Tok::Op("(") => depth += 1,
                        Tok::Op(")") => depth -= 1,
                        Tok::Eof => return Err(self.error("')'")),
                        _ => {}
                    }
                }
            }
            self.expect_newline()?;
            let root = name.split('.').next().unwrap_or_default();
            if !TRACER_MODULES.contains(&root) {
                decorators.push(Decorator { name, line });
            }
        }
        if self.in_function {
            return Err(self.error("statement (nested function definitions are not supported)"));
        }
        let line = self.line();
        self.expect_kw("def")?;
        let name = self.identifier()?;
        self.expect_op("(")?;
        let mut params: Vec<Param> = Vec::new();
        while !self.is_op(")") {
            if self.is_op("*") || self.is_op("**") {
                return Err(self.error("parameter name (variadic parameters are not supported)"));
            }
            let pname = self.identifier()?;
            if params.iter().any(|p| p.name == pname) {
                return Err(self.error(format!("distinct parameter name (duplicate '{pname}')")));
            }
            if self.eat_op(":") {
                // type annotation, ignored
                self.test()?;
            }
            let default = if self.eat_op("=") { Some(self.test()?) } else { None };
            if default.is_none() && params.iter().any(|p| p.default.is_some()) {
                return Err(self.error("default value (non-default parameter follows default parameter)"));
            }
            params.push(Param { name: pname, default });
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        if self.eat_op("->") {
            self.test()?;
        }
        self.expect_op(":")?;
        self.in_function = true;
        let saved_loop = std::mem::replace(&mut self.loop_depth, 0);
        let body = self.block();
        self.in_function = false;
        self.loop_depth = saved_loop;
        let mut body = body?;
        // a leading docstring is not an executed statement
        if matches!(body.first(), Some(Stmt { kind: StmtKind::Expr(Expr { kind: ExprKind::Str(_), .. }), .. })) {
            body.remove(0);
            if body.is_empty() {
                body.push(Stmt { kind: StmtKind::Pass, line });
            }
        }
        Ok(Stmt { kind: StmtKind::FunctionDef(Function { name, params, body, decorators, line }), line })
    }

    fn if_stmt(&mut self) -> Result<Stmt, ParseError> {
        let line = self.line();
        self.expect_kw("if")?;
        let mut branches = Vec::new();
        let cond = self.test()?;
        self.expect_op(":")?;
        branches.push(Branch { cond, body: self.block()?, line });
        let mut orelse = Vec::new();
        loop {
            if self.is_kw("elif") {
                let line = self.line();
                self.advance();
                let cond = self.test()?;
                self.expect_op(":")?;
                branches.push(Branch { cond, body: self.block()?, line });
            } else if self.is_kw("else") {
                self.advance();
                self.expect_op(":")?;
                orelse = self.block()?;
                break;
            } else {
                break;
            }
        }
        Ok(Stmt { kind: StmtKind::If { branches, orelse }, line })
    }

    fn simple_statement(&mut self) -> Result<Option<Stmt>, ParseError> {
        let line = self.line();
        if let Tok::Name(n) = self.tok() {
            let n = n.clone();
            match n.as_str() {
                "return" => {
                    if !self.in_function {
                        return Err(self.error("statement ('return' outside function)"));
                    }
                    self.advance();
                    let value = if matches!(self.tok(), Tok::Newline | Tok::Eof) || self.is_op(";") {
                        None
                    } else {
                        Some(self.testlist()?)
                    };
                    return Ok(Some(Stmt { kind: StmtKind::Return(value), line }));
                }
                "pass" => {
                    self.advance();
                    return Ok(Some(Stmt { kind: StmtKind::Pass, line }));
                }
                "break" | "continue" => {
                    if self.loop_depth == 0 {
                        return Err(self.error(format!("statement ('{n}' outside loop)")));
                    }
                    self.advance();
                    let kind = if n == "break" { StmtKind::Break } else { StmtKind::Continue };
                    return Ok(Some(Stmt { kind, line }));
                }
                "import" => {
                    self.advance();
                    let mut modules = vec![self.dotted_name()?];
                    if self.eat_kw("as") {
                        self.identifier()?;
                    }
                    while self.eat_op(",") {
                        modules.push(self.dotted_name()?);
                        if self.eat_kw("as") {
                            self.identifier()?;
                        }
                    }
                    let kept: Vec<String> = modules.into_iter().filter(|m| !is_tracer_module(m)).collect();
                    // one statement per module; multiple kept modules report the first
                    return Ok(kept.into_iter().next().map(|module| Stmt { kind: StmtKind::Import { module }, line }));
                }
                "from" => {
                    self.advance();
                    let module = self.dotted_name()?;
                    self.expect_kw("import")?;
                    let paren = self.eat_op("(");
                    if !self.eat_op("*") {
                        loop {
                            self.identifier()?;
                            if self.eat_kw("as") {
                                self.identifier()?;
                            }
                            if !self.eat_op(",") || (paren && self.is_op(")")) {
                                break;
                            }
                        }
                    }
                    if paren {
                        self.expect_op(")")?;
                    }
                    if is_tracer_module(&module) {
                        return Ok(None);
                    }
                    return Ok(Some(Stmt { kind: StmtKind::Import { module }, line }));
                }
                kw if UNSUPPORTED_STMTS.contains(&kw) => {
                    return Err(self.error(format!("supported statement ('{kw}' is not supported)")));
                }
                "def" => return Err(self.error("simple statement")),
                _ => {}
            }
        }
        let first = self.testlist()?;
        if let Some(op) = self.aug_op() {
            self.advance();
            let target = to_target(first, false).map_err(|m| self.error(m))?;
            let value = self.testlist()?;
            return Ok(Some(Stmt { kind: StmtKind::AugAssign { target, op, value }, line }));
        }
        if self.is_op("=") {
            let mut exprs = vec![first];
            while self.eat_op("=") {
                exprs.push(self.testlist()?);
            }
            let value = exprs.pop().expect("at least two parts");
            let targets = exprs
                .into_iter()
                .map(|e| to_target(e, true))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|m| self.error(m))?;
            return Ok(Some(Stmt { kind: StmtKind::Assign { targets, value }, line }));
        }
        if self.is_op(":") {
            return Err(self.error("end of line (annotated assignments are not supported)"));
        }
        Ok(Some(Stmt { kind: StmtKind::Expr(first), line }))
    }

    fn aug_op(&self) -> Option<BinOp> {
        let Tok::Op(op) = self.tok() else { return None };
        Some(match *op {
            "+=" => BinOp::Add,
            "-=" => BinOp::Sub,
            "*=" => BinOp::Mul,
            "/=" => BinOp::Div,
            "//=" => BinOp::FloorDiv,
            "%=" => BinOp::Mod,
            "**=" => BinOp::Pow,
            _ => return None,
        })
    }

    fn dotted_name(&mut self) -> Result<String, ParseError> {
        let mut name = self.identifier()?;
        while self.eat_op(".") {
            name.push('.');
            name.push_str(&self.identifier()?);
        }
        Ok(name)
    }

    fn target_list(&mut self) -> Result<Target, ParseError> {
        let line = self.line();
        let mut items = vec![self.or_expr_no_in()?];
        let mut trailing = false;
        while self.eat_op(",") {
            if self.is_kw("in") {
                trailing = true;
                break;
            }
            items.push(self.or_expr_no_in()?);
        }
        let e = if items.len() == 1 && !trailing {
            items.pop().expect("one item")
        } else {
            Expr { kind: ExprKind::Tuple(items), line }
        };
        to_target(e, true).map_err(|m| self.error(m))
    }

    /// A target in a `for` header: a primary expression (no comparisons, so the
    /// `in` keyword terminates it).
    fn or_expr_no_in(&mut self) -> Result<Expr, ParseError> {
        self.atom_with_trailers()
    }

    /// Comma-separated expressions; more than one (or a trailing comma) builds a tuple.
    fn testlist(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let first = self.test()?;
        if !self.is_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.ends_testlist() {
                break;
            }
            items.push(self.test()?);
        }
        Ok(Expr { kind: ExprKind::Tuple(items), line })
    }

    fn ends_testlist(&self) -> bool {
        matches!(self.tok(), Tok::Newline | Tok::Eof)
            || ["=", ")", "]", "}", ":", ";"].iter().any(|o| self.is_op(o))
            || self.aug_op().is_some()
    }

    fn test(&mut self) -> Result<Expr, ParseError> {
        if self.is_kw("lambda") {
            return Err(self.error("expression (lambda is not supported)"));
        }
        let line = self.line();
        let value = self.or_test()?;
        if self.is_kw("if") {
            self.advance();
            let cond = self.or_test()?;
            self.expect_kw("else")?;
            let orelse = self.test()?;
            return Ok(Expr {
                kind: ExprKind::IfExp { cond: Box::new(cond), then: Box::new(value), orelse: Box::new(orelse) },
                line,
            });
        }
        Ok(value)
    }

    fn or_test(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let mut left = self.and_test()?;
        while self.eat_kw("or") {
            let right = self.and_test()?;
            left = Expr { kind: ExprKind::BoolOp { op: BoolOp::Or, left: Box::new(left), right: Box::new(right) }, line };
        }
        Ok(left)
    }

    fn and_test(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let mut left = self.not_test()?;
        while self.eat_kw("and") {
            let right = self.not_test()?;
            left = Expr { kind: ExprKind::BoolOp { op: BoolOp::And, left: Box::new(left), right: Box::new(right) }, line };
        }
        Ok(left)
    }

    fn not_test(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        if self.eat_kw("not") {
            let operand = self.not_test()?;
            return Ok(Expr { kind: ExprKind::Unary { op: UnaryOp::Not, operand: Box::new(operand) }, line });
        }
        self.comparison()
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match self.tok() {
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("<=") => CmpOp::Le,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op(">=") => CmpOp::Ge,
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::Ne,
            Tok::Name(n) if n == "in" => CmpOp::In,
            Tok::Name(n) if n == "not" && matches!(self.peek_tok(1), Tok::Name(m) if m == "in") => {
                self.advance();
                CmpOp::NotIn
            }
            Tok::Name(n) if n == "is" => {
                if matches!(self.peek_tok(1), Tok::Name(m) if m == "not") {
                    self.advance();
                    CmpOp::IsNot
                } else {
                    CmpOp::Is
                }
            }
            _ => return None,
        };
        self.advance();
        Some(op)
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let first = self.arith()?;
        let mut rest = Vec::new();
        while let Some(op) = self.cmp_op() {
            rest.push((op, self.arith()?));
        }
        if rest.is_empty() {
            Ok(first)
        } else {
            Ok(Expr { kind: ExprKind::Compare { first: Box::new(first), rest }, line })
        }
    }

    fn arith(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let mut left = self.term()?;
        loop {
            let op = if self.is_op("+") {
                BinOp::Add
            } else if self.is_op("-") {
                BinOp::Sub
            } else {
                break;
            };
            self.advance();
            let right = self.term()?;
            left = Expr { kind: ExprKind::Binary { op, left: Box::new(left), right: Box::new(right) }, line };
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let mut left = self.factor()?;
        loop {
            let op = match self.tok() {
                Tok::Op("*") => BinOp::Mul,
                Tok::Op("/") => BinOp::Div,
                Tok::Op("//") => BinOp::FloorDiv,
                Tok::Op("%") => BinOp::Mod,
                _ => break,
            };
            self.advance();
            let right = self.factor()?;
            left = Expr { kind: ExprKind::Binary { op, left: Box::new(left), right: Box::new(right) }, line };
        }
        Ok(left)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let op = if self.is_op("-") {
            UnaryOp::Neg
        } else if self.is_op("+") {
            UnaryOp::Pos
        } else {
            return self.power();
        };
        self.advance();
        let operand = self.factor()?;
        // fold negative numeric literals so that `-5` is a literal
        if op == UnaryOp::Neg {
            match operand.kind {
                ExprKind::Int(i) if i != i64::MIN => return Ok(Expr { kind: ExprKind::Int(-i), line }),
                ExprKind::Float(f) => return Ok(Expr { kind: ExprKind::Float(-f), line }),
                _ => {}
            }
        }
        Ok(Expr { kind: ExprKind::Unary { op, operand: Box::new(operand) }, line })
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let base = self.atom_with_trailers()?;
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(Expr { kind: ExprKind::Binary { op: BinOp::Pow, left: Box::new(base), right: Box::new(exp) }, line });
        }
        Ok(base)
    }

    fn call_args(&mut self) -> Result<(Vec<Expr>, Vec<(String, Expr)>), ParseError> {
        let mut args = Vec::new();
        let mut kwargs: Vec<(String, Expr)> = Vec::new();
        while !self.is_op(")") {
            if self.is_op("*") || self.is_op("**") {
                return Err(self.error("argument (argument unpacking is not supported)"));
            }
            if matches!(self.tok(), Tok::Name(_)) && matches!(self.peek_tok(1), Tok::Op("=")) {
                let name = self.identifier()?;
                self.advance();
                let value = self.test()?;
                if kwargs.iter().any(|(k, _)| *k == name) {
                    return Err(self.error(format!("distinct keyword argument (repeated '{name}')")));
                }
                kwargs.push((name, value));
            } else {
                if !kwargs.is_empty() {
                    return Err(self.error("keyword argument (positional argument follows keyword argument)"));
                }
                let arg = self.test()?;
                if self.is_kw("for") {
                    return Err(self.error("')' (generator expressions are not supported)"));
                }
                args.push(arg);
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok((args, kwargs))
    }

    fn atom_with_trailers(&mut self) -> Result<Expr, ParseError> {
        let mut expr = self.atom()?;
        loop {
            if self.is_op("(") {
                let ExprKind::Name(func) = &expr.kind else {
                    return Err(self.error("operator (only named functions and methods can be called)"));
                };
                let func = func.clone();
                self.advance();
                let (args, kwargs) = self.call_args()?;
                expr = Expr { kind: ExprKind::Call { func, args, kwargs }, line: expr.line };
            } else if self.eat_op(".") {
                let method = self.identifier()?;
                if !self.is_op("(") {
                    return Err(self.error("'(' (attribute access is only supported for method calls)"));
                }
                self.advance();
                let (args, kwargs) = self.call_args()?;
                let line = expr.line;
                expr = Expr { kind: ExprKind::MethodCall { receiver: Box::new(expr), method, args, kwargs }, line };
            } else if self.eat_op("[") {
                expr = self.subscript(expr)?;
            } else {
                break;
            }
        }
        Ok(expr)
    }

    fn subscript(&mut self, obj: Expr) -> Result<Expr, ParseError> {
        let line = obj.line;
        let lower = if self.is_op(":") { None } else { Some(self.test()?) };
        if !self.is_op(":") {
            let index = lower.ok_or_else(|| self.error("index expression"))?;
            if self.is_op(",") {
                return Err(self.error("']' (tuple subscripts are not supported)"));
            }
            self.expect_op("]")?;
            return Ok(Expr { kind: ExprKind::Index { obj: Box::new(obj), index: Box::new(index) }, line });
        }
        self.advance();
        let upper = if self.is_op(":") || self.is_op("]") { None } else { Some(self.test()?) };
        let step = if self.eat_op(":") && !self.is_op("]") { Some(self.test()?) } else { None };
        self.expect_op("]")?;
        Ok(Expr {
            kind: ExprKind::Slice {
                obj: Box::new(obj),
                lower: lower.map(Box::new),
                upper: upper.map(Box::new),
                step: step.map(Box::new),
            },
            line,
        })
    }

    fn reject_comprehension(&self) -> Result<(), ParseError> {
        if self.is_kw("for") {
            return Err(self.error("',' or closing bracket (comprehension syntax is not supported)"));
        }
        Ok(())
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let kind = match self.tok().clone() {
            Tok::Int(i) => {
                self.advance();
                ExprKind::Int(i)
            }
            Tok::Float(f) => {
                self.advance();
                ExprKind::Float(f)
            }
            Tok::Str(s) => {
                self.advance();
                let mut s = s;
                // implicit concatenation of adjacent literals
                while let Tok::Str(more) = self.tok() {
                    s.push_str(more);
                    self.advance();
                }
                ExprKind::Str(s)
            }
            Tok::Name(n) => match n.as_str() {
                "True" => {
                    self.advance();
                    ExprKind::Bool(true)
                }
                "False" => {
                    self.advance();
                    ExprKind::Bool(false)
                }
                "None" => {
                    self.advance();
                    ExprKind::NoneLit
                }
                _ => ExprKind::Name(self.identifier()?),
            },
            Tok::Op("(") => {
                self.advance();
                if self.eat_op(")") {
                    ExprKind::Tuple(vec![])
                } else {
                    let first = self.test()?;
                    self.reject_comprehension()?;
                    if self.eat_op(")") {
                        return Ok(first);
                    }
                    let mut items = vec![first];
                    while self.eat_op(",") {
                        if self.is_op(")") {
                            break;
                        }
                        items.push(self.test()?);
                    }
                    self.expect_op(")")?;
                    ExprKind::Tuple(items)
                }
            }
            Tok::Op("[") => {
                self.advance();
                let mut items = Vec::new();
                while !self.is_op("]") {
                    items.push(self.test()?);
                    self.reject_comprehension()?;
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op("]")?;
                ExprKind::List(items)
            }
            Tok::Op("{") => {
                self.advance();
                let mut items = Vec::new();
                while !self.is_op("}") {
                    let k = self.test()?;
                    if !self.is_op(":") {
                        return Err(self.error("':' (set literals are not supported)"));
                    }
                    self.advance();
                    let v = self.test()?;
                    self.reject_comprehension()?;
                    items.push((k, v));
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op("}")?;
                ExprKind::Dict(items)
            }
            _ => return Err(self.error("expression")),
        };
        Ok(Expr { kind, line })
    }
}

fn is_tracer_module(module: &str) -> bool {
    TRACER_MODULES.contains(&module.split('.').next().unwrap_or_default())
}

fn to_target(e: Expr, allow_tuple: bool) -> Result<Target, String> {
    match e.kind {
        ExprKind::Name(n) => Ok(Target::Name(n)),
        ExprKind::Index { obj, index } => Ok(Target::Index { obj: *obj, index: *index }),
        ExprKind::Tuple(items) | ExprKind::List(items) if allow_tuple => {
            items.into_iter().map(|i| to_target(i, true)).collect::<Result<Vec<_>, _>>().map(Target::Tuple)
        }
        ExprKind::Slice { .. } => Err("assignable target (slice assignment is not supported)".into()),
        _ => Err("assignable target".into()),
    }
}
