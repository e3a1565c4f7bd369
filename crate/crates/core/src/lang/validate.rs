use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ast::{ExprKind, Function, Stmt, StmtKind, Target};
use super::{LineNo, SourceProgram};
use crate::filters::FilterConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule_id: String,
    pub line_number: LineNo,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub accepted: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(mut violations: Vec<Violation>) -> Self {
        violations.sort_by(|a, b| a.line_number.cmp(&b.line_number).then_with(|| a.rule_id.cmp(&b.rule_id)));
        violations.dedup();
        ValidationReport { accepted: violations.is_empty(), violations }
    }

    pub fn first_rule(&self) -> Option<&str> {
        self.violations.first().map(|v| v.rule_id.as_str())
    }
}

fn module_is_banned(module: &str, banned: &BTreeSet<String>) -> bool {
    banned.contains(module) || module.split('.').next().is_some_and(|root| banned.contains(root))
}

/// Static whitelist check. Never executes program code.
pub fn validate(program: &SourceProgram, config: &FilterConfig) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |rule: &str, line: LineNo, message: String| {
        out.push(Violation { rule_id: rule.to_string(), line_number: line, message })
    };

    let user_functions: BTreeSet<&str> = program.ast.functions().map(|f| f.name.as_str()).collect();
    let mut globals = BTreeSet::new();
    for stmt in &program.ast.body {
        match &stmt.kind {
            StmtKind::FunctionDef(_) => {}
            StmtKind::Import { .. } => {}
            StmtKind::Assign { targets, .. } if targets.iter().all(|t| matches!(t, Target::Name(_))) => {
                for t in targets {
                    let mut names = Vec::new();
                    t.bound_names(&mut names);
                    globals.extend(names);
                }
            }
            _ => push(
                "toplevel_statement",
                stmt.line,
                "only function definitions and constant assignments are allowed at top level".into(),
            ),
        }
    }

    // imports anywhere in the program
    for stmt in &program.ast.body {
        stmt.walk_stmts(&mut |s| {
            if let StmtKind::Import { module } = &s.kind {
                if module_is_banned(module, &config.banned_modules) {
                    push("banned_module", s.line, format!("import of banned module '{module}'"));
                } else {
                    push("import_not_allowed", s.line, format!("import of '{module}' is not allowed"));
                }
            }
        });
    }

    let mut check_body = |func: Option<&Function>, body: &[Stmt]| {
        let mut locals: BTreeSet<String> = globals.clone();
        if let Some(f) = func {
            locals.extend(f.params.iter().map(|p| p.name.clone()));
            for d in &f.decorators {
                push("unsupported_decorator", d.line, format!("decorator '@{}' is not supported", d.name));
            }
        }
        for s in body {
            s.walk_stmts(&mut |s| {
                let mut names = Vec::new();
                match &s.kind {
                    StmtKind::Assign { targets, .. } => targets.iter().for_each(|t| t.bound_names(&mut names)),
                    StmtKind::AugAssign { target, .. } | StmtKind::For { target, .. } => target.bound_names(&mut names),
                    _ => {}
                }
                locals.extend(names);
            });
        }
        for s in body {
            s.walk_exprs(&mut |e| match &e.kind {
                ExprKind::Call { func, .. } => {
                    if user_functions.contains(func.as_str()) || config.allowed_builtins.contains(func) {
                        return;
                    }
                    if module_is_banned(func, &config.banned_modules) {
                        push("banned_module", e.line, format!("call into banned module '{func}'"));
                    } else {
                        push("unknown_callable", e.line, format!("'{func}' is not a whitelisted callable"));
                    }
                }
                ExprKind::MethodCall { receiver, method, .. } => {
                    if let ExprKind::Name(n) = &receiver.kind {
                        if !locals.contains(n) {
                            if module_is_banned(n, &config.banned_modules) {
                                push("banned_module", e.line, format!("call to '{n}.{method}' from a banned module"));
                            } else {
                                push("unknown_callable", e.line, format!("'{n}.{method}' is not a whitelisted callable"));
                            }
                            return;
                        }
                    }
                    if !config.allowed_methods.contains(method) {
                        push("unknown_method", e.line, format!("method '.{method}' is not whitelisted"));
                    }
                }
                ExprKind::Name(n) if !locals.contains(n) && module_is_banned(n, &config.banned_modules) => {
                    push("banned_module", e.line, format!("reference to banned module '{n}'"));
                }
                _ => {}
            });
        }
    };

    for stmt in &program.ast.body {
        match &stmt.kind {
            StmtKind::FunctionDef(f) => check_body(Some(f), &f.body),
            StmtKind::Assign { .. } => check_body(None, std::slice::from_ref(stmt)),
            _ => {}
        }
    }

    ValidationReport::from_violations(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    fn report(src: &str) -> ValidationReport {
        validate(&parse(src).unwrap(), &FilterConfig::default())
    }

    #[test]
    fn base7_is_accepted() {
        let r = report(crate::samples::BASE7);
        assert!(r.accepted, "{r:?}");
        assert!(r.violations.is_empty());
    }

    #[test]
    fn base7_with_snoop_is_accepted() {
        let src = format!("import snoop\n\n@snoop\n{}", crate::samples::BASE7);
        assert!(report(&src).accepted);
    }

    #[test]
    fn randomness_is_banned() {
        let r = report("import random\ndef main_solution(n):\n    return random.randint(1, n)\n");
        assert!(!r.accepted);
        assert_eq!(r.first_rule(), Some("banned_module"));
        let r = report("def main_solution(n):\n    return random.randint(1, n)\n");
        assert_eq!(r.first_rule(), Some("banned_module"));
        let r = report("from random import shuffle\ndef main_solution(n):\n    return n\n");
        assert_eq!(r.first_rule(), Some("banned_module"));
    }

    #[test]
    fn unknown_builtin() {
        let r = report("def main_solution(n):\n    return foo_bar(n)\n");
        assert!(!r.accepted);
        assert_eq!(r.first_rule(), Some("unknown_callable"));
        assert_eq!(r.violations[0].line_number, 2);
    }

    #[test]
    fn other_imports_not_allowed() {
        let r = report("import math\ndef main_solution(n):\n    return n\n");
        assert_eq!(r.first_rule(), Some("import_not_allowed"));
    }

    #[test]
    fn unknown_method_and_decorator() {
        let r = report("@cache\ndef main_solution(s):\n    return s.title()\n");
        let rules: Vec<_> = r.violations.iter().map(|v| v.rule_id.as_str()).collect();
        assert_eq!(rules, vec!["unsupported_decorator", "unknown_method"]);
    }

    #[test]
    fn toplevel_call_is_rejected() {
        let r = report("def main_solution(num):\n    return num\nmain_solution(num=100)\n");
        assert_eq!(r.first_rule(), Some("toplevel_statement"));
    }

    #[test]
    fn shadowing_local_named_like_module_is_fine() {
        let r = report("def main_solution(time):\n    time.append(1)\n    return time\n");
        assert!(r.accepted, "{r:?}");
    }

    #[test]
    fn global_constants_and_helpers() {
        let r = report("MOD = 7\ndef helper(x):\n    return x % MOD\ndef main_solution(n):\n    return helper(n)\n");
        assert!(r.accepted, "{r:?}");
    }

    #[test]
    fn whitelist_is_configurable() {
        let p = parse("def main_solution(xs):\n    return tuple(xs)\n").unwrap();
        let mut cfg = FilterConfig::default();
        assert!(!validate(&p, &cfg).accepted);
        cfg.allowed_builtins.insert("tuple".into());
        assert!(validate(&p, &cfg).accepted);
    }
}
