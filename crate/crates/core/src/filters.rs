//! Admission rules applied before, during and after execution.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lang::{validate, SourceProgram};
use crate::runtime::{bindings_repr, rendered_line_count, Bindings, ExecutionLimits, ExecutionTrace, Outcome};
use crate::{Error, Result};

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub const DEFAULT_BANNED_MODULES: &[&str] = &[
    "random", "secrets", "numpy.random", "time", "datetime", "os", "sys", "subprocess", "shutil", "socket",
    "pathlib", "uuid", "threading", "multiprocessing", "signal", "io", "tempfile", "glob",
];

pub const DEFAULT_BUILTINS: &[&str] = &[
    "len", "str", "int", "float", "abs", "min", "max", "sum", "sorted", "range", "list", "enumerate", "permutations",
];

pub const DEFAULT_METHODS: &[&str] = &[
    "join", "split", "upper", "lower", "strip", "append", "pop", "insert", "remove", "index", "get", "keys", "values",
    "items",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub banned_modules: BTreeSet<String>,
    pub allowed_builtins: BTreeSet<String>,
    pub allowed_methods: BTreeSet<String>,
    /// Upper bound on the input binding's repr, in bytes.
    pub max_input_bytes: usize,
    pub limits: ExecutionLimits,
    /// Upper bound on rendered trace lines, inclusive.
    pub max_trace_lines: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            banned_modules: set(DEFAULT_BANNED_MODULES),
            allowed_builtins: set(DEFAULT_BUILTINS),
            allowed_methods: set(DEFAULT_METHODS),
            max_input_bytes: 4096,
            limits: ExecutionLimits::default(),
            max_trace_lines: 300,
        }
    }
}

impl FilterConfig {
    pub fn check(&self) -> Result<()> {
        let l = &self.limits;
        let positive = [
            ("max_trace_lines", self.max_trace_lines as u64),
            ("max_input_bytes", self.max_input_bytes as u64),
            ("limits.max_steps", l.max_steps),
            ("limits.max_call_depth", l.max_call_depth as u64),
            ("limits.max_collection_size", l.max_collection_size as u64),
        ];
        match positive.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(Error::Config(format!("{name} must be positive"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Pre,
    During,
    Post,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub accepted: bool,
    pub stage: Stage,
    /// Empty for accepted decisions.
    pub rule_id: String,
    pub detail: String,
}

impl FilterDecision {
    pub fn accept(stage: Stage) -> Self {
        FilterDecision { accepted: true, stage, rule_id: String::new(), detail: String::new() }
    }

    pub fn reject(stage: Stage, rule_id: &str, detail: impl Into<String>) -> Self {
        FilterDecision { accepted: false, stage, rule_id: rule_id.to_string(), detail: detail.into() }
    }
}

/// Static checks only; program code is never run here.
pub fn pre_filter(program: &SourceProgram, input: &Bindings, config: &FilterConfig) -> FilterDecision {
    let report = validate(program, config);
    if let Some(v) = report.violations.first() {
        return FilterDecision::reject(Stage::Pre, &v.rule_id, format!("line {}: {}", v.line_number, v.message));
    }
    let size = bindings_repr(input).len();
    if size > config.max_input_bytes {
        return FilterDecision::reject(
            Stage::Pre,
            "input_too_large",
            format!("input repr is {size} bytes (limit {})", config.max_input_bytes),
        );
    }
    FilterDecision::accept(Stage::Pre)
}

/// Rejects failed runs and renders longer than `max_trace_lines`.
pub fn post_filter(trace: &ExecutionTrace, config: &FilterConfig) -> FilterDecision {
    match &trace.outcome {
        Outcome::Completed(_) => {}
        Outcome::RuntimeError(msg) => return FilterDecision::reject(Stage::During, "execution_failed", msg.clone()),
        Outcome::BudgetExceeded(kind) => {
            return FilterDecision::reject(Stage::During, "execution_failed", format!("budget exceeded: {}", kind.as_str()))
        }
    }
    let lines = rendered_line_count(trace);
    if lines > config.max_trace_lines {
        return FilterDecision::reject(
            Stage::Post,
            "trace_too_long",
            format!("{lines} rendered lines (limit {})", config.max_trace_lines),
        );
    }
    FilterDecision::accept(Stage::Post)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReportEntry {
    pub program_id: String,
    pub stage: Stage,
    pub rule_id: String,
    pub accepted: bool,
    pub detail: String,
}

impl FilterReportEntry {
    pub fn new(program_id: impl Into<String>, decision: &FilterDecision) -> Self {
        FilterReportEntry {
            program_id: program_id.into(),
            stage: decision.stage,
            rule_id: decision.rule_id.clone(),
            accepted: decision.accepted,
            detail: decision.detail.clone(),
        }
    }
}

/// Appends entries to a JSON Lines report, creating it if needed.
pub fn append_report(path: &Path, entries: &[FilterReportEntry]) -> Result<()> {
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut buf = String::new();
    for e in entries {
        buf.push_str(&serde_json::to_string(e).expect("report entries serialize"));
        buf.push('\n');
    }
    file.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;
    use crate::runtime::{execute, Value};

    fn num(n: i64) -> Bindings {
        [("num".to_string(), Value::Int(n))].into_iter().collect()
    }

    #[test]
    fn base7_passes_both_stages() {
        let cfg = FilterConfig::default();
        let p = parse(crate::samples::BASE7).unwrap();
        assert!(pre_filter(&p, &num(100), &cfg).accepted);
        let run = execute(&p, &num(100), &cfg.limits).unwrap();
        let d = post_filter(&run.trace, &cfg);
        assert!(d.accepted, "{d:?}");
        assert_eq!(d.stage, Stage::Post);
    }

    #[test]
    fn oversized_input() {
        let cfg = FilterConfig::default();
        let p = parse("def main_solution(s):\n    return s\n").unwrap();
        let input: Bindings = [("s".to_string(), Value::text(&"x".repeat(4990)))].into_iter().collect();
        // {'s': '<4990 chars>'} is 4990 + 9 bytes
        assert_eq!(bindings_repr(&input).len(), 4999);
        let d = pre_filter(&p, &input, &cfg);
        assert_eq!((d.accepted, d.rule_id.as_str()), (false, "input_too_large"));
    }

    #[test]
    fn runtime_error_is_execution_failed() {
        let cfg = FilterConfig::default();
        let p = parse("def main_solution(num):\n    return num // 0\n").unwrap();
        let run = execute(&p, &num(1), &cfg.limits).unwrap();
        let d = post_filter(&run.trace, &cfg);
        assert_eq!((d.stage, d.rule_id.as_str()), (Stage::During, "execution_failed"));
    }

    #[test]
    fn zero_limits_are_config_errors() {
        let mut cfg = FilterConfig::default();
        assert!(cfg.check().is_ok());
        cfg.max_trace_lines = 0;
        assert_eq!(cfg.check().unwrap_err().code(), "config_error");
    }
}
