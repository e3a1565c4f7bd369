//! Event-level execution traces and their debugger-style text rendering.
//!
//! Rendering layout, per event at call depth `d`:
//!
//! ```text
//! >>> Call to main_solution                 (depth 0 header is flush left)
//!  ...... num = 100                         (4d+1 spaces, then "...... ")
//!    38 | def main_solution(num):          (line number right-aligned in 5+4d)
//!  <<< Return value from main_solution: '202'
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::lang::LineNo;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Call { function_name: String, args: Vec<(String, String)>, depth: usize },
    Line { line_number: LineNo, source_text: String, depth: usize },
    VarUpdate { name: String, value_repr: String, depth: usize },
    Return { function_name: String, value_repr: String, depth: usize },
}

impl TraceEvent {
    pub fn depth(&self) -> usize {
        match self {
            TraceEvent::Call { depth, .. }
            | TraceEvent::Line { depth, .. }
            | TraceEvent::VarUpdate { depth, .. }
            | TraceEvent::Return { depth, .. } => *depth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetKind {
    Steps,
    CallDepth,
    CollectionSize,
    WallClock,
}

impl BudgetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BudgetKind::Steps => "max_steps",
            BudgetKind::CallDepth => "max_call_depth",
            BudgetKind::CollectionSize => "max_collection_size",
            BudgetKind::WallClock => "wall_clock",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum Outcome {
    Completed(String),
    RuntimeError(String),
    BudgetExceeded(BudgetKind),
}

impl Outcome {
    pub fn is_completed(&self) -> bool {
        matches!(self, Outcome::Completed(_))
    }

    pub fn return_repr(&self) -> Option<&str> {
        match self {
            Outcome::Completed(r) => Some(r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub events: Vec<TraceEvent>,
    /// Number of line events.
    pub step_count: u64,
    pub outcome: Outcome,
}

impl ExecutionTrace {
    /// Every value repr that appears anywhere in the trace.
    pub fn value_reprs(&self) -> impl Iterator<Item = &str> {
        let from_events = self.events.iter().flat_map(|e| -> Vec<&str> {
            match e {
                TraceEvent::Call { args, .. } => args.iter().map(|(_, v)| v.as_str()).collect(),
                TraceEvent::VarUpdate { value_repr, .. } | TraceEvent::Return { value_repr, .. } => {
                    vec![value_repr.as_str()]
                }
                TraceEvent::Line { .. } => vec![],
            }
        });
        from_events.chain(self.outcome.return_repr())
    }

    /// The value repr of the depth-0 return, when the run completed.
    pub fn final_return(&self) -> Option<&str> {
        match self.events.last() {
            Some(TraceEvent::Return { depth: 0, value_repr, .. }) if self.outcome.is_completed() => Some(value_repr),
            _ => None,
        }
    }
}

fn indent(depth: usize) -> String {
    " ".repeat(4 * depth + 1)
}

/// Renders one line per event. Failed runs end with a `!!!` sentinel line.
pub fn render_trace(trace: &ExecutionTrace) -> String {
    let mut out = String::new();
    for event in &trace.events {
        match event {
            TraceEvent::Call { function_name, args, depth } => {
                let pad = if *depth == 0 { String::new() } else { indent(*depth) };
                let _ = writeln!(out, "{pad}>>> Call to {function_name}");
                for (name, value) in args {
                    let _ = writeln!(out, "{}...... {name} = {value}", indent(*depth));
                }
            }
            TraceEvent::Line { line_number, source_text, depth } => {
                let width = 5 + 4 * depth;
                let text = source_text.trim_end();
                let _ = writeln!(out, "{line_number:>width$} | {text}");
            }
            TraceEvent::VarUpdate { name, value_repr, depth } => {
                let _ = writeln!(out, "{}...... {name} = {value_repr}", indent(*depth));
            }
            TraceEvent::Return { function_name, value_repr, depth } => {
                let _ = writeln!(out, "{}<<< Return value from {function_name}: {value_repr}", indent(*depth));
            }
        }
    }
    match &trace.outcome {
        Outcome::Completed(_) => {}
        Outcome::RuntimeError(msg) => {
            let _ = writeln!(out, "!!! RuntimeError: {msg}");
        }
        Outcome::BudgetExceeded(kind) => {
            let _ = writeln!(out, "!!! BudgetExceeded: {}", kind.as_str());
        }
    }
    out
}

/// Number of lines `render_trace` produces, without building the text.
pub fn rendered_line_count(trace: &ExecutionTrace) -> usize {
    let events: usize = trace
        .events
        .iter()
        .map(|e| match e {
            TraceEvent::Call { args, .. } => 1 + args.len(),
            _ => 1,
        })
        .sum();
    events + usize::from(!trace.outcome.is_completed())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExecutionTrace {
        ExecutionTrace {
            events: vec![
                TraceEvent::Call { function_name: "f".into(), args: vec![("x".into(), "1".into())], depth: 0 },
                TraceEvent::Line { line_number: 1, source_text: "def f(x):".into(), depth: 0 },
                TraceEvent::Call { function_name: "g".into(), args: vec![], depth: 1 },
                TraceEvent::Line { line_number: 12, source_text: "    return 2   ".into(), depth: 1 },
                TraceEvent::Return { function_name: "g".into(), value_repr: "2".into(), depth: 1 },
                TraceEvent::VarUpdate { name: "y".into(), value_repr: "2".into(), depth: 0 },
                TraceEvent::Return { function_name: "f".into(), value_repr: "2".into(), depth: 0 },
            ],
            step_count: 2,
            outcome: Outcome::Completed("2".into()),
        }
    }

    #[test]
    fn layout_constants() {
        let text = render_trace(&sample());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], ">>> Call to f");
        assert_eq!(lines[1], " ...... x = 1");
        assert_eq!(lines[2], "    1 | def f(x):");
        assert_eq!(lines[3], "     >>> Call to g");
        assert_eq!(lines[4], "       12 |     return 2");
        assert_eq!(lines[5], "     <<< Return value from g: 2");
        assert_eq!(lines[6], " ...... y = 2");
        assert_eq!(lines[7], " <<< Return value from f: 2");
        assert!(text.ends_with('\n'));
        assert_eq!(rendered_line_count(&sample()), lines.len());
    }

    #[test]
    fn error_sentinel() {
        let mut t = sample();
        t.events.truncate(4);
        t.outcome = Outcome::RuntimeError("ZeroDivisionError: division by zero".into());
        let text = render_trace(&t);
        assert_eq!(text.lines().last(), Some("!!! RuntimeError: ZeroDivisionError: division by zero"));
        assert_eq!(rendered_line_count(&t), text.lines().count());
    }
}
