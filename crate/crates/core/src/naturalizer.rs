//! Turns execution traces into step-by-step prose, either with fixed
//! sentence templates or by ingesting a translator model's completion.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::prompts;
use crate::runtime::{ExecutionTrace, Outcome, TraceEvent};
use crate::verifier::{check_groundedness, input_repr_of};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NlMode {
    RuleBased,
    LlmTranslated,
}

/// Steps are stored unnumbered; numbering is applied when a completion is rendered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NlTrace {
    pub steps: Vec<String>,
    #[serde(rename = "final_answer")]
    pub final_answer_text: String,
    pub mode: NlMode,
}

impl NlTrace {
    /// Numbered steps, a blank line, then the labelled final answer.
    pub fn to_completion(&self) -> String {
        let steps: Vec<String> = self.steps.iter().enumerate().map(|(i, s)| format!("{}. {s}", i + 1)).collect();
        format!("{}\n\n**Answer**:\n{}", steps.join("\n"), self.final_answer_text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationPrompt {
    pub system_text: String,
    pub user_text: String,
}

/// Identifiers are shown as-is except that "trace" is reworded, so the
/// prose never names the mechanism it was derived from.
fn display_name(name: &str) -> String {
    let lower = name.to_ascii_lowercase();
    if !lower.contains("trace") {
        return name.to_string();
    }
    let mut out = String::new();
    let mut i = 0;
    while i < name.len() {
        if lower[i..].starts_with("trace") {
            out.push_str(if name[i..].starts_with('T') { "Track" } else { "track" });
            i += 5;
        } else {
            let c = name[i..].chars().next().expect("in bounds");
            out.push(c);
            i += c.len_utf8();
        }
    }
    out
}

fn describe_args(args: &[(String, String)]) -> String {
    args.iter().map(|(k, v)| format!("{} as {v}", display_name(k))).collect::<Vec<_>>().join(", ")
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Deterministic rationale built from call, update and return events.
///
/// The depth-0 call becomes the input restatement; every other call, each
/// run of updates made by a single statement, and every return get a step
/// of their own. Line events carry no values and are skipped.
pub fn naturalize_rule_based(_question: &str, trace: &ExecutionTrace) -> Result<NlTrace> {
    let answer = match &trace.outcome {
        Outcome::Completed(r) => r.clone(),
        Outcome::RuntimeError(m) => return Err(Error::TraceNotCompleted(m.clone())),
        Outcome::BudgetExceeded(k) => return Err(Error::TraceNotCompleted(format!("budget exceeded: {}", k.as_str()))),
    };

    let mut steps = Vec::new();
    let mut known: Vec<HashSet<String>> = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let flush = |pending: &mut Vec<String>, steps: &mut Vec<String>| {
        if !pending.is_empty() {
            steps.push(format!("{}.", capitalize(&pending.join("; "))));
            pending.clear();
        }
    };

    for event in &trace.events {
        if !matches!(event, TraceEvent::VarUpdate { .. } | TraceEvent::Line { .. }) {
            flush(&mut pending, &mut steps);
        }
        match event {
            TraceEvent::Call { function_name, args, depth } => {
                known.push(args.iter().map(|(k, _)| k.clone()).collect());
                let name = display_name(function_name);
                steps.push(match (*depth, args.is_empty()) {
                    (0, true) => format!("We start {name} with no input values."),
                    (0, false) => format!("We start {name} with the input {}.", describe_args(args)),
                    (_, true) => format!("Next we evaluate {name} with no arguments."),
                    (_, false) => format!("Next we evaluate {name} with {}.", describe_args(args)),
                });
            }
            TraceEvent::Line { .. } => {
                flush(&mut pending, &mut steps);
            }
            TraceEvent::VarUpdate { name, value_repr, .. } => {
                let seen = known.last_mut().is_some_and(|k| !k.insert(name.clone()));
                let shown = display_name(name);
                pending.push(if seen {
                    format!("now {shown} becomes {value_repr}")
                } else {
                    format!("set {shown} to {value_repr}")
                });
            }
            TraceEvent::Return { function_name, value_repr, depth } => {
                known.pop();
                let name = display_name(function_name);
                steps.push(if *depth == 0 {
                    format!("So {name} produces {value_repr}.")
                } else {
                    format!("This evaluation of {name} gives back {value_repr}.")
                });
            }
        }
    }
    flush(&mut pending, &mut steps);
    steps.push(format!("Therefore the result is {answer}."));

    Ok(NlTrace { steps, final_answer_text: format!("The final answer is {answer}."), mode: NlMode::RuleBased })
}

pub fn build_translation_prompt(question: &str, input_repr: &str, trace_text: &str) -> Result<TranslationPrompt> {
    if question.trim().is_empty() {
        return Err(Error::EmptyQuestion);
    }
    let trace = trace_text.strip_suffix('\n').unwrap_or(trace_text);
    Ok(TranslationPrompt {
        system_text: prompts::SYSTEM_TEXT.to_string(),
        user_text: prompts::fill(prompts::TRANSLATION, &[("question", question), ("input", input_repr), ("trace", trace)]),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThinkDelimiters {
    pub open: String,
    pub close: String,
}

impl Default for ThinkDelimiters {
    fn default() -> Self {
        ThinkDelimiters { open: "<think>".into(), close: "</think>".into() }
    }
}

/// Removes a leading thinking block. A close tag without an open tag
/// (some servers drop the opener) removes everything before it; an open
/// tag that is never closed means the whole completion was thinking.
pub fn strip_thinking<'a>(raw: &'a str, delims: &ThinkDelimiters) -> &'a str {
    let trimmed = raw.trim_start();
    if let Some(after_open) = trimmed.strip_prefix(delims.open.as_str()) {
        return match after_open.find(&delims.close) {
            Some(i) => after_open[i + delims.close.len()..].trim(),
            None => "",
        };
    }
    if !delims.open.is_empty() && trimmed.contains(&delims.open) {
        return trimmed.trim();
    }
    match trimmed.find(&delims.close) {
        Some(i) => trimmed[i + delims.close.len()..].trim(),
        None => trimmed.trim(),
    }
}

/// Length of a list marker such as "1.", "2)" or "Step 3:", including
/// surrounding markdown emphasis and the following space.
fn item_marker(line: &str) -> Option<usize> {
    let t = line.trim_start();
    let lead = line.len() - t.len();
    let stars = t.len() - t.trim_start_matches('*').len();
    let rest = &t[stars..];
    let (digits_at, body) = match rest.strip_prefix("Step ").or_else(|| rest.strip_prefix("step ")) {
        Some(b) => (rest.len() - b.len(), b),
        None => (0, rest),
    };
    let digits = body.len() - body.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 || digits > 3 {
        return None;
    }
    let after = &body[digits..];
    let punct = match after.chars().next() {
        Some('.' | ')' | ':') => 1,
        _ => return None,
    };
    let tail = &after[punct..];
    let closing = tail.len() - tail.trim_start_matches('*').len();
    let tail = &tail[closing..];
    if !(tail.is_empty() || tail.starts_with(char::is_whitespace)) {
        return None;
    }
    let space = tail.len() - tail.trim_start_matches([' ', '\t']).len();
    Some(lead + stars + digits_at + digits + punct + closing + space)
}

fn paragraphs(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !cur.is_empty() {
                out.push(cur.join("\n").trim().to_string());
                cur.clear();
            }
        } else {
            cur.push(line);
        }
    }
    if !cur.is_empty() {
        out.push(cur.join("\n").trim().to_string());
    }
    out
}

const ANSWER_LABELS: &[&str] = &["final answer", "the answer", "final result", "answer"];

/// Drops a leading "**Answer**:" style label, on its own line or inline.
fn strip_answer_label(s: &str) -> String {
    let s = s.trim();
    let head = s.trim_start_matches(|c: char| c == '*' || c == '#' || c.is_whitespace());
    let lower = head.to_ascii_lowercase();
    let Some(label) = ANSWER_LABELS.iter().find(|l| lower.starts_with(*l)) else {
        return s.to_string();
    };
    let after = &head[label.len()..];
    let rest = after.trim_start_matches(['*', ' ', '\t']);
    let Some(rest) = rest.strip_prefix(':') else {
        return s.to_string();
    };
    let rest = rest.trim_start_matches('*').trim();
    if rest.is_empty() {
        s.to_string()
    } else {
        rest.to_string()
    }
}

/// Splits a rationale into steps and a final answer.
///
/// Numbered items become steps (text before the first item becomes a
/// leading step). Text after a blank line that does not continue the last
/// item is the final answer; without it the last step doubles as the
/// answer. Unnumbered text falls back to blank-line paragraphs.
pub fn segment(body: &str) -> (Vec<String>, String) {
    let lines: Vec<&str> = body.lines().collect();
    if !lines.iter().any(|l| item_marker(l).is_some()) {
        let paras = paragraphs(body);
        let last = paras.last().cloned().unwrap_or_default();
        let steps = if paras.len() > 1 { paras[..paras.len() - 1].to_vec() } else { paras };
        return (steps, strip_answer_label(&last));
    }

    let mut steps: Vec<String> = Vec::new();
    let mut preamble: Vec<&str> = Vec::new();
    let mut current: Option<Vec<String>> = None;
    let mut trailing_from: Option<usize> = None;
    let mut blank_seen = false;
    for (idx, line) in lines.iter().enumerate() {
        if let Some(m) = item_marker(line) {
            if let Some(c) = current.take() {
                steps.push(c.join("\n").trim().to_string());
            }
            current = Some(vec![line[m..].to_string()]);
            blank_seen = false;
            continue;
        }
        if line.trim().is_empty() {
            blank_seen = true;
            continue;
        }
        match current.as_mut() {
            None => preamble.push(line),
            Some(c) => {
                let indented = line.starts_with([' ', '\t'])
                    || line.starts_with("- ")
                    || line.starts_with("* ")
                    || line.starts_with('`');
                if blank_seen && !indented {
                    trailing_from = Some(idx);
                    break;
                }
                if blank_seen {
                    c.push(String::new());
                }
                c.push(line.trim().to_string());
                blank_seen = false;
            }
        }
    }
    if let Some(c) = current.take() {
        steps.push(c.join("\n").trim().to_string());
    }
    let pre = preamble.join("\n").trim().to_string();
    if !pre.is_empty() {
        steps.insert(0, pre);
    }
    steps.retain(|s| !s.is_empty());
    let final_answer = match trailing_from {
        Some(i) => strip_answer_label(&lines[i..].join("\n")),
        None => steps.last().cloned().unwrap_or_default(),
    };
    (steps, final_answer)
}

/// Builds an [`NlTrace`] from a translator completion and rejects it unless
/// every value it mentions is grounded in the execution.
pub fn ingest_llm_translation(
    raw_completion: &str,
    trace: &ExecutionTrace,
    question: &str,
    delims: &ThinkDelimiters,
) -> Result<NlTrace> {
    let body = strip_thinking(raw_completion, delims);
    if body.is_empty() {
        return Err(Error::EmptyAfterStrip);
    }
    let (steps, final_answer_text) = segment(body);
    if steps.is_empty() {
        return Err(Error::EmptyAfterStrip);
    }
    let nl = NlTrace { steps, final_answer_text, mode: NlMode::LlmTranslated };
    let report = check_groundedness(&nl, trace, question);
    if !report.is_grounded() {
        let examples: Vec<&str> = report.violations.iter().take(5).map(|v| v.literal.as_str()).collect();
        return Err(Error::UngroundedTranslation { count: report.violations.len(), examples: examples.join(", ") });
    }
    Ok(nl)
}

/// The input binding of a trace, as shown to the translator.
pub fn input_repr(trace: &ExecutionTrace) -> String {
    input_repr_of(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_variants() {
        let d = ThinkDelimiters::default();
        assert_eq!(strip_thinking("<think>hmm</think>\nStep 1: x", &d), "Step 1: x");
        assert_eq!(strip_thinking("hmm</think>answer", &d), "answer");
        assert_eq!(strip_thinking("plain text", &d), "plain text");
        assert_eq!(strip_thinking("<think>never closed", &d), "");
        let custom = ThinkDelimiters { open: "[[".into(), close: "]]".into() };
        assert_eq!(strip_thinking("[[a]] b", &custom), "b");
    }

    #[test]
    fn markers() {
        assert_eq!(item_marker("1. Convert"), Some(3));
        assert_eq!(item_marker("12) x"), Some(4));
        assert_eq!(item_marker("Step 3: go"), Some(8));
        assert_eq!(item_marker("**2. Bold**"), Some(5));
        assert_eq!(item_marker("3.5 is a number"), None);
        assert_eq!(item_marker("2025. A year"), None);
        assert_eq!(item_marker("no marker"), None);
    }

    #[test]
    fn segment_numbered_with_trailing_answer() {
        let body = "Intro line.\n\n1. First\n   detail\n\n2. Second\n\n**Answer**:\nIt is `11`.";
        let (steps, answer) = segment(body);
        assert_eq!(steps, ["Intro line.", "First\ndetail", "Second"]);
        assert_eq!(answer, "It is `11`.");
    }

    #[test]
    fn segment_numbered_without_trailer() {
        let (steps, answer) = segment("1. a\n2. b is '202'");
        assert_eq!(steps, ["a", "b is '202'"]);
        assert_eq!(answer, "b is '202'");
    }

    #[test]
    fn segment_paragraph_fallback() {
        let (steps, answer) = segment("First thought.\n\nSecond thought.\n\nAnswer: 5");
        assert_eq!(steps, ["First thought.", "Second thought."]);
        assert_eq!(answer, "5");
        let (steps, answer) = segment("only one");
        assert_eq!((steps.len(), answer.as_str()), (1, "only one"));
    }

    #[test]
    fn completion_layout_round_trips_through_segmentation() {
        let nl = NlTrace {
            steps: vec!["We start f with the input x as 1.".into(), "So f produces 2.".into()],
            final_answer_text: "The final answer is 2.".into(),
            mode: NlMode::RuleBased,
        };
        let text = nl.to_completion();
        assert_eq!(text, "1. We start f with the input x as 1.\n2. So f produces 2.\n\n**Answer**:\nThe final answer is 2.");
        assert_eq!(segment(&text), (nl.steps.clone(), nl.final_answer_text.clone()));
    }

    #[test]
    fn trace_word_is_reworded_in_names() {
        assert_eq!(display_name("trace_len"), "track_len");
        assert_eq!(display_name("Traceback"), "Trackback");
        assert_eq!(display_name("count"), "count");
    }

    #[test]
    fn empty_question_rejected() {
        assert_eq!(build_translation_prompt("  ", "{}", "x").unwrap_err().code(), "empty_question");
    }
}
