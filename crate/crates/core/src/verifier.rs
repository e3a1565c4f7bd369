//! Mechanical quality checks: final-answer correctness, groundedness of
//! intermediate values, and completion length statistics.

use serde::{Deserialize, Serialize};

use crate::gateway::FinishReason;
use crate::naturalizer::NlTrace;
use crate::runtime::{ExecutionTrace, TraceEvent};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiteralViolation {
    pub step_index: usize,
    pub literal: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundednessReport {
    pub total_literals: usize,
    pub grounded_literals: usize,
    pub violations: Vec<LiteralViolation>,
}

impl GroundednessReport {
    pub fn is_grounded(&self) -> bool {
        self.violations.is_empty()
    }
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Single-quoted spans, quotes included. An opening quote must not follow
/// a word character and a closing quote must not precede one, so
/// apostrophes in words like "don't" are not mistaken for delimiters.
fn quoted_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        let opens = c == '\'' && (i == 0 || !is_word(chars[i - 1].1));
        if !opens {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        let mut close = None;
        while j < chars.len() {
            match chars[j].1 {
                '\\' => j += 2,
                '\n' => break,
                '\'' if chars.get(j + 1).is_none_or(|(_, n)| !is_word(*n)) => {
                    close = Some(j);
                    break;
                }
                _ => j += 1,
            }
        }
        match close {
            Some(j) => {
                let end = chars[j].0 + 1;
                spans.push((start, end));
                i = j + 1;
            }
            None => i += 1,
        }
    }
    spans
}

/// Numeric literals in text that has had its quoted spans blanked out.
/// Digits glued to letters ("3rd", "x1") are identifiers, not literals.
fn numeric_literals(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_ascii_digit() || (i > 0 && (is_word(chars[i - 1]) || chars[i - 1] == '.')) {
            i += 1;
            continue;
        }
        let mut start = i;
        if i > 0 && chars[i - 1] == '-' && (i == 1 || chars[i - 2].is_whitespace() || "([{,:".contains(chars[i - 2])) {
            start = i - 1;
        }
        let mut j = i;
        while j < chars.len() && chars[j].is_ascii_digit() {
            j += 1;
        }
        if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
            j += 1;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
        }
        if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
            let mut k = j + 1;
            if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                k += 1;
            }
            if k < chars.len() && chars[k].is_ascii_digit() {
                while k < chars.len() && chars[k].is_ascii_digit() {
                    k += 1;
                }
                j = k;
            }
        }
        if j < chars.len() && is_word(chars[j]) {
            // identifier-like token such as "3rd"; skip the whole word
            while j < chars.len() && is_word(chars[j]) {
                j += 1;
            }
            i = j;
            continue;
        }
        out.push(chars[start..j].iter().collect());
        i = j;
    }
    out
}

/// Every quoted-text and numeric literal in `text`, in order of kind.
pub fn extract_literals(text: &str) -> Vec<String> {
    let spans = quoted_spans(text);
    let mut blanked = text.to_string();
    let mut literals = Vec::new();
    for &(s, e) in spans.iter().rev() {
        blanked.replace_range(s..e, &" ".repeat(e - s));
    }
    for &(s, e) in &spans {
        literals.push(text[s..e].to_string());
    }
    literals.extend(numeric_literals(&blanked));
    literals
}

/// The depth-0 call's arguments in input-binding notation, e.g. `{'num': 100}`.
pub fn input_repr_of(trace: &ExecutionTrace) -> String {
    match trace.events.first() {
        Some(TraceEvent::Call { args, .. }) => {
            let body: Vec<String> = args.iter().map(|(k, v)| format!("'{k}': {v}")).collect();
            format!("{{{}}}", body.join(", "))
        }
        _ => "{}".to_string(),
    }
}

/// A literal is grounded when it occurs inside some value repr of the
/// execution, the input binding, or the question.
pub fn check_groundedness(nl: &NlTrace, trace: &ExecutionTrace, question: &str) -> GroundednessReport {
    let input = input_repr_of(trace);
    let sources: Vec<&str> =
        trace.value_reprs().chain([input.as_str(), question]).collect();
    let mut total = 0;
    let mut violations = Vec::new();
    for (step_index, step) in nl.steps.iter().enumerate() {
        for literal in extract_literals(step) {
            total += 1;
            if !sources.iter().any(|s| s.contains(&literal)) {
                violations.push(LiteralViolation { step_index, literal });
            }
        }
    }
    GroundednessReport { total_literals: total, grounded_literals: total - violations.len(), violations }
}

fn normalize(s: &str) -> String {
    s.replace(['"', '\u{2018}', '\u{2019}'], "'").split_whitespace().collect::<Vec<_>>().join(" ")
}

fn contains_bounded(hay: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let edge_is_word = |c: Option<char>| c.is_some_and(is_word);
    hay.match_indices(needle).any(|(i, m)| {
        let before = hay[..i].chars().next_back();
        let after_str = &hay[i + m.len()..];
        let mut after = after_str.chars();
        let a = after.next();
        let decimal_tail = a == Some('.') && after.next().is_some_and(|c| c.is_ascii_digit());
        let first = needle.chars().next();
        let last = needle.chars().next_back();
        let signed_or_decimal = first.is_some_and(|c| c.is_ascii_digit()) && matches!(before, Some('-' | '.'));
        (!edge_is_word(first) || !edge_is_word(before))
            && !signed_or_decimal
            && (!edge_is_word(last) || (!edge_is_word(a) && !decimal_tail))
    })
}

/// Normalized, boundary-aware containment of the ground truth in the final answer.
pub fn check_output_correctness(nl: &NlTrace, ground_truth_repr: &str) -> bool {
    output_matches(&nl.final_answer_text, ground_truth_repr)
}

pub fn output_matches(answer: &str, ground_truth_repr: &str) -> bool {
    let (a, t) = (normalize(answer), normalize(ground_truth_repr));
    if a.is_empty() || t.is_empty() {
        return false;
    }
    if contains_bounded(&a, &t) {
        return true;
    }
    let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
    contains_bounded(&strip(&a), &strip(&t))
}

pub trait Tokenizer {
    fn count(&self, text: &str) -> usize;
}

/// Counts whitespace-separated tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionSample {
    pub text: String,
    pub finish_reason: FinishReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenStats {
    pub average_tokens: f64,
    pub max_reached_count: usize,
    pub sample_count: usize,
}

pub fn token_stats(samples: &[CompletionSample], max_tokens: usize) -> Result<TokenStats> {
    token_stats_with(samples, max_tokens, &WhitespaceTokenizer)
}

/// `max_reached_count` counts completions cut off by the length limit,
/// as reported by the endpoint.
pub fn token_stats_with(samples: &[CompletionSample], max_tokens: usize, tokenizer: &dyn Tokenizer) -> Result<TokenStats> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if max_tokens == 0 {
        return Err(Error::Config("max_tokens must be positive".into()));
    }
    let total: usize = samples.iter().map(|s| tokenizer.count(&s.text)).sum();
    Ok(TokenStats {
        average_tokens: total as f64 / samples.len() as f64,
        max_reached_count: samples.iter().filter(|s| s.finish_reason == FinishReason::Length).count(),
        sample_count: samples.len(),
    })
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationEntry {
    pub record_id: String,
    pub output_correct: bool,
    pub grounded: bool,
    pub violations: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_literals_skip_apostrophes() {
        let lits = extract_literals("We don't drop 'hrf' or 'it\\'s', and the list's size is 3.");
        assert_eq!(lits, ["'hrf'", "'it\\'s'", "3"]);
    }

    #[test]
    fn numeric_literal_shapes() {
        assert_eq!(extract_literals("x1 is -4, then 2.5e-3; the 3rd is [1, -2]."), ["-4", "2.5e-3", "1", "-2"]);
        assert_eq!(extract_literals("range 3-4"), ["3", "4"]);
        assert!(extract_literals("no numbers here").is_empty());
    }

    #[test]
    fn output_matching() {
        assert!(output_matches("The last remaining person is in position `11`", "11"));
        assert!(!output_matches("13", "11"));
        assert!(!output_matches("position 111", "11"));
        assert!(!output_matches("", "11"));
        assert!(output_matches("It is \"202\".", "'202'"));
        assert!(output_matches("answer: [1,2]", "[1, 2]"));
        assert!(!output_matches("11.5", "11"));
        assert!(output_matches("is 11.", "11"));
        assert!(!output_matches("-11", "11"));
        assert!(!output_matches("0.11", "11"));
        assert!(output_matches("it is -11", "-11"));
    }

    #[test]
    fn token_stats_counts() {
        let s = |t: &str, f| CompletionSample { text: t.into(), finish_reason: f };
        let stats = token_stats(&[s("a b c", FinishReason::Stop), s("a b", FinishReason::Stop)], 100).unwrap();
        assert_eq!((stats.average_tokens, stats.max_reached_count, stats.sample_count), (2.5, 0, 2));
        let stats = token_stats(&[s("x", FinishReason::Length)], 100).unwrap();
        assert_eq!(stats.max_reached_count, 1);
        assert_eq!(token_stats(&[], 100).unwrap_err().code(), "empty_sample");
    }
}
