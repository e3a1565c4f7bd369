use proptest::prelude::*;
use tracecot::gateway::FinishReason;
use tracecot::lang::parse;
use tracecot::naturalizer::{NlMode, NlTrace};
use tracecot::runtime::{execute, Bindings, ExecutionLimits, ExecutionTrace, Value};
use tracecot::verifier::{
    check_groundedness, check_output_correctness, extract_literals, token_stats, token_stats_with, CompletionSample,
    Tokenizer,
};

fn nl(steps: &[&str], answer: &str) -> NlTrace {
    NlTrace { steps: steps.iter().map(|s| s.to_string()).collect(), final_answer_text: answer.into(), mode: NlMode::LlmTranslated }
}

fn doubling(n: i64) -> ExecutionTrace {
    let p = parse("def main_solution(n):\n    y = n * 2\n    return str(y)\n").unwrap();
    let b: Bindings = [("n".to_string(), Value::Int(n))].into_iter().collect();
    execute(&p, &b, &ExecutionLimits::default()).unwrap().trace
}

#[test]
fn repeated_grounded_value_counts_each_time() {
    let t = doubling(21);
    let r = check_groundedness(&nl(&["y is 42", "42 again", "still 42, 42", "and 42"], "'42'"), &t, "");
    assert_eq!((r.total_literals, r.grounded_literals), (5, 5));
    assert!(r.is_grounded());
}

#[test]
fn violations_name_step_and_literal() {
    let t = doubling(21);
    let r = check_groundedness(&nl(&["n is 21", "so y is 43 and the text is '42'", "or '43'"], "'42'"), &t, "");
    let found: Vec<(usize, &str)> = r.violations.iter().map(|v| (v.step_index, v.literal.as_str())).collect();
    assert_eq!(found, [(1, "43"), (2, "'43'")]);
    assert_eq!(r.total_literals, 4);
    assert_eq!(r.grounded_literals, 2);
}

#[test]
fn question_and_input_ground_literals() {
    let t = doubling(21);
    let r = check_groundedness(&nl(&["Doubling uses factor 2 on 21"], "x"), &t, "Multiply by 2.");
    assert!(r.is_grounded(), "{:?}", r.violations);
    let r = check_groundedness(&nl(&["factor 3"], "x"), &t, "Multiply by 2.");
    assert_eq!(r.violations.len(), 1);
}

#[test]
fn final_answer_is_not_checked_for_grounding() {
    let t = doubling(1);
    assert!(check_groundedness(&nl(&["n is 1"], "999"), &t, "").is_grounded());
}

#[test]
fn output_correctness_cases() {
    assert!(check_output_correctness(&nl(&["x"], "The last remaining person is in position `11`"), "11"));
    assert!(!check_output_correctness(&nl(&["x"], "13"), "11"));
    assert!(!check_output_correctness(&nl(&["x"], ""), "11"));
    assert!(check_output_correctness(&nl(&["x"], "The final answer is \u{2018}202\u{2019}."), "'202'"));
    assert!(check_output_correctness(&nl(&["x"], "[ 'a',\n 'b' ]"), "['a', 'b']"));
    assert!(!check_output_correctness(&nl(&["x"], "-11"), "11"));
    assert!(check_output_correctness(&nl(&["x"], "-11"), "-11"));
}

#[test]
fn literal_extraction_fixture() {
    let lits = extract_literals("Set p to ('r', 'h', 'f') and count to -3; at 2.50 we stop (x2 is ignored).");
    assert_eq!(lits, ["'r'", "'h'", "'f'", "-3", "2.50"]);
}

/// Counts characters, to show the tokenizer is pluggable.
struct Chars;

impl Tokenizer for Chars {
    fn count(&self, text: &str) -> usize {
        text.chars().count()
    }
}

#[test]
fn custom_tokenizer() {
    let s = [CompletionSample { text: "abcd".into(), finish_reason: FinishReason::Stop }];
    assert_eq!(token_stats_with(&s, 10, &Chars).unwrap().average_tokens, 4.0);
    assert_eq!(token_stats(&s, 0).unwrap_err().code(), "config_error");
}

fn sample_strategy() -> impl Strategy<Value = CompletionSample> {
    ("[a-z ]{0,40}", prop_oneof![Just(FinishReason::Stop), Just(FinishReason::Length), Just(FinishReason::Error)])
        .prop_map(|(text, finish_reason)| CompletionSample { text, finish_reason })
}

proptest! {
    #[test]
    fn token_stats_ignore_order(samples in proptest::collection::vec(sample_strategy(), 1..20), seed in any::<u64>()) {
        let mut shuffled = samples.clone();
        // deterministic rotation plus reversal
        let k = (seed as usize) % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        let a = token_stats(&samples, 100).unwrap();
        let b = token_stats(&shuffled, 100).unwrap();
        prop_assert_eq!(a.max_reached_count, b.max_reached_count);
        prop_assert_eq!(a.sample_count, b.sample_count);
        prop_assert!((a.average_tokens - b.average_tokens).abs() < 1e-9);
        prop_assert!(a.max_reached_count <= a.sample_count);
    }

    #[test]
    fn grounded_count_never_exceeds_total(words in proptest::collection::vec("[a-z0-9' ]{0,12}", 1..6), n in -50i64..50) {
        let t = doubling(n);
        let steps: Vec<&str> = words.iter().map(String::as_str).collect();
        let r = check_groundedness(&nl(&steps, "x"), &t, "");
        prop_assert!(r.grounded_literals <= r.total_literals);
        prop_assert_eq!(r.total_literals - r.grounded_literals, r.violations.len());
    }
}
