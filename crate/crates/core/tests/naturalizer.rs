use proptest::prelude::*;
use tracecot::lang::{parse, parse_with, ParseOptions};
use tracecot::naturalizer::{
    build_translation_prompt, ingest_llm_translation, naturalize_rule_based, segment, strip_thinking, NlMode, NlTrace,
    ThinkDelimiters,
};
use tracecot::runtime::{execute, render_trace, Bindings, ExecutionLimits, ExecutionTrace, Value};
use tracecot::samples;
use tracecot::verifier::{check_groundedness, check_output_correctness};

fn run(src: &str, offset: u32, input: &[(&str, Value)]) -> ExecutionTrace {
    let p = parse_with(src, &ParseOptions { program_id: None, line_offset: offset }).unwrap();
    let b: Bindings = input.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    execute(&p, &b, &ExecutionLimits::default()).unwrap().trace
}

#[test]
fn base_case_gives_three_steps() {
    let t = run("def main_solution(x):\n    return x\n", 0, &[("x", Value::Int(4))]);
    let nl = naturalize_rule_based("q", &t).unwrap();
    assert_eq!(nl.mode, NlMode::RuleBased);
    assert_eq!(nl.steps.len(), 3, "{:?}", nl.steps);
    assert_eq!(nl.steps[0], "We start main_solution with the input x as 4.");
    assert!(nl.final_answer_text.contains('4'));
}

#[test]
fn base7_rationale_is_grounded_and_correct() {
    let t = run(samples::BASE7, 37, &[("num", Value::Int(100))]);
    let nl = naturalize_rule_based("Convert num to base 7.", &t).unwrap();
    assert!(check_groundedness(&nl, &t, "").is_grounded());
    assert!(check_output_correctness(&nl, "'202'"));
    assert!(nl.steps.iter().any(|s| s.contains("'20'")));
    // one step per call, per return, the input, and the closing sentence
    assert_eq!(nl.steps.len(), 1 + 2 + 3 + 1);
}

#[test]
fn failed_runs_cannot_be_naturalized() {
    let t = run("def main_solution(x):\n    return 1 // x\n", 0, &[("x", Value::Int(0))]);
    assert_eq!(naturalize_rule_based("q", &t).unwrap_err().code(), "trace_not_completed");
}

#[test]
fn identifiers_mentioning_trace_are_reworded() {
    let src = "def trace_sum(xs):\n    return sum(xs)\n\ndef main_solution(xs):\n    trace = trace_sum(xs)\n    return trace\n";
    let t = run(src, 0, &[("xs", Value::seq(vec![Value::Int(1), Value::Int(2)]))]);
    let nl = naturalize_rule_based("q", &t).unwrap();
    let text = nl.to_completion().to_lowercase();
    assert!(!text.contains("trace"), "{text}");
    assert!(text.contains("track_sum"));
}

#[test]
fn translation_prompt_embeds_the_trace() {
    let t = run(samples::BASE7, 37, &[("num", Value::Int(100))]);
    let text = render_trace(&t);
    let p = build_translation_prompt("Q?", "{'num': 100}", &text).unwrap();
    assert_eq!(p.system_text, "You are a helpful assistant.");
    assert!(p.user_text.contains("translate the execution trace into a step-by-step thinking process"));
    assert!(p.user_text.contains("**Question**\n\nQ?\n\n**Input**\n\n{'num': 100}\n\n**Execution Trace**\n\n```\n>>> Call"));
    assert!(p.user_text.ends_with("'202'\n```"));
    assert_eq!(build_translation_prompt("  ", "{}", &text).unwrap_err().code(), "empty_question");
}

#[test]
fn thinking_blocks_are_stripped() {
    let d = ThinkDelimiters::default();
    assert_eq!(strip_thinking("<think>a\nb</think>\n\n1. x", &d), "1. x");
    assert_eq!(strip_thinking("1. x", &d), "1. x");
}

#[test]
fn segmentation_handles_common_layouts() {
    let (steps, answer) = segment("Step 1: take 3\nStep 2: add 4\n\nThe answer is 7.");
    assert_eq!(steps, ["take 3", "add 4"]);
    assert_eq!(answer, "The answer is 7.");

    let (steps, answer) = segment("First paragraph.\n\n1) one\n2) two\n   continued\n\n**Final Answer**: 9");
    assert_eq!(steps, ["First paragraph.", "one", "two\ncontinued"]);
    assert_eq!(answer, "9");

    let (steps, answer) = segment("Just a paragraph.\n\nAnother one.");
    assert_eq!(steps, ["Just a paragraph."]);
    assert_eq!(answer, "Another one.");
}

#[test]
fn case_study_error_is_caught() {
    let src = "def main_solution(string):\n    char_list = list(string)\n    perms = permutations(char_list)\n    result = []\n    for p in perms:\n        result.append(''.join(p))\n    return result\n";
    let t = run(src, 0, &[("string", Value::text("hrf"))]);
    let raw = "1. The characters are ['h', 'r', 'f'].\n2. The third ordering joins to 'rhn'.\n3. The full list is ['hrf', 'hfr', 'rhf', 'rfh', 'fhr', 'frh'].\n\n**Answer**:\n['hrf', 'hfr', 'rhf', 'rfh', 'fhr', 'frh']";
    let e = ingest_llm_translation(raw, &t, "List every ordering.", &ThinkDelimiters::default()).unwrap_err();
    assert_eq!(e.code(), "ungrounded_translation");
    let fixed = raw.replace("'rhn'", "'rhf'");
    let nl = ingest_llm_translation(&fixed, &t, "List every ordering.", &ThinkDelimiters::default()).unwrap();
    assert_eq!(nl.steps.len(), 3);
    assert_eq!(nl.mode, NlMode::LlmTranslated);
}

#[test]
fn completion_layout() {
    let nl = NlTrace { steps: vec!["a".into(), "b".into()], final_answer_text: "c".into(), mode: NlMode::RuleBased };
    assert_eq!(nl.to_completion(), "1. a\n2. b\n\n**Answer**:\nc");
    let json = serde_json::to_value(&nl).unwrap();
    assert_eq!(json, serde_json::json!({"steps": ["a", "b"], "final_answer": "c", "mode": "rule_based"}));
}

proptest! {
    #[test]
    fn completions_segment_back(steps in proptest::collection::vec("[a-z][a-z ,'0-9]{0,20}[a-z0-9]", 1..8), answer in "[A-Za-z0-9][A-Za-z0-9 ]{0,15}[a-z0-9]") {
        let nl = NlTrace { steps: steps.clone(), final_answer_text: answer.clone(), mode: NlMode::RuleBased };
        let (s, a) = segment(&nl.to_completion());
        prop_assert_eq!(s, steps);
        prop_assert_eq!(a, answer);
    }

    #[test]
    fn rule_based_is_always_grounded(xs in proptest::collection::vec(-1000i64..1000, 0..10)) {
        let src = "def main_solution(xs):\n    best = 0\n    total = 0\n    for x in xs:\n        total += x\n        if total > best:\n            best = total\n    return [best, total]\n";
        let p = parse(src).unwrap();
        let b: Bindings = [("xs".to_string(), Value::seq(xs.into_iter().map(Value::Int).collect()))].into_iter().collect();
        let t = execute(&p, &b, &ExecutionLimits::default()).unwrap().trace;
        let nl = naturalize_rule_based("Track the running total.", &t).unwrap();
        let report = check_groundedness(&nl, &t, "Track the running total.");
        prop_assert!(report.is_grounded(), "{:?}", report.violations);
        prop_assert!(check_output_correctness(&nl, t.final_return().unwrap()));
    }
}
