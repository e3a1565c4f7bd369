use std::collections::BTreeMap;

use tracecot::dataset::{build_record, emit_jsonl, read_jsonl, render_completion, render_user_prompt, DatasetRecord, EmitContext, Variant};
use tracecot::lang::{parse_with, ParseOptions, SourceProgram};
use tracecot::naturalizer::naturalize_rule_based;
use tracecot::runtime::{execute, Bindings, ExecutionLimits, ExecutionTrace, Value};
use tracecot::samples;

fn golden_runs() -> Vec<(&'static str, SourceProgram, ExecutionTrace)> {
    let cases: [(&str, &str, u32, Bindings); 3] = [
        ("Convert num to base 7.", samples::BASE7, 37, [("num".to_string(), Value::Int(100))].into_iter().collect()),
        (
            "Who survives the elimination circle?",
            samples::JOSEPHUS,
            0,
            [("n".to_string(), Value::Int(17)), ("k".to_string(), Value::Int(3))].into_iter().collect(),
        ),
        ("List every ordering of the letters.", samples::PERMUTATIONS, 0, [("string".to_string(), Value::text("hrf"))].into_iter().collect()),
    ];
    cases
        .into_iter()
        .map(|(q, src, offset, input)| {
            let p = parse_with(src, &ParseOptions { program_id: None, line_offset: offset }).unwrap();
            let t = execute(&p, &input, &ExecutionLimits::default()).unwrap().trace;
            (q, p, t)
        })
        .collect()
}

fn records(variant: Variant) -> Vec<DatasetRecord> {
    golden_runs()
        .iter()
        .map(|(q, p, t)| {
            let nl = matches!(variant, Variant::Ours | Variant::CodeioStyle).then(|| naturalize_rule_based(q, t).unwrap());
            build_record(q, p, t, nl, variant).unwrap()
        })
        .collect()
}

#[test]
fn three_golden_programs_emit_three_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("golden.ours.jsonl");
    let m = emit_jsonl(&records(Variant::Ours), &path, &EmitContext { submitted: 3, ..Default::default() }).unwrap();
    assert_eq!(m.counts, BTreeMap::from([("ours".to_string(), 3)]));
    assert_eq!((m.submitted, m.emitted), (3, 3));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 3);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    let keys: Vec<&str> = first.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["record_id", "variant", "prompt", "completion", "meta"]);
    let meta_keys: Vec<&str> = first["meta"].as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(meta_keys, ["question", "input", "output"]);
    assert!(dir.path().join("golden.ours.manifest.json").exists());
}

#[test]
fn outputs_copy_the_final_return() {
    let outs: Vec<String> = records(Variant::RawTrace).into_iter().map(|r| r.output_repr).collect();
    assert_eq!(outs, ["'202'", "11", "['hrf', 'hfr', 'rhf', 'rfh', 'fhr', 'frh']"]);
}

#[test]
fn emission_is_byte_stable_and_order_free() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.ours.jsonl"), dir.path().join("b.ours.jsonl"));
    let mut recs = records(Variant::Ours);
    emit_jsonl(&recs, &a, &EmitContext::default()).unwrap();
    recs.reverse();
    emit_jsonl(&recs, &b, &EmitContext::default()).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let ids: Vec<String> = read_jsonl(&a).unwrap().into_iter().map(|r| r.record_id).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
}

#[test]
fn unsound_records_block_emission() {
    let dir = tempfile::tempdir().unwrap();
    let mut recs = records(Variant::Ours);
    recs[1].output_repr = "12".into();
    let bad = recs[1].record_id.clone();
    let e = emit_jsonl(&recs, &dir.path().join("x.ours.jsonl"), &EmitContext::default()).unwrap_err();
    assert_eq!(e.code(), "verification_failed");
    assert!(e.to_string().contains(&bad), "{e}");
}

#[test]
fn completions_per_variant() {
    let raw = &records(Variant::RawTrace)[0];
    let c = render_completion(raw).unwrap();
    assert!(c.starts_with(">>> Call to main_solution\n ...... num = 100\n   38 | def main_solution(num):"));
    let gen = &records(Variant::CodeGen)[0];
    assert_eq!(render_completion(gen).unwrap(), gen.code);
    let ours = &records(Variant::Ours)[0];
    assert!(render_completion(ours).unwrap().ends_with("**Answer**:\nThe final answer is '202'."));
}

#[test]
fn prompt_sentinels() {
    let sentinels = [
        (Variant::Ours, "step by step to reach the final output."),
        (Variant::CodeioStyle, "step by step to reach the final output."),
        (Variant::RawTrace, "Generate a step-by-step execution trace"),
        (Variant::CodeGen, "Generate a solution code that solves the question."),
    ];
    for (variant, sentinel) in sentinels {
        let r = &records(variant)[0];
        let prompt = render_user_prompt(r);
        assert!(prompt.contains(sentinel), "{variant}");
        assert!(prompt.contains(&r.question));
        assert_eq!(tracecot::prompts::unfilled_slot(&prompt), None);
        if variant != Variant::CodeGen {
            assert!(prompt.contains("{'num': 100}"));
        }
    }
}

#[test]
fn variant_names() {
    for v in Variant::ALL {
        assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        assert_eq!(serde_json::to_value(v).unwrap(), serde_json::json!(v.as_str()));
    }
    assert!("nl".parse::<Variant>().is_err());
}

#[test]
fn record_ids_depend_on_every_field() {
    let (q, p, t) = &golden_runs()[0];
    let base = build_record(q, p, t, None, Variant::RawTrace).unwrap();
    let other_q = build_record("Another question.", p, t, None, Variant::RawTrace).unwrap();
    assert_ne!(base.record_id, other_q.record_id);
    let p2 = parse_with(samples::BASE7, &ParseOptions::default()).unwrap();
    let input: Bindings = [("num".to_string(), Value::Int(101))].into_iter().collect();
    let t2 = execute(&p2, &input, &ExecutionLimits::default()).unwrap().trace;
    assert_ne!(base.record_id, build_record(q, &p2, &t2, None, Variant::RawTrace).unwrap().record_id);
}
