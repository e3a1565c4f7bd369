use proptest::prelude::*;
use tracecot::filters::{append_report, post_filter, pre_filter, FilterConfig, FilterReportEntry, Stage};
use tracecot::lang::parse;
use tracecot::runtime::{execute, rendered_line_count, Bindings, ExecutionLimits, Value};

const COUNTDOWN: &str = "def main_solution(n):
    total = 0
    while n > 0:
        total += n
        n -= 1
    return total
";

fn bind(n: i64) -> Bindings {
    [("n".to_string(), Value::Int(n))].into_iter().collect()
}

fn trace_lines(n: i64) -> (tracecot::runtime::ExecutionTrace, usize) {
    let p = parse(COUNTDOWN).unwrap();
    let t = execute(&p, &bind(n), &ExecutionLimits::default()).unwrap().trace;
    let lines = rendered_line_count(&t);
    (t, lines)
}

#[test]
fn post_filter_limit_is_inclusive() {
    let (t, lines) = trace_lines(5);
    let at = FilterConfig { max_trace_lines: lines, ..Default::default() };
    assert!(post_filter(&t, &at).accepted);
    let below = FilterConfig { max_trace_lines: lines - 1, ..Default::default() };
    let d = post_filter(&t, &below);
    assert_eq!((d.accepted, d.stage, d.rule_id.as_str()), (false, Stage::Post, "trace_too_long"));
}

#[test]
fn failed_runs_are_rejected_during_execution() {
    let p = parse("def main_solution(n):\n    return 10 // n\n").unwrap();
    let t = execute(&p, &bind(0), &ExecutionLimits::default()).unwrap().trace;
    let d = post_filter(&t, &FilterConfig::default());
    assert_eq!((d.stage, d.rule_id.as_str()), (Stage::During, "execution_failed"));
    assert!(d.detail.contains("(line 2)"), "{}", d.detail);

    let limits = ExecutionLimits { max_steps: 10, ..Default::default() };
    let t = execute(&parse(COUNTDOWN).unwrap(), &bind(100), &limits).unwrap().trace;
    assert_eq!(post_filter(&t, &FilterConfig::default()).rule_id, "execution_failed");
}

#[test]
fn pre_filter_checks_source_and_input_size() {
    let cfg = FilterConfig::default();
    let banned = parse("import random\n\ndef main_solution(n):\n    return random.choice([n])\n").unwrap();
    let d = pre_filter(&banned, &bind(1), &cfg);
    assert_eq!((d.accepted, d.stage, d.rule_id.as_str()), (false, Stage::Pre, "banned_module"));

    let ok = parse(COUNTDOWN).unwrap();
    assert!(pre_filter(&ok, &bind(1), &cfg).accepted);
    let big: Bindings = [("n".to_string(), Value::text(&"x".repeat(5000)))].into_iter().collect();
    assert_eq!(pre_filter(&ok, &big, &cfg).rule_id, "input_too_large");
}

#[test]
fn banned_list_is_configuration() {
    let src = parse("import random\n\ndef main_solution(n):\n    return n\n").unwrap();
    let mut cfg = FilterConfig::default();
    cfg.banned_modules.remove("random");
    assert_eq!(pre_filter(&src, &bind(1), &cfg).rule_id, "import_not_allowed");
}

#[test]
fn zero_limits_are_config_errors() {
    let cfg = FilterConfig { max_trace_lines: 0, ..Default::default() };
    assert_eq!(cfg.check().unwrap_err().code(), "config_error");
    let cfg = FilterConfig { limits: ExecutionLimits { max_steps: 0, ..Default::default() }, ..Default::default() };
    assert!(cfg.check().is_err());
    assert!(FilterConfig::default().check().is_ok());
}

#[test]
fn report_appends_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.jsonl");
    let (t, _) = trace_lines(2);
    let d = post_filter(&t, &FilterConfig::default());
    append_report(&path, &[FilterReportEntry::new("a", &d)]).unwrap();
    append_report(&path, &[FilterReportEntry::new("b", &d)]).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<FilterReportEntry> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.iter().map(|r| r.program_id.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    assert!(rows[0].accepted);
}

#[test]
fn config_reads_from_partial_json() {
    let cfg: FilterConfig = serde_json::from_str(r#"{"max_trace_lines": 42}"#).unwrap();
    assert_eq!(cfg.max_trace_lines, 42);
    assert!(cfg.banned_modules.contains("random"));
}

proptest! {
    #[test]
    fn raising_the_line_limit_never_rejects(n in 0i64..40, limit in 1usize..200, extra in 0usize..100) {
        let (t, _) = trace_lines(n);
        let tight = FilterConfig { max_trace_lines: limit, ..Default::default() };
        let loose = FilterConfig { max_trace_lines: limit + extra, ..Default::default() };
        if post_filter(&t, &tight).accepted {
            prop_assert!(post_filter(&t, &loose).accepted);
        }
    }

    #[test]
    fn acceptance_matches_line_count(n in 0i64..40, limit in 1usize..200) {
        let (t, lines) = trace_lines(n);
        let cfg = FilterConfig { max_trace_lines: limit, ..Default::default() };
        prop_assert_eq!(post_filter(&t, &cfg).accepted, lines <= limit);
    }

    #[test]
    fn banning_more_modules_never_accepts_more(extra in proptest::collection::btree_set("[a-z]{2,6}", 0..5)) {
        let programs = [
            "import random\n\ndef main_solution(n):\n    return n\n",
            "import abc\n\ndef main_solution(n):\n    return n\n",
            COUNTDOWN,
        ];
        let base = FilterConfig::default();
        let mut stricter = base.clone();
        stricter.banned_modules.extend(extra);
        for src in programs {
            let p = parse(src).unwrap();
            if pre_filter(&p, &bind(1), &stricter).accepted {
                prop_assert!(pre_filter(&p, &bind(1), &base).accepted);
            }
        }
    }
}
