//! Prompt templates and slot filling.

pub const SYSTEM_TEXT: &str = "You are a helpful assistant.";

pub const TRANSLATION: &str = "Given a question, an input to the question, and an execution trace that solves the question, your job is to translate the execution trace into a step-by-step thinking process. Here are some rules for translation:

- Use the exact values from the execution trace during the thought process to ensure the correctness of the thought process.

- Do not write code in your thinking process.

- Pretend you are not given the execution trace and you are solving the question by tracing the code by yourself. So, you should not mention that you are following the execution trace even when you are thinking.

**Question**

{question}

**Input**

{input}

**Execution Trace**

```
{trace}
```";

/// Output prediction; shared by the no-trace baseline and the naturalized variant.
pub const OUTPUT_PREDICTION: &str = "You are given a question that requires some input and output variables as follows:

{question}

----

You are also given a solution code that solves the question:

{code}

----

Given the following input:

{input}

Predict the output of the question by tracing the given solution code step by step to reach the final output.";

pub const RAW_TRACE: &str = "You are given a question that requires some input and output variables as follows:

{question}

----

Here is the solution code that solves the question:

```
{code}
```

Given the following input:

{input}

Generate a step-by-step execution trace of by tracing the given solution code step by step to reach the final output.";

pub const CODE_GENERATION: &str = "You are given a question that requires some input and output variables as follows:

{question}

----

Generate a solution code that solves the question.";

pub const SLOT_NAMES: &[&str] = &["question", "input", "trace", "code"];

/// Replaces `{name}` slots in one pass over the template, so slot-like
/// text inside substituted values is left alone.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + values.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let slot = after.find('}').map(|close| &after[..close]);
        match slot.and_then(|name| values.iter().find(|(k, _)| *k == name)) {
            Some((name, value)) => {
                out.push_str(value);
                rest = &after[name.len() + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// The first `{slot}` of a known name still present in `text`.
pub fn unfilled_slot(text: &str) -> Option<&'static str> {
    SLOT_NAMES.iter().copied().find(|name| text.contains(&format!("{{{name}}}")))
}
