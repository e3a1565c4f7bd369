//! Dataset records, prompt rendering and deterministic JSON Lines emission.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::lang::{parse, SourceProgram};
use crate::naturalizer::NlTrace;
use crate::prompts;
use crate::runtime::{bindings_from_repr, execute, render_trace, ExecutionLimits, ExecutionTrace, Outcome};
use crate::verifier::input_repr_of;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Naturalized rationale grounded in the execution.
    Ours,
    RawTrace,
    CodeGen,
    /// Teacher-model rationale without execution, kept only when its answer is right.
    CodeioStyle,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Ours, Variant::RawTrace, Variant::CodeGen, Variant::CodeioStyle];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Ours => "ours",
            Variant::RawTrace => "raw_trace",
            Variant::CodeGen => "code_gen",
            Variant::CodeioStyle => "codeio_style",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown variant '{s}' (expected ours, raw_trace, code_gen or codeio_style)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub record_id: String,
    pub question: String,
    pub code: String,
    pub input_repr: String,
    pub output_repr: String,
    pub trace_text: String,
    pub nl_trace: Option<NlTrace>,
    pub variant: Variant,
}

/// sha256 over the question, code and input, NUL-separated.
pub fn record_id(question: &str, code: &str, input_repr: &str) -> String {
    let mut h = Sha256::new();
    for part in [question, code, input_repr] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

pub fn build_record(
    question: &str,
    program: &SourceProgram,
    trace: &ExecutionTrace,
    nl_trace: Option<NlTrace>,
    variant: Variant,
) -> Result<DatasetRecord> {
    let output_repr = match (&trace.outcome, trace.final_return()) {
        (Outcome::Completed(_), Some(r)) => r.to_string(),
        (Outcome::RuntimeError(m), _) => return Err(Error::TraceNotCompleted(m.clone())),
        _ => return Err(Error::TraceNotCompleted("execution did not finish".into())),
    };
    let missing = |field| Err(Error::VariantFieldMissing { variant: variant.as_str(), field });
    let trace_text = render_trace(trace);
    match variant {
        Variant::Ours | Variant::CodeioStyle if nl_trace.is_none() => return missing("nl_trace"),
        Variant::RawTrace if trace_text.is_empty() => return missing("trace_text"),
        Variant::CodeGen if program.source_text.trim().is_empty() => return missing("code"),
        _ => {}
    }
    let input_repr = input_repr_of(trace);
    Ok(DatasetRecord {
        record_id: record_id(question, &program.source_text, &input_repr),
        question: question.to_string(),
        code: program.source_text.clone(),
        input_repr,
        output_repr,
        trace_text,
        nl_trace,
        variant,
    })
}

pub fn render_user_prompt(record: &DatasetRecord) -> String {
    let values = [("question", record.question.as_str()), ("code", record.code.as_str()), ("input", record.input_repr.as_str())];
    let template = match record.variant {
        Variant::Ours | Variant::CodeioStyle => prompts::OUTPUT_PREDICTION,
        Variant::RawTrace => prompts::RAW_TRACE,
        Variant::CodeGen => prompts::CODE_GENERATION,
    };
    prompts::fill(template, &values)
}

pub fn render_completion(record: &DatasetRecord) -> Result<String> {
    let missing = |field| Error::VariantFieldMissing { variant: record.variant.as_str(), field };
    Ok(match record.variant {
        Variant::Ours | Variant::CodeioStyle => record.nl_trace.as_ref().ok_or_else(|| missing("nl_trace"))?.to_completion(),
        Variant::RawTrace => record.trace_text.trim_end_matches('\n').to_string(),
        Variant::CodeGen => record.code.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub question: String,
    pub input: String,
    pub output: String,
}

/// One line of an emitted dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonlRecord {
    pub record_id: String,
    pub variant: Variant,
    pub prompt: String,
    pub completion: String,
    pub meta: RecordMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset_file: String,
    pub counts: BTreeMap<String, usize>,
    pub submitted: usize,
    pub emitted: usize,
    pub rejections: BTreeMap<String, usize>,
    pub config: serde_json::Value,
    pub corpus_hash: String,
}

/// Run-level facts recorded in the manifest next to the emitted records.
#[derive(Debug, Clone, Default)]
pub struct EmitContext {
    pub submitted: usize,
    pub rejections: BTreeMap<String, usize>,
    pub config: serde_json::Value,
    pub corpus_hash: String,
    pub limits: ExecutionLimits,
}

pub fn manifest_path(dataset: &Path) -> PathBuf {
    let name = dataset.file_name().and_then(|n| n.to_str()).unwrap_or("dataset.jsonl");
    let stem = name.strip_suffix(".jsonl").unwrap_or(name);
    dataset.with_file_name(format!("{stem}.manifest.json"))
}

/// Re-runs the record's code on its input and compares the outcome.
pub fn reexecute(code: &str, input_repr: &str, limits: &ExecutionLimits) -> Result<ExecutionTrace> {
    let program = parse(code)?;
    let input = bindings_from_repr(input_repr).map_err(Error::Input)?;
    let run = execute(&program, &input, limits).map_err(|e| Error::Input(e.to_string()))?;
    Ok(run.trace)
}

/// Writes `records` sorted by id, one JSON object per line, plus a manifest
/// beside the file. Naturalized records are re-executed first and the
/// whole emission fails if any no longer reproduces its output.
pub fn emit_jsonl(records: &[DatasetRecord], path: &Path, ctx: &EmitContext) -> Result<Manifest> {
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut sorted: Vec<&DatasetRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.record_id.cmp(&b.record_id));
    if let Some(w) = sorted.windows(2).find(|w| w[0].record_id == w[1].record_id && w[0].variant == w[1].variant) {
        return Err(Error::Input(format!("record {} appears twice", w[0].record_id)));
    }

    let unsound: Vec<String> = sorted
        .iter()
        .filter(|r| r.variant == Variant::Ours)
        .filter(|r| match reexecute(&r.code, &r.input_repr, &ctx.limits) {
            Ok(trace) => trace.final_return() != Some(r.output_repr.as_str()),
            Err(_) => true,
        })
        .map(|r| r.record_id.clone())
        .collect();
    if !unsound.is_empty() {
        return Err(Error::VerificationFailed(unsound));
    }

    let mut out = String::new();
    let mut counts = BTreeMap::new();
    for r in &sorted {
        let line = JsonlRecord {
            record_id: r.record_id.clone(),
            variant: r.variant,
            prompt: render_user_prompt(r),
            completion: render_completion(r)?,
            meta: RecordMeta { question: r.question.clone(), input: r.input_repr.clone(), output: r.output_repr.clone() },
        };
        out.push_str(&serde_json::to_string(&line).expect("records serialize"));
        out.push('\n');
        *counts.entry(r.variant.as_str().to_string()).or_insert(0) += 1;
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))?;

    let manifest = Manifest {
        dataset_file: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        counts,
        submitted: ctx.submitted.max(sorted.len()),
        emitted: sorted.len(),
        rejections: ctx.rejections.clone(),
        config: ctx.config.clone(),
        corpus_hash: ctx.corpus_hash.clone(),
    };
    let mpath = manifest_path(path);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(&mpath, text).map_err(|e| Error::io(&mpath, e))?;
    Ok(manifest)
}

/// Reads an emitted dataset file.
pub fn read_jsonl(path: &Path) -> Result<Vec<JsonlRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Input(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

/// Recovers the code from a prompt rendered by [`render_user_prompt`].
pub fn code_from_prompt(variant: Variant, prompt: &str) -> Option<String> {
    let (open, close) = match variant {
        Variant::Ours | Variant::CodeioStyle => {
            ("You are also given a solution code that solves the question:\n\n", "\n\n----\n\nGiven the following input:")
        }
        Variant::RawTrace => ("Here is the solution code that solves the question:\n\n```\n", "\n```\n\nGiven the following input:"),
        Variant::CodeGen => return None,
    };
    let start = prompt.find(open)? + open.len();
    let end = start + prompt[start..].rfind(close)?;
    Some(prompt[start..end].to_string())
}
