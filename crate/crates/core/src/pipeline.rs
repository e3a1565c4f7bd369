//! Corpus loading, the parallel build over instances, and re-verification
//! of emitted datasets.
//!
//! A corpus is a directory with one subdirectory per instance:
//!
//! ```text
//! corpus/
//!   base7/
//!     question.txt
//!     solution.py
//!     inputs.jsonl      one JSON object of argument bindings per line
//!     meta.json         optional, {"line_offset": 37}
//! ```

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tracing::{debug, info, warn};

use crate::dataset::{
    build_record, code_from_prompt, emit_jsonl, read_jsonl, reexecute, DatasetRecord, EmitContext, Manifest, Variant,
};
use crate::filters::{append_report, post_filter, pre_filter, FilterConfig, FilterDecision, FilterReportEntry, Stage};
use crate::gateway::{self, Gateway, GatewayConfig, GatewayError, SamplingConfig};
use crate::lang::{parse_with, ParseOptions, SourceProgram};
use crate::naturalizer::{naturalize_rule_based, segment, strip_thinking, NlMode, NlTrace};
use crate::runtime::{bindings_from_json, execute, render_trace, Bindings, ExecutionLimits, ExecutionTrace};
use crate::verifier::{check_groundedness, output_matches, VerificationEntry};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NaturalizerMode {
    #[default]
    RuleBased,
    Llm,
}

impl std::str::FromStr for NaturalizerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rule_based" => Ok(NaturalizerMode::RuleBased),
            "llm" => Ok(NaturalizerMode::Llm),
            other => Err(format!("unknown mode '{other}' (expected rule_based or llm)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub corpus_dir: PathBuf,
    pub output_dir: PathBuf,
    pub filter: FilterConfig,
    /// Sampling for translation requests.
    pub sampling: SamplingConfig,
    /// Sampling for the no-trace baseline answers.
    pub baseline_sampling: SamplingConfig,
    pub mode: NaturalizerMode,
    pub gateway: GatewayConfig,
    pub workers: usize,
    pub variants: Vec<Variant>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus_dir: PathBuf::from("corpus"),
            output_dir: PathBuf::from("out"),
            filter: FilterConfig::default(),
            sampling: SamplingConfig::translation(),
            baseline_sampling: SamplingConfig::evaluation(),
            mode: NaturalizerMode::RuleBased,
            gateway: GatewayConfig::default(),
            workers: 1,
            variants: vec![Variant::Ours],
        }
    }
}

impl PipelineConfig {
    pub fn check(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::Config("no variants selected".into()));
        }
        if self.mode == NaturalizerMode::RuleBased && self.variants.contains(&Variant::CodeioStyle) {
            return Err(Error::Config("codeio_style needs a model endpoint; use mode llm".into()));
        }
        self.filter.check()?;
        self.sampling.check()?;
        self.baseline_sampling.check()?;
        Ok(())
    }

    fn needs_gateway(&self) -> bool {
        self.mode == NaturalizerMode::Llm
    }

    /// Settings that shape the emitted records. Paths, worker count and
    /// credentials are left out so that relocating a run does not change
    /// its manifests.
    fn snapshot(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            for key in ["corpus_dir", "output_dir", "workers"] {
                map.shift_remove(key);
            }
            if let Some(gw) = map.get_mut("gateway").and_then(|g| g.as_object_mut()) {
                gw.shift_remove("cache_dir");
            }
        }
        v
    }
}

/// One corpus instance: a program, its question, and the raw input lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    pub question: String,
    pub source: String,
    pub line_offset: u32,
    pub inputs: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
struct InstanceMeta {
    #[serde(default)]
    line_offset: u32,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_instance(dir: &Path) -> Result<Instance> {
    let id = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut solutions: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_stem().is_some_and(|s| s == "solution") && p.is_file())
        .collect();
    solutions.sort();
    let solution = solutions
        .first()
        .ok_or_else(|| Error::Input(format!("instance '{id}' has no solution file")))?;
    let meta_path = dir.join("meta.json");
    let meta: InstanceMeta = if meta_path.exists() {
        serde_json::from_str(&read(&meta_path)?).map_err(|e| Error::Input(format!("{}: {e}", meta_path.display())))?
    } else {
        InstanceMeta::default()
    };
    Ok(Instance {
        question: read(&dir.join("question.txt"))?.trim().to_string(),
        source: read(solution)?,
        line_offset: meta.line_offset,
        inputs: read(&dir.join("inputs.jsonl"))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect(),
        id,
    })
}

/// Instances in directory-name order. A missing or empty corpus is an `empty_corpus` error.
pub fn load_corpus(dir: &Path) -> Result<Vec<Instance>> {
    let entries = match std::fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::EmptyCorpus),
        Err(e) => return Err(Error::io(dir, e)),
    };
    let mut dirs: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    dirs.sort();
    let instances: Vec<Instance> = dirs.iter().map(|d| load_instance(d)).collect::<Result<_>>()?;
    if instances.iter().all(|i| i.inputs.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    Ok(instances)
}

/// Content hash over every instance in load order.
pub fn corpus_hash(instances: &[Instance]) -> String {
    let mut h = Sha256::new();
    for inst in instances {
        for part in [inst.id.as_str(), inst.question.as_str(), inst.source.as_str(), &inst.line_offset.to_string()] {
            h.update(part.as_bytes());
            h.update([0u8]);
        }
        for line in &inst.inputs {
            h.update(line.as_bytes());
            h.update(*b"\n");
        }
        h.update([1u8]);
    }
    hex::encode(h.finalize())
}

pub fn parse_instance(inst: &Instance) -> std::result::Result<SourceProgram, crate::lang::ParseError> {
    parse_with(&inst.source, &ParseOptions { program_id: Some(inst.id.clone()), line_offset: inst.line_offset })
}

/// A traced instance that has passed every filter stage.
#[derive(Debug, Clone)]
pub struct Accepted {
    pub program: SourceProgram,
    pub trace: ExecutionTrace,
}

/// Runs one (program, input) job through the pre, during and post stages.
/// Every decision taken is appended to `report`.
pub fn filter_job(
    inst: &Instance,
    input_line: &str,
    config: &FilterConfig,
    report: &mut Vec<FilterReportEntry>,
) -> std::result::Result<Accepted, String> {
    fn rejected(report: &mut Vec<FilterReportEntry>, id: &str, d: FilterDecision) -> std::result::Result<Accepted, String> {
        report.push(FilterReportEntry::new(id, &d));
        Err(d.rule_id)
    }
    let reject = |report: &mut Vec<FilterReportEntry>, d| rejected(report, &inst.id, d);
    let program = match parse_instance(inst) {
        Ok(p) => p,
        Err(e) => return reject(report, FilterDecision::reject(Stage::Pre, "parse_error", e.to_string())),
    };
    let input: Bindings = match serde_json::from_str(input_line).map_err(|e| e.to_string()).and_then(|v| bindings_from_json(&v)) {
        Ok(b) => b,
        Err(e) => return reject(report, FilterDecision::reject(Stage::Pre, "invalid_input", e)),
    };
    let pre = pre_filter(&program, &input, config);
    if !pre.accepted {
        return reject(report, pre);
    }
    report.push(FilterReportEntry::new(&inst.id, &pre));
    let trace = match execute(&program, &input, &config.limits) {
        Ok(run) => run.trace,
        Err(e) => return reject(report, FilterDecision::reject(Stage::During, "input_mismatch", e.to_string())),
    };
    let post = post_filter(&trace, config);
    if !post.accepted {
        return reject(report, post);
    }
    report.push(FilterReportEntry::new(&inst.id, &post));
    Ok(Accepted { program, trace })
}

/// Errors that should stop the whole build rather than drop one record.
fn is_fatal(e: &Error) -> bool {
    matches!(e, Error::Gateway(GatewayError::Auth { .. } | GatewayError::Config(_) | GatewayError::UnfilledSlot(_)))
}

fn naturalize(
    config: &PipelineConfig,
    gateway: Option<&Gateway>,
    question: &str,
    trace: &ExecutionTrace,
) -> Result<NlTrace> {
    let nl = match (config.mode, gateway) {
        (NaturalizerMode::RuleBased, _) => naturalize_rule_based(question, trace)?,
        (NaturalizerMode::Llm, Some(gw)) => {
            let text = render_trace(trace);
            gateway::translate(gw, question, &crate::verifier::input_repr_of(trace), &text, trace, &config.sampling)?
        }
        (NaturalizerMode::Llm, None) => return Err(Error::Config("mode llm needs a gateway".into())),
    };
    let report = check_groundedness(&nl, trace, question);
    if !report.is_grounded() {
        let examples: Vec<&str> = report.violations.iter().take(5).map(|v| v.literal.as_str()).collect();
        return Err(Error::UngroundedTranslation { count: report.violations.len(), examples: examples.join(", ") });
    }
    Ok(nl)
}

/// The no-trace baseline: the model predicts the output from the prompt
/// alone and the answer is kept only when it matches the executed output.
fn codeio_rationale(gateway: &Gateway, config: &PipelineConfig, record: &DatasetRecord) -> Result<NlTrace> {
    let prompt = crate::dataset::render_user_prompt(record);
    let resp = gateway::solve(gateway, &prompt, &config.baseline_sampling)?;
    let body = strip_thinking(&resp.content, &gateway.config().think);
    if body.is_empty() {
        return Err(Error::EmptyAfterStrip);
    }
    let (steps, final_answer_text) = segment(body);
    if steps.is_empty() {
        return Err(Error::EmptyAfterStrip);
    }
    if !output_matches(&final_answer_text, &record.output_repr) {
        return Err(Error::VerificationFailed(vec![record.record_id.clone()]));
    }
    Ok(NlTrace { steps, final_answer_text, mode: NlMode::LlmTranslated })
}

fn rule_of(e: &Error) -> String {
    match e {
        Error::VerificationFailed(_) => "incorrect_answer".into(),
        other => other.code().to_string(),
    }
}

struct JobOutcome {
    report: Vec<FilterReportEntry>,
    per_variant: Vec<(Variant, std::result::Result<DatasetRecord, String>)>,
}

fn run_job(config: &PipelineConfig, gateway: Option<&Gateway>, inst: &Instance, input_line: &str) -> Result<JobOutcome> {
    let mut report = Vec::new();
    let accepted = match filter_job(inst, input_line, &config.filter, &mut report) {
        Ok(a) => a,
        Err(rule) => {
            let per_variant = config.variants.iter().map(|v| (*v, Err(rule.clone()))).collect();
            return Ok(JobOutcome { report, per_variant });
        }
    };
    let Accepted { program, trace } = accepted;
    let q = inst.question.as_str();
    let mut per_variant = Vec::new();
    for &variant in &config.variants {
        let result = match variant {
            Variant::Ours => naturalize(config, gateway, q, &trace)
                .and_then(|nl| build_record(q, &program, &trace, Some(nl), variant)),
            Variant::RawTrace | Variant::CodeGen => build_record(q, &program, &trace, None, variant),
            Variant::CodeioStyle => {
                let gw = gateway.ok_or_else(|| Error::Config("codeio_style needs a gateway".into()))?;
                build_record(q, &program, &trace, None, Variant::RawTrace).and_then(|draft| {
                    let draft = DatasetRecord { variant, ..draft };
                    let nl = codeio_rationale(gw, config, &draft)?;
                    Ok(DatasetRecord { nl_trace: Some(nl), ..draft })
                })
            }
        };
        match result {
            Ok(r) => per_variant.push((variant, Ok(r))),
            Err(e) if is_fatal(&e) => return Err(e),
            Err(e) => {
                debug!(instance = %inst.id, %variant, error = %e, "record dropped");
                per_variant.push((variant, Err(rule_of(&e))));
            }
        }
    }
    Ok(JobOutcome { report, per_variant })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantOutput {
    pub variant: Variant,
    pub dataset_path: PathBuf,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildSummary {
    pub outputs: Vec<VariantOutput>,
    pub filter_report: PathBuf,
}

fn corpus_name(dir: &Path) -> String {
    dir.file_name().map(|n| n.to_string_lossy().into_owned()).filter(|n| !n.is_empty()).unwrap_or_else(|| "corpus".into())
}

pub fn dataset_path(config: &PipelineConfig, variant: Variant) -> PathBuf {
    config.output_dir.join(format!("{}.{}.jsonl", corpus_name(&config.corpus_dir), variant))
}

pub fn filter_report_path(config: &PipelineConfig) -> PathBuf {
    config.output_dir.join(format!("{}.filter_report.jsonl", corpus_name(&config.corpus_dir)))
}

/// Builds one JSON Lines dataset per selected variant. Instances are
/// processed on `config.workers` threads; results are gathered in corpus
/// order and written by a single thread, so output bytes do not depend on
/// scheduling.
pub fn build(config: &PipelineConfig, gateway: Option<&Gateway>) -> Result<BuildSummary> {
    config.check()?;
    if config.needs_gateway() && gateway.is_none() {
        return Err(Error::Config("mode llm needs a gateway endpoint".into()));
    }
    let instances = load_corpus(&config.corpus_dir)?;
    let hash = corpus_hash(&instances);
    let jobs: Vec<(&Instance, &str)> =
        instances.iter().flat_map(|i| i.inputs.iter().map(move |line| (i, line.as_str()))).collect();
    info!(instances = instances.len(), jobs = jobs.len(), workers = config.workers, "building");

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start workers: {e}")))?;
    let outcomes: Vec<JobOutcome> =
        pool.install(|| jobs.par_iter().map(|(inst, line)| run_job(config, gateway, inst, line)).collect::<Result<_>>())?;

    std::fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let report_path = filter_report_path(config);
    std::fs::write(&report_path, "").map_err(|e| Error::io(&report_path, e))?;
    let all_entries: Vec<FilterReportEntry> = outcomes.iter().flat_map(|o| o.report.iter().cloned()).collect();
    append_report(&report_path, &all_entries)?;

    let mut outputs = Vec::new();
    for &variant in &config.variants {
        let mut records = Vec::new();
        let mut rejections: BTreeMap<String, usize> = BTreeMap::new();
        let mut seen = HashSet::new();
        for outcome in &outcomes {
            for (v, result) in &outcome.per_variant {
                if *v != variant {
                    continue;
                }
                match result {
                    Ok(r) if seen.insert(r.record_id.clone()) => records.push(r.clone()),
                    Ok(_) => *rejections.entry("duplicate_record".into()).or_insert(0) += 1,
                    Err(rule) => *rejections.entry(rule.clone()).or_insert(0) += 1,
                }
            }
        }
        if records.is_empty() {
            warn!(%variant, ?rejections, "every job was rejected");
        }
        let ctx = EmitContext {
            submitted: jobs.len(),
            rejections,
            config: config.snapshot(),
            corpus_hash: hash.clone(),
            limits: config.filter.limits,
        };
        let path = dataset_path(config, variant);
        let manifest = emit_jsonl(&records, &path, &ctx)?;
        info!(%variant, emitted = manifest.emitted, path = %path.display(), "dataset written");
        outputs.push(VariantOutput { variant, dataset_path: path, manifest });
    }
    Ok(BuildSummary { outputs, filter_report: report_path })
}

/// Line offset implied by the first traced source line of a raw trace.
fn infer_line_offset(trace_text: &str, code: &str) -> Option<u32> {
    let (num, text) = trace_text.lines().find_map(|l| {
        let (n, rest) = l.split_once(" | ")?;
        Some((n.trim().parse::<u32>().ok()?, rest.trim_end()))
    })?;
    let index = code.split('\n').position(|l| l.trim_end() == text)? as u32 + 1;
    num.checked_sub(index)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub entries: Vec<VerificationEntry>,
    pub failed: Vec<String>,
}

impl VerifyReport {
    pub fn correct_fraction(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        let ok = self.entries.iter().filter(|e| e.output_correct).count();
        ok as f64 / self.entries.len() as f64
    }
}

fn verify_one(rec: &crate::dataset::JsonlRecord, limits: &ExecutionLimits) -> VerificationEntry {
    let mut entry =
        VerificationEntry { record_id: rec.record_id.clone(), output_correct: false, grounded: false, violations: vec![] };
    let code = match rec.variant {
        Variant::CodeGen => Some(rec.completion.clone()),
        v => code_from_prompt(v, &rec.prompt),
    };
    let Some(code) = code else {
        entry.violations.push("prompt does not contain the solution code".into());
        return entry;
    };
    if crate::dataset::record_id(&rec.meta.question, &code, &rec.meta.input) != rec.record_id {
        entry.violations.push("record_id does not match its content".into());
        return entry;
    }
    let trace = match reexecute(&code, &rec.meta.input, limits) {
        Ok(t) => t,
        Err(e) => {
            entry.violations.push(format!("re-execution failed: {e}"));
            return entry;
        }
    };
    let Some(truth) = trace.final_return().map(str::to_string) else {
        entry.violations.push("re-execution did not complete".into());
        return entry;
    };
    let output_ok = rec.meta.output == truth;
    if !output_ok {
        entry.violations.push(format!("recorded output {} but execution gives {truth}", rec.meta.output));
    }
    match rec.variant {
        Variant::Ours | Variant::CodeioStyle => {
            let (steps, final_answer_text) = segment(&rec.completion);
            let nl = NlTrace { steps, final_answer_text, mode: NlMode::RuleBased };
            let answer_ok = output_matches(&nl.final_answer_text, &truth);
            if !answer_ok {
                entry.violations.push("final answer does not state the output".into());
            }
            entry.output_correct = output_ok && answer_ok;
            if rec.variant == Variant::Ours {
                let report = check_groundedness(&nl, &trace, &rec.meta.question);
                entry.grounded = report.is_grounded();
                entry.violations.extend(report.violations.iter().map(|v| format!("step {}: {}", v.step_index + 1, v.literal)));
            } else {
                entry.grounded = true;
            }
        }
        Variant::RawTrace => {
            let offset = infer_line_offset(&rec.completion, &code).unwrap_or(0);
            let rendered = parse_with(&code, &ParseOptions { program_id: None, line_offset: offset })
                .ok()
                .and_then(|p| reexecute_program(&p, &rec.meta.input, limits))
                .map(|t| render_trace(&t));
            let trace_ok = rendered.as_deref().map(|r| r.trim_end_matches('\n')) == Some(rec.completion.as_str());
            if !trace_ok {
                entry.violations.push("completion differs from the re-rendered trace".into());
            }
            entry.output_correct = output_ok;
            entry.grounded = trace_ok;
        }
        Variant::CodeGen => {
            entry.output_correct = output_ok;
            entry.grounded = true;
        }
    }
    entry
}

fn reexecute_program(program: &SourceProgram, input_repr: &str, limits: &ExecutionLimits) -> Option<ExecutionTrace> {
    let input = crate::runtime::bindings_from_repr(input_repr).ok()?;
    execute(program, &input, limits).ok().map(|r| r.trace)
}

/// Re-checks every record of an emitted dataset against a fresh execution.
pub fn verify_dataset(path: &Path, limits: &ExecutionLimits) -> Result<VerifyReport> {
    let records = read_jsonl(path)?;
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let entries: Vec<VerificationEntry> = records.par_iter().map(|r| verify_one(r, limits)).collect();
    let failed =
        entries.iter().filter(|e| !e.output_correct || !e.grounded).map(|e| e.record_id.clone()).collect();
    Ok(VerifyReport { entries, failed })
}

/// Renders the raw-trace prompt text for a program, input and question,
/// as used by the translate command.
pub fn translation_user_text(question: &str, trace: &ExecutionTrace) -> Result<String> {
    let text = render_trace(trace);
    crate::naturalizer::build_translation_prompt(question, &crate::verifier::input_repr_of(trace), &text)
        .map(|p| p.user_text)
}
