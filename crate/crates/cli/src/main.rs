use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracecot::dataset::Variant;
use tracecot::filters::FilterReportEntry;
use tracecot::gateway::{Gateway, GatewayError};
use tracecot::lang::{parse_with, ParseOptions, SourceProgram};
use tracecot::naturalizer::{build_translation_prompt, naturalize_rule_based};
use tracecot::pipeline::{self, NaturalizerMode, PipelineConfig};
use tracecot::runtime::{bindings_from_json, execute, render_trace, ExecutionTrace};
use tracecot::verifier::{input_repr_of, token_stats, CompletionSample};
use tracecot::{samples, Error};

#[derive(Parser)]
#[command(name = "tracecot", version, about = "Execution-grounded step-by-step data from small programs")]
struct Cli {
    /// TOML file mirroring the pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the rendered execution trace of one program on one input.
    Trace(ProgramArgs),
    /// Run the corpus through the filter stages and write the filter report.
    Filter(CorpusArgs),
    /// Print a rule-based step-by-step rationale for one program run.
    Naturalize(ProgramArgs),
    /// Translate one program run into prose through the configured model endpoint.
    Translate {
        #[command(flatten)]
        program: ProgramArgs,
        /// Print the translation prompt instead of sending it.
        #[arg(long)]
        dry_run: bool,
    },
    /// Build the datasets for a corpus.
    Build(CorpusArgs),
    /// Re-check an emitted dataset against fresh executions.
    Verify {
        dataset: PathBuf,
        /// Where to write the per-record report; defaults to stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Token statistics over a JSON Lines file of {text, finish_reason}.
    Stats {
        completions: PathBuf,
        #[arg(long, default_value_t = 32768)]
        max_tokens: usize,
    },
}

#[derive(Args)]
struct ProgramArgs {
    /// Bundled program name (base7, josephus, permutations) or a source file path.
    #[arg(long)]
    program: String,
    /// Argument bindings as a JSON object.
    #[arg(long)]
    input: String,
    /// Shift rendered line numbers; bundled programs carry their own default.
    #[arg(long)]
    line_offset: Option<u32>,
    #[arg(long, default_value = "")]
    question: String,
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Variant to build; repeat for several.
    #[arg(long, value_parser = parse_variant)]
    variant: Vec<Variant>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<NaturalizerMode>,
    #[arg(long)]
    max_trace_lines: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

fn parse_mode(s: &str) -> Result<NaturalizerMode, String> {
    s.parse()
}

/// A failure with its exit code and machine-readable code.
struct Failure {
    exit: u8,
    code: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let exit = match &e {
            Error::Config(_) | Error::Gateway(GatewayError::Config(_)) => 3,
            _ => 1,
        };
        Failure { exit, code: e.code().to_string(), message: e.to_string() }
    }
}

impl From<GatewayError> for Failure {
    fn from(e: GatewayError) -> Self {
        Failure::from(Error::Gateway(e))
    }
}

fn config_failure(message: String) -> Failure {
    Failure { exit: 3, code: "config_error".into(), message }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    let mut config = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| config_failure(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| config_failure(format!("{}: {}", p.display(), e.message())))?
        }
        None => PipelineConfig::default(),
    };
    config.gateway = config.gateway.with_env();
    Ok(config)
}

fn apply(config: &mut PipelineConfig, args: &CorpusArgs) {
    if let Some(c) = &args.corpus {
        config.corpus_dir = c.clone();
    }
    if let Some(o) = &args.output {
        config.output_dir = o.clone();
    }
    if !args.variant.is_empty() {
        config.variants = args.variant.clone();
    }
    if let Some(m) = args.mode {
        config.mode = m;
    }
    if let Some(n) = args.max_trace_lines {
        config.filter.max_trace_lines = n;
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
}

fn load_program(args: &ProgramArgs) -> Result<SourceProgram, Failure> {
    let (source, default_offset) = match samples::bundled(&args.program) {
        Some(src) => (src.to_string(), samples::bundled_line_offset(&args.program)),
        None => {
            let path = Path::new(&args.program);
            (std::fs::read_to_string(path).map_err(|e| Failure::from(Error::io(path, e)))?, 0)
        }
    };
    let opts = ParseOptions { program_id: Some(args.program.clone()), line_offset: args.line_offset.unwrap_or(default_offset) };
    parse_with(&source, &opts).map_err(|e| Error::Parse(e).into())
}

fn run_program(args: &ProgramArgs, config: &PipelineConfig) -> Result<ExecutionTrace, Failure> {
    let program = load_program(args)?;
    let json: serde_json::Value =
        serde_json::from_str(&args.input).map_err(|e| Failure::from(Error::Input(format!("--input: {e}"))))?;
    let input = bindings_from_json(&json).map_err(|e| Failure::from(Error::Input(e)))?;
    let run = execute(&program, &input, &config.filter.limits).map_err(|e| Failure::from(Error::Input(e.to_string())))?;
    Ok(run.trace)
}

fn gateway(config: &PipelineConfig) -> Result<Gateway, Failure> {
    Ok(Gateway::new(config.gateway.clone())?)
}

fn to_json_line<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

fn filter_corpus(config: &PipelineConfig) -> Result<(), Failure> {
    let instances = pipeline::load_corpus(&config.corpus_dir)?;
    let mut entries: Vec<FilterReportEntry> = Vec::new();
    let mut accepted = 0usize;
    let mut submitted = 0usize;
    let mut rejections = std::collections::BTreeMap::<String, usize>::new();
    for inst in &instances {
        for line in &inst.inputs {
            submitted += 1;
            match pipeline::filter_job(inst, line, &config.filter, &mut entries) {
                Ok(_) => accepted += 1,
                Err(rule) => *rejections.entry(rule).or_insert(0) += 1,
            }
        }
    }
    std::fs::create_dir_all(&config.output_dir).map_err(|e| Failure::from(Error::io(&config.output_dir, e)))?;
    let path = pipeline::filter_report_path(config);
    std::fs::write(&path, "").map_err(|e| Failure::from(Error::io(&path, e)))?;
    tracecot::filters::append_report(&path, &entries)?;
    let summary = serde_json::json!({
        "submitted": submitted,
        "accepted": accepted,
        "rejections": rejections,
        "report": path.display().to_string(),
    });
    println!("{summary}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Trace(args) => {
            print!("{}", render_trace(&run_program(&args, &config)?));
        }
        Command::Naturalize(args) => {
            let trace = run_program(&args, &config)?;
            println!("{}", naturalize_rule_based(&args.question, &trace)?.to_completion());
        }
        Command::Translate { program, dry_run } => {
            let trace = run_program(&program, &config)?;
            let text = render_trace(&trace);
            if dry_run {
                let prompt = build_translation_prompt(&program.question, &input_repr_of(&trace), &text)?;
                println!("{}", prompt.user_text);
            } else {
                let gw = gateway(&config)?;
                let nl = tracecot::gateway::translate(
                    &gw,
                    &program.question,
                    &input_repr_of(&trace),
                    &text,
                    &trace,
                    &config.sampling,
                )?;
                println!("{}", nl.to_completion());
            }
        }
        Command::Filter(args) => {
            apply(&mut config, &args);
            config.filter.check()?;
            filter_corpus(&config)?;
        }
        Command::Build(args) => {
            apply(&mut config, &args);
            config.check()?;
            let gw = match config.mode {
                NaturalizerMode::Llm => Some(gateway(&config)?),
                NaturalizerMode::RuleBased => None,
            };
            let summary = pipeline::build(&config, gw.as_ref())?;
            for out in &summary.outputs {
                let line = serde_json::json!({
                    "variant": out.variant,
                    "dataset": out.dataset_path.display().to_string(),
                    "emitted": out.manifest.emitted,
                    "submitted": out.manifest.submitted,
                    "rejections": out.manifest.rejections,
                });
                println!("{line}");
            }
        }
        Command::Verify { dataset, report } => {
            let result = pipeline::verify_dataset(&dataset, &config.filter.limits)?;
            let body: String = result.entries.iter().map(|e| to_json_line(e) + "\n").collect();
            match report {
                Some(path) => std::fs::write(&path, body).map_err(|e| Failure::from(Error::io(&path, e)))?,
                None => print!("{body}"),
            }
            if !result.failed.is_empty() {
                return Err(Error::VerificationFailed(result.failed).into());
            }
        }
        Command::Stats { completions, max_tokens } => {
            let text = std::fs::read_to_string(&completions).map_err(|e| Failure::from(Error::io(&completions, e)))?;
            let samples: Vec<CompletionSample> = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .enumerate()
                .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Input(format!("line {}: {e}", i + 1))))
                .collect::<Result<_, _>>()?;
            println!("{}", to_json_line(&token_stats(&samples, max_tokens)?));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_env("TRACECOT_LOG"))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let message = f.message.replace('\n', " ");
            eprintln!("error: {}: {message}", f.code);
            ExitCode::from(f.exit)
        }
    }
}
