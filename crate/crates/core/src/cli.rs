//! Command-line front end: `index`, `retrieve`, `complete`, `eval`.
//!
//! Exit codes: 0 success, 1 fatal I/O, 2 usage or bad input, 3 embedding or
//! completer transport failure, 4 prompt budget exhausted.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::ccg::Language;
use crate::completer::{CompleteError, Completer, CompletionInput, EchoCompleter, HttpCompleter};
use crate::config::{EngineConfig, ProviderKind, CONFIG_ENV};
use crate::engine::{build_provider, Engine, EngineError};
use crate::eval::{load_samples, run_eval, write_results, EvalError};
use crate::store::{index_repository, load_index, IndexConfig, StoreError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TRANSPORT: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "saracoder", version, about = "Retrieval-augmented context for repository-level code completion")]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a repository and write its snippet index.
    Index {
        repo: PathBuf,
        /// Index directory (default: <repo>/.saracoder).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Rank snippets for an unfinished file and print the prompt.
    Retrieve {
        #[command(flatten)]
        request: Request,
        /// Print ranked candidates with per-stage scores as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Assemble the prompt and ask a completer for the continuation.
    Complete {
        #[command(flatten)]
        request: Request,
        #[command(flatten)]
        backend: Backend,
        /// Also write the prompt to this file.
        #[arg(long)]
        dump_prompt: Option<PathBuf>,
    },
    /// Score completions over a JSONL sample file.
    Eval {
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        samples: PathBuf,
        #[command(flatten)]
        backend: Backend,
        /// Per-sample results as JSONL.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
}

#[derive(Debug, Args)]
pub struct Request {
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Unfinished source; `-` or absent reads stdin.
    #[arg(long)]
    pub context: Option<PathBuf>,
    /// Repository-relative path of the unfinished file (resolves relative imports).
    #[arg(long, default_value = "__context__.py")]
    pub file: String,
    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Backend {
    /// Completer base URL (POST /complete).
    #[arg(long)]
    pub completer: Option<String>,
    /// Offline completer; `echo` returns the line after the top snippet.
    #[arg(long, value_parser = ["echo"])]
    pub stub: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Tuning {
    #[arg(long)]
    pub language: Option<Language>,
    #[arg(long)]
    pub hops: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub expansion_p: Option<usize>,
    #[arg(long)]
    pub quantile_q: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub max_tokens: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// `local` or `remote`.
    #[arg(long, value_parser = parse_provider)]
    pub embedder: Option<ProviderKind>,
    #[arg(long)]
    pub embed_endpoint: Option<String>,
    #[arg(long)]
    pub disable_sad: bool,
    #[arg(long)]
    pub disable_rap: bool,
    #[arg(long)]
    pub disable_tpm: bool,
    #[arg(long)]
    pub disable_dar: bool,
    /// All four refinement stages off.
    #[arg(long)]
    pub disable_hf_op: bool,
    /// No import-derived prompt section.
    #[arg(long)]
    pub disable_eaid: bool,
    /// Rank without the structural term.
    #[arg(long)]
    pub disable_ccg: bool,
    /// Print the effective config as TOML and exit.
    #[arg(long)]
    pub print_config: bool,
}

fn parse_provider(s: &str) -> Result<ProviderKind, String> {
    match s {
        "local" => Ok(ProviderKind::Local),
        "remote" => Ok(ProviderKind::Remote),
        other => Err(format!("unknown embedder `{other}` (expected local or remote)")),
    }
}

impl Tuning {
    pub fn apply(&self, config: &mut EngineConfig) {
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag.clone() { config.$($field).+ = v; })*
            };
        }
        set!(
            language => language,
            hops => hops,
            window => window,
            top_k => pipeline.top_k,
            expansion_p => pipeline.expansion_p,
            quantile_q => pipeline.quantile_q,
            gamma => pipeline.gamma,
            alpha => pipeline.alpha,
            lambda => pipeline.lambda,
            budget => budget,
            max_tokens => max_tokens,
            workers => workers,
            embedder => embedding.provider,
        );
        if let Some(endpoint) = &self.embed_endpoint {
            config.embedding.endpoint = Some(endpoint.clone());
        }
        let stages = &mut config.pipeline.stages;
        stages.sad &= !(self.disable_sad || self.disable_hf_op);
        stages.rap &= !(self.disable_rap || self.disable_hf_op);
        stages.tpm &= !(self.disable_tpm || self.disable_hf_op);
        stages.dar &= !(self.disable_dar || self.disable_hf_op);
        config.eaid &= !self.disable_eaid;
        config.pipeline.structure &= !self.disable_ccg;
    }
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl ToString) -> Self {
        Self { code, message: message.to_string() }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        let code = match e {
            StoreError::Io { .. } => EXIT_IO,
            _ => EXIT_USAGE,
        };
        Failure::new(code, e)
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Embed(_) => Failure::new(EXIT_TRANSPORT, e),
            EngineError::Budget(_) => Failure::new(EXIT_BUDGET, e),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let code = match e {
            EvalError::Pool(_) => EXIT_IO,
            EvalError::Io { .. } | EvalError::Sample { .. } | EvalError::NoSamples => EXIT_USAGE,
        };
        Failure::new(code, e)
    }
}

impl From<CompleteError> for Failure {
    fn from(e: CompleteError) -> Self {
        Failure::new(EXIT_TRANSPORT, e)
    }
}

fn io_failure(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::new(EXIT_IO, format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code. Output goes to the given writers.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(rendered.as_bytes()) } else { stderr.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn load_config(path: Option<&Path>, tuning: &Tuning) -> Result<EngineConfig, Failure> {
    let mut config = match path {
        Some(p) => EngineConfig::load(p).map_err(|e| Failure::new(EXIT_USAGE, e))?,
        None => EngineConfig::default(),
    };
    tuning.apply(&mut config);
    config.validate().map_err(|e| Failure::new(EXIT_USAGE, e))?;
    Ok(config)
}

fn print_config(config: &EngineConfig, stdout: &mut dyn Write) -> Result<(), Failure> {
    stdout.write_all(config.to_toml().as_bytes()).map_err(|e| Failure::new(EXIT_IO, e))
}

fn open_engine(index: Option<&Path>, mut config: EngineConfig) -> Result<Engine, Failure> {
    let index = index
        .map(Path::to_path_buf)
        .or_else(|| config.paths.index.clone())
        .ok_or_else(|| Failure::new(EXIT_USAGE, "no index given (use --index or paths.index)"))?;
    let store = load_index(&index).map_err(|e| Failure::new(EXIT_USAGE, e))?;
    if let Some(m) = store.manifest() {
        // queries must be sliced like the index
        if (m.language, m.h, m.w) != (config.language, config.hops, config.window) {
            log::info!("using language/h/w from the index manifest: {}/{}/{}", m.language, m.h, m.w);
        }
        config.language = m.language;
        config.hops = m.h;
        config.window = m.w;
    }
    config.paths.index = Some(index);
    let provider = build_provider(&config.embedding);
    Ok(Engine::new(store, provider, config))
}

fn read_context(path: Option<&Path>) -> Result<String, Failure> {
    match path {
        Some(p) if p != Path::new("-") => fs::read_to_string(p).map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", p.display()))),
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(|e| Failure::new(EXIT_IO, e))?;
            Ok(s)
        }
    }
}

fn backend(b: &Backend) -> Box<dyn Completer> {
    match &b.completer {
        Some(url) => Box::new(HttpCompleter::new(url)),
        None => Box::new(EchoCompleter),
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    let config_path = cli.config.as_deref();
    match cli.command {
        Command::Index { repo, out, tuning } => {
            let config = load_config(config_path, &tuning)?;
            if tuning.print_config {
                return print_config(&config, stdout);
            }
            if !repo.is_dir() {
                return Err(Failure::new(EXIT_USAGE, format!("{}: not a directory", repo.display())));
            }
            let out = out.unwrap_or_else(|| repo.join(".saracoder"));
            let index_config = IndexConfig { language: config.language, hops: config.hops, window: config.window };
            let manifest = index_repository(&repo, &out, &index_config)?;
            writeln!(
                stdout,
                "indexed {} files, {} snippets, {} skipped -> {}",
                manifest.file_count,
                manifest.snippet_count,
                manifest.skipped_files.len(),
                out.display()
            )
            .map_err(io_failure(&out))
        }
        Command::Retrieve { request, json } => {
            let config = load_config(config_path, &request.tuning)?;
            if request.tuning.print_config {
                return print_config(&config, stdout);
            }
            let engine = open_engine(request.index.as_deref(), config)?;
            let context = read_context(request.context.as_deref())?;
            let retrieval = engine.retrieve(&context, &request.file)?;
            let text = if json {
                let body = serde_json::json!({
                    "candidates": retrieval.candidates,
                    "prompt_tokens": retrieval.prompt.approx_tokens,
                    "dropped_snippets": retrieval.prompt.dropped_snippets,
                    "pe_section": retrieval.prompt.pe_section,
                });
                serde_json::to_string_pretty(&body).expect("json value serializes") + "\n"
            } else {
                retrieval.prompt.text
            };
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::new(EXIT_IO, e))
        }
        Command::Complete { request, backend: b, dump_prompt } => {
            let config = load_config(config_path, &request.tuning)?;
            if request.tuning.print_config {
                return print_config(&config, stdout);
            }
            let engine = open_engine(request.index.as_deref(), config)?;
            let context = read_context(request.context.as_deref())?;
            let retrieval = engine.retrieve(&context, &request.file)?;
            if let Some(path) = &dump_prompt {
                fs::write(path, &retrieval.prompt.text).map_err(io_failure(path))?;
            }
            let input = CompletionInput {
                prompt: &retrieval.prompt.text,
                max_tokens: engine.config().max_tokens,
                top_snippet: retrieval.candidates.first().and_then(|c| engine.store().get(&c.snippet_id)),
                store: engine.store(),
            };
            let completion = backend(&b).complete(&input)?;
            writeln!(stdout, "{completion}").map_err(|e| Failure::new(EXIT_IO, e))
        }
        Command::Eval { index, samples, backend: b, out, tuning } => {
            let config = load_config(config_path, &tuning)?;
            if tuning.print_config {
                return print_config(&config, stdout);
            }
            let samples = load_samples(&samples)?;
            let workers = config.workers;
            let engine = open_engine(index.as_deref(), config)?;
            let (report, results) = run_eval(&samples, &engine, backend(&b).as_ref(), workers)?;
            if let Some(path) = &out {
                let file = fs::File::create(path).map_err(io_failure(path))?;
                write_results(&results, io::BufWriter::new(file)).map_err(io_failure(path))?;
            }
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            writeln!(stdout, "{text}").map_err(|e| Failure::new(EXIT_IO, e))
        }
    }
}
