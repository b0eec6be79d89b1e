use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use scideator::bench::{run_benchmark, BenchOptions, BenchReport, PaperSource};
use scideator::domain::FacetId;
use scideator::ideas::FacetSelection;
use scideator::novelty::{load_examples, Variant};
use scideator::session::{Engine, EngineError, EventKind, PaperInput, RunMode, SessionDir, SessionStore, StoreError};

use crate::app::{router, AppState};
use crate::config::{ConfigError, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "scideator", version, about = "Facet-based research ideation with novelty checking")]
pub struct Cli {
    /// live, replay, record or offline.
    #[arg(long, global = true)]
    pub mode: Option<RunMode>,
    /// TOML (or .json) configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory holding `corpus/` and `llm/` fixtures.
    #[arg(long, global = true)]
    pub fixtures: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a session from a topic and 1 to 5 papers.
    Init(InitArgs),
    /// Run one idea round.
    Ideate(IdeateArgs),
    /// Assess one idea's novelty.
    Assess(AssessArgs),
    /// Score novelty variants on a labeled set.
    Bench(BenchArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct InitArgs {
    #[arg(long)]
    pub topic: String,
    /// A corpus id, or a JSON file holding an array of
    /// `{"corpus_id"}` / `{"title", "abstract"}` objects. Repeatable.
    #[arg(long = "papers", required = true, num_args = 1..)]
    pub papers: Vec<String>,
    /// Session directory; defaults to `<data_dir>/<session id>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IdeateArgs {
    /// Session directory or its `session.json`.
    #[arg(long)]
    pub session: PathBuf,
    #[arg(long = "select-purpose")]
    pub purposes: Vec<String>,
    #[arg(long = "select-mechanism")]
    pub mechanisms: Vec<String>,
    #[arg(long = "select-eval")]
    pub evaluations: Vec<String>,
    #[arg(long, default_value = "")]
    pub custom_instructions: String,
}

#[derive(Debug, Args)]
pub struct AssessArgs {
    #[arg(long)]
    pub session: PathBuf,
    #[arg(long)]
    pub idea: String,
    #[arg(long, default_value = "complete")]
    pub variant: Variant,
    /// Papers kept after reranking.
    #[arg(long)]
    pub k: Option<usize>,
    /// Papers kept after the embedding filter.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Labeled ideas JSON; the built-in set when omitted.
    #[arg(long)]
    pub labeled: Option<PathBuf>,
    /// One variant, or `all`.
    #[arg(long, default_value = "all")]
    pub variant: String,
    #[arg(long, value_enum, default_value = "table")]
    pub report: ReportFormat,
    /// Also write the JSON reports here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "retrieval")]
    pub paper_source: PaperSource,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    /// 1 for domain and runtime errors. Usage errors exit 2 through clap.
    pub fn exit_code(&self) -> i32 {
        1
    }
}

impl Cli {
    fn service_config(&self) -> Result<ServiceConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => ServiceConfig::load(p)?,
            None => ServiceConfig::default(),
        };
        if let Some(m) = self.mode {
            c.engine.mode = m;
        }
        if let Some(f) = &self.fixtures {
            c.engine.fixtures_dir = f.clone();
        }
        if let Some(s) = self.seed {
            c.engine.seed = s;
        }
        Ok(c)
    }
}

pub async fn run(cli: Cli, stdout: &mut dyn std::io::Write) -> Result<(), CliError> {
    let mut config = cli.service_config()?;
    match cli.command {
        Command::Init(a) => {
            let engine = Engine::from_config(&config.engine)?;
            let inputs = paper_inputs(&a.papers)?;
            let (state, event) = engine.create(&a.topic, &inputs).await?;
            let dir = SessionDir::new(a.out.unwrap_or_else(|| config.server.data_dir.join(&state.session_id)));
            if !dir.exists() {
                dir.append(&event, &state)?;
            }
            print_json(
                stdout,
                &serde_json::json!({
                    "session_id": state.session_id,
                    "dir": dir.path(),
                    "papers": state.papers.len(),
                    "facets": state.facets.len(),
                }),
            )
        }
        Command::Ideate(a) => {
            let engine = Engine::from_config(&config.engine)?;
            let dir = session_dir(&a.session);
            let mut state = dir.load()?;
            let ids = |v: Vec<String>| v.into_iter().map(FacetId::from_raw).collect::<BTreeSet<_>>();
            let selection = FacetSelection {
                purpose_ids: ids(a.purposes),
                mechanism_ids: ids(a.mechanisms),
                evaluation_ids: ids(a.evaluations),
                custom_instructions: a.custom_instructions,
            };
            let m = engine.generate_ideas(&state, &selection).await?;
            let event = engine.commit(&mut state, m, Some(&dir))?;
            let EventKind::IdeasGenerated { round, ideas } = event.kind else { unreachable!() };
            print_json(stdout, &serde_json::json!({ "round": round, "ideas": ideas }))
        }
        Command::Assess(a) => {
            if let Some(k) = a.k {
                config.engine.novelty.rerank_top_k = k;
            }
            if let Some(n) = a.n {
                config.engine.novelty.embed_top_n = n;
            }
            let engine = Engine::from_config(&config.engine)?;
            let dir = session_dir(&a.session);
            let mut state = dir.load()?;
            let m = engine.assess(&state, &a.idea, a.variant).await?;
            engine.commit(&mut state, m, Some(&dir))?;
            print_json(stdout, &state.assessments[&a.idea])
        }
        Command::Bench(a) => {
            let engine = Engine::from_config(&config.engine)?;
            let set = match &a.labeled {
                Some(p) => load_examples(p).map_err(CliError::Other)?,
                None => engine.examples().to_vec(),
            };
            let variants: Vec<Variant> = if a.variant == "all" {
                Variant::ALL.to_vec()
            } else {
                vec![a.variant.parse().map_err(CliError::Other)?]
            };
            let checker = engine.checker();
            let mut reports: Vec<BenchReport> = Vec::new();
            for variant in variants {
                let opts = BenchOptions { variant, papers: a.paper_source, ..Default::default() };
                reports.push(run_benchmark(&checker, &set, opts).await.map_err(|e| CliError::Other(e.to_string()))?);
            }
            if let Some(out) = &a.out {
                write_json(out, &reports)?;
            }
            match a.report {
                ReportFormat::Json => print_json(stdout, &reports),
                ReportFormat::Table => {
                    for r in &reports {
                        writeln!(stdout, "{}", r.table()).map_err(|e| CliError::Other(e.to_string()))?;
                    }
                    Ok(())
                }
            }
        }
        Command::Serve(a) => {
            if let Some(h) = a.host {
                config.server.host = h;
            }
            if let Some(p) = a.port {
                config.server.port = p;
            }
            if let Some(d) = a.data_dir {
                config.server.data_dir = d;
            }
            serve(config).await
        }
    }
}

async fn serve(config: ServiceConfig) -> Result<(), CliError> {
    let engine = Engine::from_config(&config.engine)?;
    let app = AppState::open(engine, SessionStore::new(&config.server.data_dir), config.server.workers)?;
    let addr = format!("{}:{}", config.server.host, config.server.port);
    let listener = tokio::net::TcpListener::bind(&addr).await.map_err(|e| CliError::Other(format!("{addr}: {e}")))?;
    tracing::info!(%addr, mode = ?config.engine.mode, "listening");
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::Other(e.to_string()))
}

/// A session directory, or any file inside one such as `session.json`.
fn session_dir(path: &Path) -> SessionDir {
    match path.parent() {
        Some(parent) if path.is_file() => SessionDir::new(parent),
        _ => SessionDir::new(path),
    }
}

/// Each value is a JSON file of paper inputs when such a file exists,
/// otherwise a corpus id.
pub fn paper_inputs(values: &[String]) -> Result<Vec<PaperInput>, CliError> {
    let mut out = Vec::new();
    for v in values {
        let path = Path::new(v);
        if path.is_file() {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Other(format!("{v}: {e}")))?;
            let papers: Vec<PaperInput> =
                serde_json::from_str(&text).map_err(|e| CliError::Other(format!("{v}: {e}")))?;
            out.extend(papers);
        } else {
            out.push(PaperInput::id(v.clone()));
        }
    }
    Ok(out)
}

fn print_json<T: Serialize + ?Sized>(stdout: &mut dyn std::io::Write, value: &T) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(value).expect("serializable");
    writeln!(stdout, "{body}").map_err(|e| CliError::Other(e.to_string()))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, body).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

/// Parses `args`, runs the command and returns the process exit code.
pub async fn main_with<I, T>(args: I, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli, stdout).await {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
