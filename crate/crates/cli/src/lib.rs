//! Command-line front end: `lpg ingest | embed | evaluate | predict`.

mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lpg_core::ingest::IngestMode;

pub use commands::EmbedTarget;
use config::{GraphSource, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "lpg",
    version,
    about = "Text-embedding analysis for labeled property graphs"
)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Skip malformed records with a warning instead of failing.
    #[arg(long, global = true)]
    lenient: bool,
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GraphArgs {
    /// JSON Lines graph file.
    #[arg(long, conflicts_with_all = ["nodes", "edges"])]
    jsonl: Option<PathBuf>,
    /// Nodes CSV (`id,labels,...`).
    #[arg(long, requires = "edges")]
    nodes: Option<PathBuf>,
    /// Edges CSV (`id,src,dst,rel_type,...`).
    #[arg(long, requires = "nodes")]
    edges: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and validate a graph, optionally re-exporting it as JSON Lines.
    Ingest {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed node or relation texts into the configured cache.
    Embed {
        #[arg(long, value_enum)]
        target: EmbedTarget,
    },
    /// Assemble the configured task, train every classifier and report metrics.
    Evaluate,
    /// Score candidate pairs with a saved relation model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// CSV with header `src,dst`.
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs --config".into()))?;
    RunConfig::load(path, cli.seed)
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    let mode = if cli.lenient {
        IngestMode::Lenient
    } else {
        IngestMode::Strict
    };
    match &cli.command {
        Command::Ingest { graph, out } => {
            let source = GraphSource {
                jsonl: graph.jsonl.clone(),
                nodes: graph.nodes.clone(),
                edges: graph.edges.clone(),
            };
            commands::ingest(&source, mode, out.as_deref())
        }
        Command::Embed { target } => commands::embed(&load_config(cli)?, mode, *target),
        Command::Evaluate => commands::evaluate(&load_config(cli)?, mode),
        Command::Predict { model, pairs, out } => {
            commands::predict(&load_config(cli)?, mode, model, pairs, out.as_ref())
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.verbose { "debug" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match execute(&cli).and_then(|out| commands::print_line(&out)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
