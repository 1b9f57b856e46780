use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use clover_cli::commands::{self, Output, ReplayOptions};
use clover_cli::{Config, Format, Overrides};

#[derive(Parser)]
#[command(name = "clover", version, about = "Trace-based assistant for data-warehouse schema design")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file.
    #[arg(long, global = true, env = "DWCLOVER_CONFIG")]
    config: Option<PathBuf>,
    /// Corpus directory of `<id>.trace` files.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    min_similarity: Option<f64>,
    #[arg(long, global = true)]
    min_nodes: Option<usize>,
    #[arg(long, global = true)]
    max_candidates: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a session script through the assistant, printing each suggestion.
    Replay {
        script: PathBuf,
        /// Store the session in the corpus when every action applied and the draft validates.
        #[arg(long)]
        commit: bool,
        /// Write the resulting canonical trace document here.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Leave-one-out evaluation of the corpus.
    Eval,
    /// Render a trace document as Graphviz DOT.
    ExportDot { trace: PathBuf },
    /// Corpus management.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
    /// Run the HTTP service.
    Serve {
        /// Listen address, e.g. 127.0.0.1:8080.
        #[arg(long)]
        listen: Option<String>,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Store trace documents.
    Add {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
    /// Counts per domain, model and level.
    Stats,
}

fn run(cli: Cli) -> Result<Option<Output>> {
    let g = &cli.global;
    let listen = match &cli.command {
        Command::Serve { listen } => listen.clone(),
        _ => None,
    };
    let overrides = Overrides {
        corpus_dir: g.corpus.clone(),
        listen,
        min_similarity: g.min_similarity,
        min_nodes: g.min_nodes,
        max_candidates: g.max_candidates,
    };
    let cfg = Config::load(g.config.as_deref(), &overrides)?;
    let out = match cli.command {
        Command::Replay {
            script,
            commit,
            trace_out,
        } => commands::replay(&cfg, &script, &ReplayOptions { commit, trace_out }, g.format)?,
        Command::Eval => commands::eval(&cfg, g.format)?,
        Command::ExportDot { trace } => commands::export_dot(&trace)?,
        Command::Corpus { command } => match command {
            CorpusCommand::Add { traces } => commands::corpus_add(&cfg, &traces, g.format)?,
            CorpusCommand::Stats => commands::corpus_stats(&cfg, g.format)?,
        },
        Command::Serve { .. } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(commands::serve(&cfg))?;
            return Ok(None);
        }
    };
    Ok(Some(out))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(Some(out)) => {
            print!("{}", out.text);
            if out.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
