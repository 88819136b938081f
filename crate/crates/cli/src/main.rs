//! `refscore`: sample generation, training, scoring and evaluation of a
//! reference-free summary scorer.

mod commands;
mod config;
mod fail;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use refscore::sampler::Method;

use commands::{Run, ScoreInput};
use config::RunConfig;
use fail::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "refscore", version, about = "Reference-free summary scoring")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Single worker thread. Outputs are identical either way.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split the corpus and write labeled samples for each split.
    GenSamples {
        /// Overrides `sampler.method`.
        #[arg(long)]
        method: Option<Method>,
    },
    /// Train a scorer on the generated samples.
    Train,
    /// Evaluate a model on the test samples.
    Eval {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train one model per domain and evaluate each on every domain.
    CrossDomain,
    /// Correlate model set scores with human judgments.
    Align {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Correlate ROUGE against human judgments.
    Rouge,
    /// Score summaries against documents with a saved model.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, requires = "summary", conflicts_with = "batch")]
        doc: Option<PathBuf>,
        #[arg(long, requires = "doc")]
        summary: Option<PathBuf>,
        /// JSONL file of `{"doc": ..., "summary": ...}` objects.
        #[arg(long, required_unless_present = "doc")]
        batch: Option<PathBuf>,
    },
    /// Write a synthetic corpus with human-judgment fixtures.
    GenDemo {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        documents: usize,
    },
}

fn load_run(cli: &Cli) -> CliResult<Run> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::config("this command needs --config"))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Run::new(cfg, base, cli.deterministic))
}

fn configure_threads(cli: &Cli) -> CliResult<()> {
    let jobs = if cli.deterministic { Some(1) } else { cli.jobs };
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::config("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::runtime(e.to_string()))?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> CliResult<Option<String>> {
    configure_threads(cli)?;
    let message = match &cli.command {
        Command::GenSamples { method } => commands::gen_samples(&load_run(cli)?, *method)?,
        Command::Train => commands::train(&load_run(cli)?)?,
        Command::Eval { model } => commands::eval(&load_run(cli)?, model.as_deref())?,
        Command::CrossDomain => commands::cross_domain(&load_run(cli)?)?,
        Command::Align { model } => commands::align(&load_run(cli)?, model.as_deref())?,
        Command::Rouge => commands::rouge(&load_run(cli)?)?,
        Command::Score { model, doc, summary, batch } => {
            let input = match (doc, summary, batch) {
                (Some(doc), Some(summary), None) => ScoreInput::Pair { doc, summary },
                (None, None, Some(b)) => ScoreInput::Batch(b),
                _ => return Err(CliError::config("give --doc with --summary, or --batch")),
            };
            commands::score(model, input, &mut std::io::stdout().lock())?;
            return Ok(None);
        }
        Command::GenDemo { out, documents } => commands::gen_demo(out, *documents, cli.seed)?,
    };
    Ok(Some(message))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(message) => {
            if let Some(m) = message {
                print!("{m}");
                if !m.ends_with('\n') {
                    println!();
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("refscore: {e}");
            e.exit_code()
        }
    }
}
