use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

mod bpe_cmd;
mod corpus_cmd;
mod data_cmd;
mod metrics_cmd;
mod output;
mod pretrain_cmd;
mod settings;
mod tune_cmd;

use settings::Settings;

/// Corpus preparation, tokenizer training, masked-LM data preparation and
/// benchmark evaluation for RoBERTa-style encoders.
#[derive(Debug, Parser)]
#[command(name = "encbench", version, arg_required_else_help = true, propagate_version = true)]
struct Cli {
    /// TOML or JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Global seed; every random choice derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[arg(long, global = true, value_parser = ["error", "warn", "info", "debug", "trace", "off"])]
    log_level: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest, deduplicate, shuffle and sample sharded text corpora.
    #[command(subcommand)]
    Corpus(corpus_cmd::CorpusCmd),
    /// Train and apply byte-level BPE tokenizers.
    #[command(subcommand)]
    Bpe(bpe_cmd::BpeCmd),
    /// Load, validate and split benchmark datasets.
    #[command(subcommand)]
    Data(data_cmd::DataCmd),
    /// Score predictions and compute sequence-length statistics.
    #[command(subcommand)]
    Metrics(metrics_cmd::MetricsCmd),
    /// Pack and mask pretraining data; inspect schedules and budgets.
    #[command(subcommand)]
    Pretrain(pretrain_cmd::PretrainCmd),
    /// Run the fine-tuning grid and build result tables.
    #[command(subcommand)]
    Tune(tune_cmd::TuneCmd),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let settings = Settings::resolve(cli.config.as_deref(), cli.seed, cli.workers, cli.log_level.as_deref())?;
    env_logger::Builder::new()
        .parse_filters(&settings.log_level)
        .format_timestamp_millis()
        .init();
    rayon::ThreadPoolBuilder::new().num_threads(settings.workers).build_global()?;
    info!("encbench {}", env!("CARGO_PKG_VERSION"));
    info!("resolved config: {}", serde_json::to_string(&settings.config)?);
    info!("seed {} workers {}", settings.seed, settings.workers);
    match cli.command {
        Command::Corpus(cmd) => corpus_cmd::run(cmd, &settings),
        Command::Bpe(cmd) => bpe_cmd::run(cmd, &settings),
        Command::Data(cmd) => data_cmd::run(cmd, &settings),
        Command::Metrics(cmd) => metrics_cmd::run(cmd, &settings),
        Command::Pretrain(cmd) => pretrain_cmd::run(cmd, &settings),
        Command::Tune(cmd) => tune_cmd::run(cmd, &settings),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
