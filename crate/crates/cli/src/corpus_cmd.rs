use std::path::PathBuf;

use anyhow::Context;
use clap::Subcommand;
use encbench::corpus::{self, CorpusManifest, IngestOptions, InputSpec, Source};
use log::info;

use crate::output::emit_json;
use crate::settings::Settings;

#[derive(Debug, Subcommand)]
pub enum CorpusCmd {
    /// Read JSONL or plain-text inputs into sharded JSONL with a manifest.
    Ingest {
        /// `[web:|wiki:|other:]PATH`; repeatable.
        #[arg(long = "input", required = true)]
        inputs: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        shard_bytes: Option<u64>,
    },
    /// Drop exact duplicates (trailing whitespace ignored), keeping first occurrences.
    Dedup {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        shard_bytes: Option<u64>,
    },
    /// Seeded global shuffle.
    Shuffle {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        shard_bytes: Option<u64>,
    },
    /// Seeded sample of whole documents up to a byte budget.
    Sample {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        target_bytes: u64,
        #[arg(long)]
        shard_bytes: Option<u64>,
    },
}

fn parse_input(spec: &str) -> InputSpec {
    if let Some((tag, path)) = spec.split_once(':') {
        if let Ok(source) = tag.parse::<Source>() {
            return InputSpec::new(path, source);
        }
    }
    InputSpec::new(spec, Source::Other)
}

fn load(path: &PathBuf) -> anyhow::Result<CorpusManifest> {
    CorpusManifest::load(path).with_context(|| format!("loading manifest {}", path.display()))
}

pub fn run(cmd: CorpusCmd, settings: &Settings) -> anyhow::Result<()> {
    let manifest = match cmd {
        CorpusCmd::Ingest { inputs, out, shard_bytes } => {
            let specs: Vec<InputSpec> = inputs.iter().map(|s| parse_input(s)).collect();
            let mut opts = IngestOptions::new(&out);
            opts.shard_bytes = settings.shard_bytes(shard_bytes);
            corpus::ingest(&specs, &opts)?
        }
        CorpusCmd::Dedup { manifest, out, shard_bytes } => {
            corpus::dedup_exact(&load(&manifest)?, &out, settings.shard_bytes(shard_bytes))?
        }
        CorpusCmd::Shuffle { manifest, out, shard_bytes } => {
            info!("shuffle seed {}", settings.seed);
            corpus::shuffle(&load(&manifest)?, &out, settings.seed, settings.shard_bytes(shard_bytes))?
        }
        CorpusCmd::Sample {
            manifest,
            out,
            target_bytes,
            shard_bytes,
        } => {
            info!("sample seed {} target {} bytes", settings.seed, target_bytes);
            corpus::sample_bytes(&load(&manifest)?, &out, target_bytes, settings.seed, settings.shard_bytes(shard_bytes))?
        }
    };
    info!(
        "{} documents, {} bytes in {} shard(s) under {}",
        manifest.document_count,
        manifest.total_bytes,
        manifest.shards.len(),
        manifest.root().display()
    );
    emit_json(&manifest, None)
}
