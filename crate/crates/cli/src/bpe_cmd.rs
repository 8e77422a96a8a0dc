use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::Subcommand;
use encbench::bpe::{self, PretokenCounts, Tokenizer, TokenizerMetadata, TrainerConfig};
use encbench::corpus::CorpusManifest;
use log::{info, warn};
use serde_json::json;

use crate::output::{emit_json, emit_text};
use crate::settings::Settings;

pub const DEFAULT_VOCAB_SIZE: usize = 52_000;

#[derive(Debug, Subcommand)]
pub enum BpeCmd {
    /// Learn merges from a corpus manifest or plain-text files.
    Train {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Plain-text file; repeatable.
        #[arg(long = "input")]
        inputs: Vec<PathBuf>,
        /// Total vocabulary size, specials included (default 52000).
        #[arg(long)]
        vocab_size: Option<usize>,
        #[arg(long)]
        min_frequency: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode text; one JSON line of ids per input line.
    Encode {
        #[arg(long)]
        tokenizer: PathBuf,
        #[arg(long, conflicts_with = "input")]
        text: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode whitespace- or comma-separated ids, or JSON id arrays one per line.
    Decode {
        #[arg(long)]
        tokenizer: PathBuf,
        #[arg(long, conflicts_with = "input")]
        ids: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a saved tokenizer.
    Inspect {
        #[arg(long)]
        tokenizer: PathBuf,
        /// Number of leading merges to list.
        #[arg(long, default_value_t = 20)]
        merges: usize,
        /// Show how this text is segmented.
        #[arg(long)]
        text: Option<String>,
    },
}

pub fn load_tokenizer(dir: &Path) -> anyhow::Result<Tokenizer> {
    let (tok, meta) = bpe::load(dir).with_context(|| format!("loading tokenizer from {}", dir.display()))?;
    if meta.is_none() {
        warn!("{}: no metadata file", dir.display());
    }
    Ok(tok)
}

fn read_lines(text: Option<String>, input: Option<&Path>) -> anyhow::Result<Vec<String>> {
    match (text, input) {
        (Some(t), _) => Ok(vec![t]),
        (None, Some(p)) => Ok(fs::read_to_string(p)
            .with_context(|| format!("reading {}", p.display()))?
            .lines()
            .map(str::to_string)
            .collect()),
        (None, None) => bail!("pass --text or --input"),
    }
}

fn parse_ids(line: &str) -> anyhow::Result<Vec<u32>> {
    let line = line.trim();
    if line.starts_with('[') || line.starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(line)?;
        let arr = v.get("ids").unwrap_or(&v);
        return Ok(serde_json::from_value(arr.clone())?);
    }
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u32>().with_context(|| format!("bad token id {s:?}")))
        .collect()
}

pub fn run(cmd: BpeCmd, settings: &Settings) -> anyhow::Result<()> {
    match cmd {
        BpeCmd::Train {
            manifest,
            inputs,
            vocab_size,
            min_frequency,
            out,
        } => {
            let vocab_size = vocab_size.or(settings.config.bpe.vocab_size).unwrap_or(DEFAULT_VOCAB_SIZE);
            let mut config = TrainerConfig::new(vocab_size);
            if let Some(min) = min_frequency.or(settings.config.bpe.min_pair_frequency) {
                config = config.min_pair_frequency(min);
            }
            let started = Instant::now();
            let mut counts = PretokenCounts::new();
            if let Some(m) = &manifest {
                counts.merge(PretokenCounts::from_manifest(&CorpusManifest::load(m)?)?);
            }
            for p in &inputs {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let lines: Vec<&str> = text.lines().collect();
                counts.merge(PretokenCounts::from_texts(&lines));
            }
            if manifest.is_none() && inputs.is_empty() {
                bail!("pass --manifest or at least one --input");
            }
            let count_time = started.elapsed();
            info!(
                "{} bytes, {} distinct pieces counted in {:.2}s",
                counts.bytes_seen(),
                counts.distinct(),
                count_time.as_secs_f64()
            );
            let outcome = bpe::train(&counts, &config)?;
            if !outcome.reached_target {
                warn!(
                    "corpus supports only {} tokens, below the requested {}",
                    outcome.tokenizer.vocab_size(),
                    vocab_size
                );
            }
            let mut meta = TokenizerMetadata::describe(&outcome.tokenizer);
            meta.corpus_fingerprint = Some(outcome.corpus_fingerprint.clone());
            meta.target_vocab_size = Some(vocab_size);
            meta.min_pair_frequency = Some(config.min_pair_frequency);
            meta.reached_target = Some(outcome.reached_target);
            bpe::save(&outcome.tokenizer, &meta, &out)?;
            info!("trained in {:.2}s, saved to {}", started.elapsed().as_secs_f64(), out.display());
            emit_json(&meta, None)
        }
        BpeCmd::Encode {
            tokenizer,
            text,
            input,
            out,
        } => {
            let tok = load_tokenizer(&tokenizer)?;
            let mut body = String::new();
            for line in read_lines(text, input.as_deref())? {
                body.push_str(&serde_json::to_string(&json!({ "ids": tok.encode_ids(&line) }))?);
                body.push('\n');
            }
            emit_text(&body, out.as_deref())
        }
        BpeCmd::Decode {
            tokenizer,
            ids,
            input,
            out,
        } => {
            let tok = load_tokenizer(&tokenizer)?;
            let mut body = String::new();
            for line in read_lines(ids, input.as_deref())? {
                if line.trim().is_empty() {
                    continue;
                }
                body.push_str(&tok.decode(&parse_ids(&line)?)?);
                body.push('\n');
            }
            emit_text(&body, out.as_deref())
        }
        BpeCmd::Inspect { tokenizer, merges, text } => {
            let (tok, meta) = bpe::load(&tokenizer)?;
            let first: Vec<String> = tok
                .merges()
                .iter()
                .take(merges)
                .map(|m| {
                    let t = |id| tok.vocab().token(id).unwrap_or("?");
                    format!("{} {}", t(m.left), t(m.right))
                })
                .collect();
            let segmented = text.map(|t| {
                tok.encode_ids(&t)
                    .iter()
                    .map(|&id| json!({ "id": id, "token": tok.vocab().token(id) }))
                    .collect::<Vec<_>>()
            });
            emit_json(
                &json!({
                    "vocab_size": tok.vocab_size(),
                    "merges": tok.merges().len(),
                    "metadata": meta,
                    "first_merges": first,
                    "segmentation": segmented,
                }),
                None,
            )
        }
    }
}
