use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Subcommand, ValueEnum};
use encbench::corpus::{read_documents, CorpusManifest};
use encbench::pretrain::{
    corpus_tokens_for_epochs, estimate_epochs, mask_epoch, pack_sequences, packed_corpus_tokens, BudgetSpec, MaskingPolicy,
    MaskingVocab, ScheduleKind, ScheduleSpec,
};
use log::info;
use rayon::prelude::*;
use serde_json::json;

use crate::bpe_cmd::load_tokenizer;
use crate::output::{emit_json, emit_text};
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    /// 100k steps, 10k warmup, peak 4e-4.
    Base,
    /// 100k steps, 10k warmup, peak 1.5e-4.
    Large,
    /// Linear schedule over --total-steps with --warmup-fraction warmup.
    FineTune,
    /// Everything from flags.
    Custom,
}

#[derive(Debug, Subcommand)]
pub enum PretrainCmd {
    /// Encode a corpus and pack it into fixed-length sequences (JSONL).
    Pack {
        #[arg(long)]
        tokenizer: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 512)]
        seq_len: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply one epoch of dynamic masking to packed sequences (JSONL).
    Mask {
        #[arg(long)]
        tokenizer: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        epoch: u64,
        #[arg(long, default_value_t = 0.15)]
        mask_prob: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a learning-rate schedule; `--dump-csv` writes step,lr rows.
    Schedule {
        #[arg(long, value_enum, default_value = "base")]
        preset: Preset,
        #[arg(long)]
        total_steps: Option<u64>,
        #[arg(long)]
        warmup_steps: Option<u64>,
        #[arg(long, default_value_t = 0.1)]
        warmup_fraction: f64,
        #[arg(long)]
        peak_lr: Option<f64>,
        #[arg(long)]
        end_lr: Option<f64>,
        #[arg(long)]
        power: Option<f64>,
        #[arg(long)]
        dump_csv: Option<PathBuf>,
        /// Row spacing of the CSV dump.
        #[arg(long, default_value_t = 100)]
        every: u64,
    },
    /// Passes over the corpus implied by a step budget.
    Epochs {
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        #[arg(long, default_value_t = 8_192)]
        batch: u64,
        #[arg(long, default_value_t = 512)]
        seq_len: u64,
        #[arg(long, conflicts_with_all = ["packed", "invert"])]
        corpus_tokens: Option<u64>,
        /// Count tokens from a packed JSONL file.
        #[arg(long)]
        packed: Option<PathBuf>,
        /// With --packed: leave padding positions out of the count.
        #[arg(long, requires = "packed")]
        exclude_padding: bool,
        /// Solve for the corpus size that yields this many epochs.
        #[arg(long)]
        invert: Option<f64>,
    },
}

fn read_packed(path: &PathBuf) -> anyhow::Result<Vec<Vec<u32>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: serde_json::Value = serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1))?;
            let ids = v.get("ids").cloned().unwrap_or(v);
            serde_json::from_value(ids).with_context(|| format!("{}:{}: expected an id array", path.display(), i + 1))
        })
        .collect()
}

fn schedule(
    preset: Preset,
    total: Option<u64>,
    warmup: Option<u64>,
    warmup_fraction: f64,
    peak: Option<f64>,
    end: Option<f64>,
    power: Option<f64>,
) -> anyhow::Result<ScheduleSpec<f64>> {
    let mut spec = match preset {
        Preset::Base => ScheduleSpec::pretrain_base(),
        Preset::Large => ScheduleSpec::pretrain_large(),
        Preset::FineTune => {
            let Some(total) = total else { bail!("--preset fine-tune needs --total-steps") };
            ScheduleSpec::fine_tuning(total, peak.unwrap_or(2e-5), warmup_fraction)?
        }
        Preset::Custom => {
            let (Some(total), Some(warmup), Some(peak)) = (total, warmup, peak) else {
                bail!("--preset custom needs --total-steps, --warmup-steps and --peak-lr")
            };
            ScheduleSpec {
                kind: ScheduleKind::PolynomialDecay,
                total_steps: total,
                warmup_steps: warmup,
                peak_lr: peak,
                end_lr: 0.0,
                power: 1.0,
            }
        }
    };
    if !matches!(preset, Preset::FineTune) {
        spec.total_steps = total.unwrap_or(spec.total_steps);
        spec.warmup_steps = warmup.unwrap_or(spec.warmup_steps);
        spec.peak_lr = peak.unwrap_or(spec.peak_lr);
    }
    spec.end_lr = end.unwrap_or(spec.end_lr);
    spec.power = power.unwrap_or(spec.power);
    spec.validate()?;
    Ok(spec)
}

pub fn run(cmd: PretrainCmd, settings: &Settings) -> anyhow::Result<()> {
    match cmd {
        PretrainCmd::Pack {
            tokenizer,
            manifest,
            seq_len,
            out,
        } => {
            let tok = load_tokenizer(&tokenizer)?;
            let manifest = CorpusManifest::load(&manifest)?;
            let docs = read_documents(manifest.shard_paths())?;
            let streams: Vec<Vec<u32>> = docs.par_iter().map(|d| tok.encode_ids(&d.text)).collect();
            let ids = tok.vocab().special_ids();
            let blocks = pack_sequences(&streams, seq_len, ids.eos, ids.pad)?;
            let mut body = String::new();
            for b in &blocks {
                writeln!(body, "{}", json!({ "ids": b }))?;
            }
            emit_text(&body, Some(&out))?;
            let content: usize = streams.iter().map(Vec::len).sum();
            emit_json(
                &json!({
                    "documents": docs.len(),
                    "sequences": blocks.len(),
                    "sequence_length": seq_len,
                    "content_tokens": content,
                    "padded_tokens": packed_corpus_tokens(&blocks, ids.pad, true),
                }),
                None,
            )
        }
        PretrainCmd::Mask {
            tokenizer,
            input,
            epoch,
            mask_prob,
            out,
        } => {
            let tok = load_tokenizer(&tokenizer)?;
            let seqs = read_packed(&input)?;
            let policy = MaskingPolicy::new(mask_prob, 0.8, 0.1, 0.1, settings.seed)?;
            info!("masking {} sequences, epoch {epoch}, seed {}", seqs.len(), settings.seed);
            let masked = mask_epoch(&seqs, &policy, &MaskingVocab::from_vocabulary(tok.vocab()), epoch);
            let mut body = String::new();
            let mut targets = 0;
            for m in &masked {
                targets += m.target_positions.len();
                writeln!(body, "{}", serde_json::to_string(m)?)?;
            }
            emit_text(&body, Some(&out))?;
            emit_json(&json!({ "sequences": masked.len(), "targets": targets, "policy": policy }), None)
        }
        PretrainCmd::Schedule {
            preset,
            total_steps,
            warmup_steps,
            warmup_fraction,
            peak_lr,
            end_lr,
            power,
            dump_csv,
            every,
        } => {
            let spec = schedule(preset, total_steps, warmup_steps, warmup_fraction, peak_lr, end_lr, power)?;
            if every == 0 {
                bail!("--every must be positive");
            }
            let mut csv = String::from("step,lr\n");
            let mut step = 0;
            while step < spec.total_steps {
                writeln!(csv, "{step},{:e}", spec.lr_at(step))?;
                step += every;
            }
            writeln!(csv, "{},{:e}", spec.total_steps, spec.lr_at(spec.total_steps))?;
            match dump_csv {
                Some(path) => {
                    emit_text(&csv, Some(&path))?;
                    emit_json(
                        &json!({
                            "spec": spec,
                            "lr_at_warmup_end": spec.lr_at(spec.warmup_steps),
                            "csv": path,
                        }),
                        None,
                    )
                }
                None => emit_text(&csv, None),
            }
        }
        PretrainCmd::Epochs {
            steps,
            batch,
            seq_len,
            corpus_tokens,
            packed,
            exclude_padding,
            invert,
        } => {
            if let Some(epochs) = invert {
                if !(epochs > 0.0) {
                    bail!("--invert must be positive");
                }
                let tokens = corpus_tokens_for_epochs(steps, batch, seq_len, epochs);
                let budget = BudgetSpec {
                    total_steps: steps,
                    global_batch_sequences: batch,
                    sequence_length: seq_len,
                    corpus_tokens: tokens,
                };
                return emit_json(
                    &json!({ "corpus_tokens": tokens, "epochs": estimate_epochs::<f64>(&budget)?, "tokens_processed": budget.tokens_processed().to_string() }),
                    None,
                );
            }
            let (tokens, convention) = match (corpus_tokens, packed) {
                (Some(t), _) => (t, "given"),
                (None, Some(p)) => {
                    let seqs = read_packed(&p)?;
                    let pad = encbench::bpe::SPECIAL_IDS.pad;
                    if exclude_padding {
                        (packed_corpus_tokens(&seqs, pad, false), "packed, padding excluded")
                    } else {
                        (packed_corpus_tokens(&seqs, pad, true), "packed, padding counted")
                    }
                }
                (None, None) => bail!("pass --corpus-tokens, --packed or --invert"),
            };
            let budget = BudgetSpec {
                total_steps: steps,
                global_batch_sequences: batch,
                sequence_length: seq_len,
                corpus_tokens: tokens,
            };
            emit_json(
                &json!({
                    "corpus_tokens": tokens,
                    "convention": convention,
                    "tokens_processed": budget.tokens_processed().to_string(),
                    "epochs": estimate_epochs::<f64>(&budget)?,
                }),
                None,
            )
        }
    }
}
