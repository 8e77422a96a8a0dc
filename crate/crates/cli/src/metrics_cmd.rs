use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Subcommand, ValueEnum};
use encbench::data::{load_conll, load_sentiment, Sentiment};
use encbench::metrics::{bio_to_spans, length_stats, macro_f1, macro_f1_spans, micro_f1_spans, select_bucket, LengthStats};
use serde_json::json;

use crate::bpe_cmd::load_tokenizer;
use crate::output::emit_json;
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TextFormat {
    /// `text<TAB>label` rows.
    Sentiment,
    /// Two-column CoNLL; one sequence per sentence.
    Conll,
    /// One sequence per line.
    Lines,
}

#[derive(Debug, Subcommand)]
pub enum MetricsCmd {
    /// Exact-match span F1 between gold and predicted CoNLL files.
    EvalNer {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Macro-F1 between gold and predicted `text<TAB>label` files.
    EvalCls {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Token-length statistics per tokenizer and the resulting length bucket.
    Seqstats {
        /// Tokenizer directory; repeatable.
        #[arg(long = "tokenizer", required = true)]
        tokenizers: Vec<PathBuf>,
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "lines")]
        format: TextFormat,
        /// Do not count the two sequence delimiters.
        #[arg(long)]
        no_specials: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn texts(path: &Path, format: TextFormat) -> anyhow::Result<Vec<String>> {
    Ok(match format {
        TextFormat::Sentiment => load_sentiment(path)?.iter().map(|t| t.text()).collect(),
        TextFormat::Conll => load_conll(path, false)?
            .sentences
            .iter()
            .map(|s| s.tokens.join(" "))
            .collect(),
        TextFormat::Lines => std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_string)
            .collect(),
    })
}

pub fn run(cmd: MetricsCmd, _settings: &Settings) -> anyhow::Result<()> {
    match cmd {
        MetricsCmd::EvalNer { gold, pred, out } => {
            let g = load_conll(&gold, false)?;
            let p = load_conll(&pred, false)?;
            if g.sentences.len() != p.sentences.len() {
                bail!("{} gold sentences but {} predicted", g.sentences.len(), p.sentences.len());
            }
            for (i, (a, b)) in g.sentences.iter().zip(&p.sentences).enumerate() {
                if a.tokens != b.tokens {
                    bail!("sentence {} differs between gold and predictions", i + 1);
                }
            }
            let spans = |l: &encbench::data::ConllLoad| -> Vec<_> {
                l.sentences.iter().enumerate().map(|(i, s)| bio_to_spans(i, &s.tags)).collect()
            };
            let (gs, ps) = (spans(&g), spans(&p));
            let micro = micro_f1_spans::<f64>(&gs, &ps)?;
            let macro_ = macro_f1_spans::<f64>(&gs, &ps)?;
            emit_json(
                &json!({
                    "metric": "span_micro_f1",
                    "score": micro.f1,
                    "micro": micro,
                    "macro": macro_,
                    "sentences": g.sentences.len(),
                    "gold_violations": g.violations.len(),
                    "pred_violations": p.violations.len(),
                }),
                out.as_deref(),
            )
        }
        MetricsCmd::EvalCls { gold, pred, out } => {
            let g = load_sentiment(&gold)?;
            let p = load_sentiment(&pred)?;
            if g.len() != p.len() {
                bail!("{} gold rows but {} predicted", g.len(), p.len());
            }
            if let Some(i) = g.iter().zip(&p).position(|(a, b)| a.tokens != b.tokens) {
                bail!("row {} text differs between gold and predictions", i + 1);
            }
            let gl: Vec<usize> = g.iter().map(|t| t.label.index()).collect();
            let pl: Vec<usize> = p.iter().map(|t| t.label.index()).collect();
            let m = macro_f1::<f64>(&gl, &pl, Sentiment::ALL.len())?;
            let correct = gl.iter().zip(&pl).filter(|(a, b)| a == b).count();
            let per_class: serde_json::Map<String, serde_json::Value> = Sentiment::ALL
                .iter()
                .zip(&m.per_class)
                .map(|(s, f)| (s.as_str().to_string(), json!(f)))
                .collect();
            emit_json(
                &json!({
                    "metric": "macro_f1",
                    "score": m.macro_f1,
                    "per_class": per_class,
                    "degenerate_classes": m.degenerate_classes.iter().filter_map(|&c| Sentiment::from_index(c)).map(|s| s.as_str()).collect::<Vec<_>>(),
                    "accuracy": if gl.is_empty() { 0.0 } else { correct as f64 / gl.len() as f64 },
                    "items": gl.len(),
                }),
                out.as_deref(),
            )
        }
        MetricsCmd::Seqstats {
            tokenizers,
            inputs,
            format,
            no_specials,
            out,
        } => {
            let mut all = Vec::new();
            for p in &inputs {
                all.extend(texts(p, format)?);
            }
            if all.is_empty() {
                bail!("no sequences in the inputs");
            }
            let extra = if no_specials { 0 } else { 2 };
            let mut per = Vec::new();
            let mut stats: Vec<LengthStats> = Vec::new();
            for dir in &tokenizers {
                let tok = load_tokenizer(dir)?;
                let lengths: Vec<usize> = {
                    use rayon::prelude::*;
                    all.par_iter().map(|t| tok.encode_ids(t).len() + extra).collect()
                };
                let s = length_stats::<f64>(&lengths)?;
                per.push(json!({ "tokenizer": dir, "stats": s }));
                stats.push(s);
            }
            emit_json(
                &json!({ "sequences": all.len(), "per_tokenizer": per, "bucket": select_bucket(&stats)? }),
                out.as_deref(),
            )
        }
    }
}
