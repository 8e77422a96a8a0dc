use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::Subcommand;
use encbench::data::{
    audit_leakage, carve_test, carve_validation, load_conll, load_sentiment, save_conll, save_sentiment, write_splits,
    SplitSpec,
};
use log::{info, warn};
use serde_json::json;

use crate::output::emit_json;
use crate::settings::Settings;

#[derive(Debug, Subcommand)]
pub enum DataCmd {
    /// Split a `text<TAB>label` sentiment file and audit cross-split leakage.
    Sentiment {
        /// Training data, or the full dataset when --test is absent.
        #[arg(long)]
        input: PathBuf,
        /// Official test set; kept as released.
        #[arg(long)]
        test: Option<PathBuf>,
        /// Test share carved from --input when there is no official test set.
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        /// Share of the training portion carved out as validation.
        #[arg(long, default_value_t = 0.1)]
        valid_fraction: f64,
        #[arg(long)]
        out: PathBuf,
        /// Exit with an error when any text appears in more than one split.
        #[arg(long)]
        fail_on_leakage: bool,
    },
    /// Validate a two-column CoNLL file and optionally write a repaired copy
    /// or a train/valid split.
    Conll {
        #[arg(long)]
        input: PathBuf,
        /// Rewrite orphan I- tags to B- tags.
        #[arg(long)]
        repair: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Carve this share of sentences into `valid.conll` (needs --out).
        #[arg(long, requires = "out")]
        valid_fraction: Option<f64>,
    },
}

pub fn run(cmd: DataCmd, settings: &Settings) -> anyhow::Result<()> {
    match cmd {
        DataCmd::Sentiment {
            input,
            test,
            test_fraction,
            valid_fraction,
            out,
            fail_on_leakage,
        } => {
            let items = load_sentiment(&input)?;
            let (train_full, test_items, spec) = match &test {
                Some(t) => {
                    let official = load_sentiment(t)?;
                    let test_share = official.len() as f64 / (official.len() + items.len()) as f64;
                    (items, official, SplitSpec::official(test_share, valid_fraction, settings.seed)?)
                }
                None => {
                    let spec = SplitSpec::official(test_fraction, valid_fraction, settings.seed)?;
                    let (rest, test_items) = carve_test(&items, &spec)?;
                    (rest, test_items, spec)
                }
            };
            let (train, valid) = carve_validation(&train_full, &spec)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let manifest = write_splits(&out, &spec, &[("train", &train), ("valid", &valid), ("test", &test_items)])?;
            for (name, split) in [("train", &train), ("valid", &valid), ("test", &test_items)] {
                save_sentiment(&out.join(format!("{name}.tsv")), split)?;
            }
            let leakage = audit_leakage(&[("train", &train), ("valid", &valid), ("test", &test_items)]);
            if !leakage.is_clean() {
                warn!("{} texts occur in more than one split", leakage.collisions.len());
            }
            info!("split {} / {} / {} (seed {})", train.len(), valid.len(), test_items.len(), settings.seed);
            emit_json(&json!({ "splits": manifest, "leakage": leakage }), None)?;
            if fail_on_leakage && !leakage.is_clean() {
                anyhow::bail!("cross-split leakage detected");
            }
            Ok(())
        }
        DataCmd::Conll {
            input,
            repair,
            out,
            valid_fraction,
        } => {
            let load = load_conll(&input, repair)?;
            let mut types: BTreeMap<String, usize> = BTreeMap::new();
            for s in &load.sentences {
                for t in &s.tags {
                    if let encbench::metrics::BioTag::Begin(ty) = t {
                        *types.entry(ty.clone()).or_default() += 1;
                    }
                }
            }
            let tokens: usize = load.sentences.iter().map(|s| s.len()).sum();
            let mut written = Vec::new();
            if let Some(out) = &out {
                match valid_fraction {
                    Some(f) => {
                        // the test share is nominal here: CoNLL benchmarks ship their own test file
                        let spec = SplitSpec::official(0.2, f, settings.seed)?;
                        let (train, valid) = carve_validation(&load.sentences, &spec)?;
                        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
                        for (name, part) in [("train", &train), ("valid", &valid)] {
                            let path = out.join(format!("{name}.conll"));
                            save_conll(&path, part)?;
                            written.push(json!({ "path": path, "sentences": part.len() }));
                        }
                    }
                    None => {
                        save_conll(out, &load.sentences)?;
                        written.push(json!({ "path": out, "sentences": load.sentences.len() }));
                    }
                }
            }
            if !load.violations.is_empty() {
                warn!("{} BIO violations in {}", load.violations.len(), input.display());
            }
            emit_json(
                &json!({
                    "sentences": load.sentences.len(),
                    "tokens": tokens,
                    "entity_counts": types,
                    "violations": load.violations.len(),
                    "first_violations": load.violations.iter().take(20).collect::<Vec<_>>(),
                    "repaired": load.repaired,
                    "written": written,
                }),
                None,
            )
        }
    }
}
