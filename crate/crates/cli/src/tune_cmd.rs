use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Subcommand, ValueEnum};
use encbench::data::{load_conll, load_sentiment};
use encbench::metrics::{length_stats, select_bucket};
use encbench::tune::{
    emit_report, enumerate_grid, hyperparameter_table, read_journal, run_grid, track_wall_time, wall_time_table, GridOptions,
    Journal, MockTrainer, ModelResults, ProbeTrainer, ReportFormat, Splits, Task, TaskData, TaskResult, Trainer,
};
use log::info;
use serde_json::json;

use crate::bpe_cmd::load_tokenizer;
use crate::output::{emit_json, emit_text};
use crate::settings::{Settings, TaskPaths};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TrainerKind {
    /// Scripted scores; exercises the protocol without data.
    Mock,
    /// Bag-of-subwords logistic model over a BPE tokenizer.
    Probe,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Table {
    /// Test scores per model and task.
    Results,
    /// Winning batch size and learning rate per task.
    Hyperparams,
    /// Trial wall time per task.
    Time,
    All,
}

#[derive(Debug, Subcommand)]
pub enum TuneCmd {
    /// Run (or resume) the hyperparameter grid for one task.
    Run {
        #[arg(long)]
        task: Task,
        #[arg(long, value_enum)]
        trainer: TrainerKind,
        /// Journals go to `<journal-dir>/<task>.jsonl`.
        #[arg(long)]
        journal_dir: Option<PathBuf>,
        #[arg(long)]
        tokenizer: Option<PathBuf>,
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        valid: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        /// Defaults to the bucket chosen from training lengths (probe) or
        /// the task's usual length (mock).
        #[arg(long)]
        sequence_length: Option<u32>,
        /// Examples per epoch seen by the mock trainer.
        #[arg(long, default_value_t = 1000)]
        mock_train_size: usize,
        #[arg(long)]
        lr_scale: Option<f64>,
        /// Score the test split of every trial.
        #[arg(long)]
        evaluate_all_test: bool,
    },
    /// Build result tables from journals.
    Report {
        /// `NAME[@SIZE]=DIR`; repeatable. DIR holds `<task>.jsonl` journals.
        #[arg(long = "run", required = true)]
        runs: Vec<String>,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long, value_enum, default_value = "results")]
        table: Table,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn journal_path(dir: &Path, task: Task) -> PathBuf {
    dir.join(format!("{}.jsonl", task.as_str().to_ascii_lowercase()))
}

fn default_length(task: Task) -> u32 {
    match task {
        Task::Bmc => 64,
        Task::Nemo | Task::Smcd => 192,
    }
}

fn load_task_data(task: Task, paths: &TaskPaths) -> anyhow::Result<TaskData> {
    let get = |p: &Option<PathBuf>, name: &str| {
        p.clone()
            .ok_or_else(|| anyhow!("the probe trainer needs --{name} (or tune.tasks.{}.{name})", task.as_str().to_ascii_lowercase()))
    };
    let (train, valid, test) = (get(&paths.train, "train")?, get(&paths.valid, "valid")?, get(&paths.test, "test")?);
    Ok(if task.is_ner() {
        let load = |p: &PathBuf| -> anyhow::Result<_> { Ok(load_conll(p, true)?.sentences) };
        TaskData::Tagging(Splits {
            train: load(&train)?,
            valid: load(&valid)?,
            test: load(&test)?,
        })
    } else {
        TaskData::Classification(Splits {
            train: load_sentiment(&train)?,
            valid: load_sentiment(&valid)?,
            test: load_sentiment(&test)?,
        })
    })
}

fn train_lengths(data: &TaskData, tok: &encbench::bpe::Tokenizer) -> Vec<usize> {
    let texts: Vec<String> = match data {
        TaskData::Classification(s) => s.train.iter().map(|t| t.text()).collect(),
        TaskData::Tagging(s) => s.train.iter().map(|t| t.tokens.join(" ")).collect(),
        TaskData::Synthetic { .. } => Vec::new(),
    };
    texts.iter().map(|t| tok.encode_ids(t).len() + 2).collect()
}

fn run_with<T: Trainer>(
    trainer: &T,
    task: Task,
    sequence_length: u32,
    data: &TaskData,
    journal_dir: &Path,
    settings: &Settings,
    evaluate_all_test: bool,
) -> anyhow::Result<()> {
    let grid = settings.config.tune.grid(settings.seed);
    let configs = enumerate_grid(&grid, task, sequence_length)?;
    let path = journal_path(journal_dir, task);
    let mut journal = Journal::open(&path)?;
    let outcome = run_grid(
        &configs,
        trainer,
        data,
        &mut journal,
        GridOptions {
            workers: settings.workers,
            evaluate_all_test,
        },
    )?;
    let w = outcome.winner();
    info!(
        "{task}: {} trial(s) executed; selected bs={} lr={:e} valid={:.4} test={:.4}",
        outcome.executed,
        w.config.batch_size,
        w.config.learning_rate,
        w.best_valid_score().unwrap_or(f64::NAN),
        w.test_score.unwrap_or(f64::NAN)
    );
    emit_json(
        &json!({
            "task": task,
            "trainer": trainer.identity(),
            "journal": path,
            "trials": outcome.records.len(),
            "executed": outcome.executed,
            "errors": outcome.records.iter().filter(|r| r.error.is_some()).count(),
            "selected": {
                "config_hash": w.config_hash,
                "batch_size": w.config.batch_size,
                "learning_rate": w.config.learning_rate,
                "best_epoch": w.best_epoch,
                "valid_score": w.best_valid_score(),
                "test_score": w.test_score,
            },
        }),
        None,
    )
}

fn parse_run(spec: &str) -> anyhow::Result<(String, String, PathBuf)> {
    let (label, dir) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("--run expects NAME[@SIZE]=DIR, got {spec:?}"))?;
    let (name, size) = label.split_once('@').unwrap_or((label, "all"));
    if name.is_empty() {
        bail!("--run {spec:?} has an empty model name");
    }
    Ok((name.to_string(), size.to_string(), PathBuf::from(dir)))
}

pub fn run(cmd: TuneCmd, settings: &Settings) -> anyhow::Result<()> {
    match cmd {
        TuneCmd::Run {
            task,
            trainer,
            journal_dir,
            tokenizer,
            train,
            valid,
            test,
            sequence_length,
            mock_train_size,
            lr_scale,
            evaluate_all_test,
        } => {
            let tune = &settings.config.tune;
            let journal_dir = journal_dir
                .or(tune.journal_dir.clone())
                .unwrap_or_else(|| PathBuf::from("runs"));
            let mut paths = tune.tasks.get(&task.as_str().to_ascii_lowercase()).cloned().unwrap_or_default();
            paths.train = train.or(paths.train);
            paths.valid = valid.or(paths.valid);
            paths.test = test.or(paths.test);
            let sequence_length = sequence_length.or(paths.sequence_length);
            match trainer {
                TrainerKind::Mock => {
                    let data = TaskData::Synthetic {
                        train_size: mock_train_size,
                    };
                    let len = sequence_length.unwrap_or_else(|| default_length(task));
                    run_with(&MockTrainer::standard(), task, len, &data, &journal_dir, settings, evaluate_all_test)
                }
                TrainerKind::Probe => {
                    let dir = tokenizer
                        .or(tune.tokenizer.clone())
                        .ok_or_else(|| anyhow!("the probe trainer needs --tokenizer"))?;
                    let tok = Arc::new(load_tokenizer(&dir)?);
                    let data = load_task_data(task, &paths)?;
                    let len = match sequence_length {
                        Some(l) => l,
                        None => {
                            let stats = length_stats::<f64>(&train_lengths(&data, &tok)).context("empty training split")?;
                            let bucket = select_bucket(&[stats])? as u32;
                            info!("{task}: training p95 {} max {} -> sequence length {bucket}", stats.p95, stats.max);
                            bucket
                        }
                    };
                    let mut probe = ProbeTrainer::new(tok);
                    if let Some(s) = lr_scale.or(tune.lr_scale) {
                        probe = probe.with_lr_scale(s);
                    }
                    run_with(&probe, task, len, &data, &journal_dir, settings, evaluate_all_test)
                }
            }
        }
        TuneCmd::Report {
            runs,
            format,
            table,
            out,
        } => {
            let format: ReportFormat = format.parse()?;
            let mut rows = Vec::new();
            let mut timing: BTreeMap<Task, Vec<encbench::tune::TrialRecord>> = BTreeMap::new();
            for spec in &runs {
                let (model, size_class, dir) = parse_run(spec)?;
                let mut tasks = BTreeMap::new();
                for task in Task::ALL {
                    let path = journal_path(&dir, task);
                    if !path.exists() {
                        continue;
                    }
                    let records = read_journal(&path)?;
                    tasks.insert(task, TaskResult::from_records(&records).with_context(|| path.display().to_string())?);
                    timing.entry(task).or_default().extend(records);
                }
                if tasks.is_empty() {
                    bail!("no task journals under {}", dir.display());
                }
                rows.push(ModelResults {
                    model,
                    size_class,
                    tasks,
                });
            }
            let timing: Vec<(Task, &[encbench::tune::TrialRecord])> = timing.iter().map(|(t, r)| (*t, r.as_slice())).collect();
            let wall = track_wall_time(&timing);
            let text = match table {
                Table::Results => emit_report(&rows, format)?,
                Table::Hyperparams => hyperparameter_table(&rows, format),
                Table::Time => wall_time_table(&wall, format),
                Table::All => [emit_report(&rows, format)?, hyperparameter_table(&rows, format), wall_time_table(&wall, format)].join("\n"),
            };
            emit_text(&text, out.as_deref())
        }
    }
}
