use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::Task;
use super::trial::{select_best, TrialRecord};
use crate::error::{Error, Result};
use crate::metrics::unweighted_mean;
use crate::scalar::{format_fixed, quantize};
use crate::Exact;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(Error::invalid(format!("unknown report format {other:?} (csv or md)"))),
        }
    }
}

/// Headline result of one task: the test score of the validation-selected trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    /// Fraction in [0, 1].
    pub test_score: f64,
    pub valid_score: f64,
    pub batch_size: u32,
    pub learning_rate: f64,
}

impl TaskResult {
    /// Picks the winner by validation score. Test scores of other trials
    /// are never consulted.
    pub fn from_records(records: &[TrialRecord]) -> Result<Self> {
        let winner = &records[select_best(records)?];
        let test_score = winner.test_score.ok_or_else(|| {
            Error::invalid(format!(
                "selected trial {} has no test score; run the grid to completion first",
                &winner.config_hash[..12.min(winner.config_hash.len())]
            ))
        })?;
        Ok(TaskResult {
            test_score,
            valid_score: winner.best_valid_score().unwrap_or(f64::NAN),
            batch_size: winner.config.batch_size,
            learning_rate: winner.config.learning_rate,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResults {
    pub model: String,
    /// Models are ranked against others of the same size class.
    pub size_class: String,
    pub tasks: BTreeMap<Task, TaskResult>,
}

const COLUMNS: [&str; 5] = ["BMC", "NEMO", "NER-AVG", "SMCD", "AVG"];

/// Percent cells rounded to two decimals; averages are exact means of the
/// rounded cells.
fn cells(row: &ModelResults) -> Result<[Option<Exact>; 5]> {
    let pct = |t: Task| row.tasks.get(&t).map(|r| quantize(r.test_score * 100.0, 2));
    let (bmc, nemo, smcd) = (pct(Task::Bmc), pct(Task::Nemo), pct(Task::Smcd));
    let ner = match (bmc, nemo) {
        (Some(a), Some(b)) => Some(unweighted_mean(&[a, b])?),
        _ => None,
    };
    let all = match (bmc, nemo, smcd) {
        (Some(a), Some(b), Some(c)) => Some(unweighted_mean(&[a, b, c])?),
        _ => None,
    };
    Ok([bmc, nemo, ner, smcd, all])
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mark {
    None,
    Best,
    Second,
}

fn marks(rows: &[ModelResults], table: &[[Option<Exact>; 5]]) -> Vec<[Mark; 5]> {
    let mut out = vec![[Mark::None; 5]; rows.len()];
    for col in 0..5 {
        let mut classes: BTreeMap<&str, Vec<Exact>> = BTreeMap::new();
        for (row, values) in rows.iter().zip(table) {
            if let Some(v) = values[col] {
                classes.entry(row.size_class.as_str()).or_default().push(v);
            }
        }
        for values in classes.values_mut() {
            values.sort_by(|a, b| b.cmp(a));
            values.dedup();
        }
        for (i, row) in rows.iter().enumerate() {
            let (Some(v), Some(ranked)) = (table[i][col], classes.get(row.size_class.as_str())) else {
                continue;
            };
            if ranked.len() < 2 {
                continue;
            }
            out[i][col] = if v == ranked[0] {
                Mark::Best
            } else if v == ranked[1] {
                Mark::Second
            } else {
                Mark::None
            };
        }
    }
    out
}

/// Table 1 layout: one row per model. Markdown output bolds the best and
/// underlines the second-best value of each column within a size class.
pub fn emit_report(rows: &[ModelResults], format: ReportFormat) -> Result<String> {
    let table = rows.iter().map(cells).collect::<Result<Vec<_>>>()?;
    let marks = marks(rows, &table);
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str("Model,");
            out.push_str(&COLUMNS.join(","));
            out.push('\n');
            for (row, values) in rows.iter().zip(&table) {
                out.push_str(&csv_field(&row.model));
                for v in values {
                    out.push(',');
                    if let Some(v) = v {
                        out.push_str(&format_fixed(*v, 2));
                    }
                }
                out.push('\n');
            }
        }
        ReportFormat::Markdown => {
            let _ = writeln!(out, "| Model | {} |", COLUMNS.join(" | "));
            let _ = writeln!(out, "|---|{}", "---:|".repeat(COLUMNS.len()));
            let mut last_class: Option<&str> = None;
            for ((row, values), marks) in rows.iter().zip(&table).zip(&marks) {
                if last_class.is_some_and(|c| c != row.size_class) {
                    let _ = writeln!(out, "|{}", " |".repeat(COLUMNS.len() + 1));
                }
                last_class = Some(&row.size_class);
                out.push_str("| ");
                out.push_str(&row.model.replace('|', "\\|"));
                for (v, m) in values.iter().zip(marks) {
                    let text = v.map(|v| format_fixed(v, 2)).unwrap_or_else(|| "-".into());
                    let text = match m {
                        Mark::Best => format!("**{text}**"),
                        Mark::Second => format!("<u>{text}</u>"),
                        Mark::None => text,
                    };
                    let _ = write!(out, " | {text}");
                }
                out.push_str(" |\n");
            }
        }
    }
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn format_lr(lr: f64) -> String {
    format!("{lr:e}")
}

/// Winning batch size and learning rate per task and model.
pub fn hyperparameter_table(rows: &[ModelResults], format: ReportFormat) -> String {
    let mut out = String::new();
    let cell = |row: &ModelResults, t: Task| {
        row.tasks
            .get(&t)
            .map(|r| (r.batch_size.to_string(), format_lr(r.learning_rate)))
            .unwrap_or_else(|| ("-".into(), "-".into()))
    };
    match format {
        ReportFormat::Csv => {
            out.push_str("Model,BMC BS,BMC LR,NEMO BS,NEMO LR,SMCD BS,SMCD LR\n");
            for row in rows {
                out.push_str(&csv_field(&row.model));
                for t in Task::ALL {
                    let (bs, lr) = cell(row, t);
                    let _ = write!(out, ",{bs},{lr}");
                }
                out.push('\n');
            }
        }
        ReportFormat::Markdown => {
            out.push_str("| Model | BMC BS | BMC LR | NEMO BS | NEMO LR | SMCD BS | SMCD LR |\n");
            out.push_str("|---|---:|---:|---:|---:|---:|---:|\n");
            for row in rows {
                out.push_str("| ");
                out.push_str(&row.model.replace('|', "\\|"));
                for t in Task::ALL {
                    let (bs, lr) = cell(row, t);
                    let _ = write!(out, " | {bs} | {lr}");
                }
                out.push_str(" |\n");
            }
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallTimeSummary {
    pub per_task_ms: BTreeMap<Task, u64>,
    pub total_ms: u64,
}

/// Sums trial wall times per task and overall.
pub fn track_wall_time(records: &[(Task, &[TrialRecord])]) -> WallTimeSummary {
    let mut summary = WallTimeSummary::default();
    for (task, recs) in records {
        let ms: u64 = recs.iter().map(|r| r.wall_time_ms).sum();
        *summary.per_task_ms.entry(*task).or_default() += ms;
        summary.total_ms += ms;
    }
    summary
}

/// `H:MM`, minutes truncated.
pub fn format_hmm(ms: u64) -> String {
    let minutes = ms / 60_000;
    format!("{}:{:02}", minutes / 60, minutes % 60)
}

pub fn wall_time_table(summary: &WallTimeSummary, format: ReportFormat) -> String {
    let mut out = String::new();
    let rows = summary
        .per_task_ms
        .iter()
        .map(|(t, ms)| (t.as_str().to_string(), format_hmm(*ms)))
        .chain(std::iter::once(("Total".to_string(), format_hmm(summary.total_ms))));
    match format {
        ReportFormat::Csv => {
            out.push_str("Task,Computation Time\n");
            for (t, hm) in rows {
                let _ = writeln!(out, "{t},{hm}");
            }
        }
        ReportFormat::Markdown => {
            out.push_str("| Task | Computation Time |\n|---|---:|\n");
            for (t, hm) in rows {
                let _ = writeln!(out, "| {t} | {hm} |");
            }
        }
    }
    out
}
