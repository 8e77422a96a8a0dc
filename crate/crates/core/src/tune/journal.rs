use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use log::{info, warn};
use rayon::prelude::*;

use super::config::TrialConfig;
use super::trainer::{TaskData, Trainer};
use super::trial::{run_trial, select_best, TrialRecord};
use crate::error::{Error, Result};

/// Append-only JSONL log of trial records keyed by config hash. A later
/// line with the same key supersedes an earlier one.
#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: File,
    records: Vec<TrialRecord>,
    latest: HashMap<String, usize>,
}

impl Journal {
    /// Opens or creates the journal, replaying existing lines. A torn final
    /// line (from an interrupted write) is ignored; any other bad line is an error.
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut records = Vec::new();
        let mut latest = HashMap::new();
        let mut torn = false;
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
            let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>().map_err(|e| Error::io(path, e))?;
            let last = lines.len();
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<TrialRecord>(line) {
                    Ok(record) => {
                        latest.insert(record.config_hash.clone(), records.len());
                        records.push(record);
                    }
                    Err(e) if i + 1 == last => {
                        warn!("{}: ignoring torn final line ({e})", path.display());
                        torn = true;
                    }
                    Err(e) => return Err(Error::parse(path, i + 1, e.to_string())),
                }
            }
        }
        if torn {
            let mut body = String::new();
            for r in &records {
                body.push_str(&serde_json::to_string(r).expect("record serializes"));
                body.push('\n');
            }
            fs::write(path, body).map_err(|e| Error::io(path, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(Journal {
            path: path.to_path_buf(),
            file,
            records,
            latest,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, hash: &str) -> Option<&TrialRecord> {
        self.latest.get(hash).map(|&i| &self.records[i])
    }

    pub fn append(&mut self, record: TrialRecord) -> Result<()> {
        let mut line = serde_json::to_string(&record).expect("record serializes");
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| Error::io(&self.path, e))?;
        self.latest.insert(record.config_hash.clone(), self.records.len());
        self.records.push(record);
        Ok(())
    }

    /// Current record per key, in order of first appearance.
    pub fn records(&self) -> Vec<&TrialRecord> {
        let mut seen = std::collections::HashSet::new();
        self.records
            .iter()
            .filter(|r| seen.insert(r.config_hash.as_str()))
            .map(|r| self.get(&r.config_hash).expect("indexed"))
            .collect()
    }

    /// Number of lines written, superseded ones included.
    pub fn line_count(&self) -> usize {
        self.records.len()
    }
}

/// Reads the current records of a journal without opening it for writing.
pub fn read_journal(path: &Path) -> Result<Vec<TrialRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut order: Vec<String> = Vec::new();
    let mut latest: HashMap<String, TrialRecord> = HashMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let record: TrialRecord = serde_json::from_str(line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        if !latest.contains_key(&record.config_hash) {
            order.push(record.config_hash.clone());
        }
        latest.insert(record.config_hash.clone(), record);
    }
    Ok(order.into_iter().map(|h| latest.remove(&h).expect("present")).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridOptions {
    pub workers: usize,
    /// Score the test split of every trial, not only the selected one.
    pub evaluate_all_test: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            workers: 1,
            evaluate_all_test: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    /// One record per config, in grid order.
    pub records: Vec<TrialRecord>,
    pub selected: usize,
    /// Trials executed by this call (0 when everything was journaled).
    pub executed: usize,
}

impl GridOutcome {
    pub fn winner(&self) -> &TrialRecord {
        &self.records[self.selected]
    }
}

struct Reorder<'a> {
    journal: &'a mut Journal,
    next: usize,
    pending: BTreeMap<usize, TrialRecord>,
    failure: Option<Error>,
}

impl Reorder<'_> {
    fn push(&mut self, index: usize, record: TrialRecord) {
        self.pending.insert(index, record);
        while let Some(record) = self.pending.remove(&self.next) {
            if self.failure.is_none() {
                if let Err(e) = self.journal.append(record) {
                    self.failure = Some(e);
                }
            }
            self.next += 1;
        }
    }
}

/// Runs every config not yet in the journal, then selects the winner by
/// validation score and makes sure it carries a test score. Records are
/// appended in grid order whatever the completion order, so the journal is
/// independent of the worker count. Errored trials are kept, not retried.
pub fn run_grid<T: Trainer>(
    configs: &[TrialConfig],
    trainer: &T,
    data: &TaskData,
    journal: &mut Journal,
    options: GridOptions,
) -> Result<GridOutcome> {
    let identity = trainer.identity();
    let hashes: Vec<String> = configs.iter().map(|c| c.hash(&identity)).collect();
    let todo: Vec<usize> = (0..configs.len()).filter(|&i| journal.get(&hashes[i]).is_none()).collect();
    let workers = if trainer.concurrent() { options.workers.max(1) } else { 1 };
    info!(
        "{}: {} of {} trials journaled, running {} on {} worker(s)",
        journal.path().display(),
        configs.len() - todo.len(),
        configs.len(),
        todo.len(),
        workers
    );
    let mut executed = todo.len();
    if !todo.is_empty() {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
        let sink = Mutex::new(Reorder {
            journal: &mut *journal,
            next: 0,
            pending: BTreeMap::new(),
            failure: None,
        });
        pool.install(|| {
            todo.par_iter().enumerate().for_each(|(slot, &i)| {
                let record = run_trial(&configs[i], trainer, data, options.evaluate_all_test);
                sink.lock().expect("journal lock").push(slot, record);
            })
        });
        if let Some(e) = sink.into_inner().expect("journal lock").failure {
            return Err(e);
        }
    }
    let mut records: Vec<TrialRecord> = hashes.iter().map(|h| journal.get(h).expect("journaled").clone()).collect();
    let selected = select_best(&records)?;
    if records[selected].test_score.is_none() {
        let rerun = run_trial(&configs[selected], trainer, data, true);
        if rerun.per_epoch_valid_scores != records[selected].per_epoch_valid_scores {
            return Err(Error::Trainer(format!(
                "trainer {identity} is not deterministic: re-running the selected trial changed its validation trace"
            )));
        }
        journal.append(rerun.clone())?;
        records[selected] = rerun;
        executed += 1;
    }
    Ok(GridOutcome {
        records,
        selected,
        executed,
    })
}
