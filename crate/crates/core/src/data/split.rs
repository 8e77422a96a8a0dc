use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Target split fractions. With `official_test`, the test part comes from the
/// dataset's own release and only the validation part is carved here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub official_test: bool,
}

impl SplitSpec {
    pub fn new(train: f64, valid: f64, test: f64, seed: u64, official_test: bool) -> Result<Self> {
        let spec = SplitSpec {
            train_fraction: train,
            valid_fraction: valid,
            test_fraction: test,
            seed,
            official_test,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Official test portion kept as released; `carve` of the remaining
    /// training portion becomes validation.
    pub fn official(test_fraction: f64, carve: f64, seed: u64) -> Result<Self> {
        let rest = 1.0 - test_fraction;
        Self::new(rest * (1.0 - carve), rest * carve, test_fraction, seed, true)
    }

    pub fn validate(&self) -> Result<()> {
        let fractions = [self.train_fraction, self.valid_fraction, self.test_fraction];
        if fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(Error::invalid(format!("split fractions must lie in (0,1): {fractions:?}")));
        }
        if (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("split fractions must sum to 1: {fractions:?}")));
        }
        Ok(())
    }

    /// Share of the training portion that becomes validation.
    pub fn carve_fraction(&self) -> f64 {
        self.valid_fraction / (self.train_fraction + self.valid_fraction)
    }
}

/// Uniform seeded sample of `round(carve_fraction * n)` items as validation;
/// both halves keep their original relative order.
pub fn carve_validation<T: Clone>(train: &[T], spec: &SplitSpec) -> Result<(Vec<T>, Vec<T>)> {
    spec.validate()?;
    let n = train.len();
    let valid_n = (spec.carve_fraction() * n as f64).round() as usize;
    let (rest, valid) = partition(train, valid_n, spec.seed);
    Ok((rest, valid))
}

/// Carves a test portion for datasets without an official test split.
pub fn carve_test<T: Clone>(items: &[T], spec: &SplitSpec) -> Result<(Vec<T>, Vec<T>)> {
    spec.validate()?;
    let test_n = (spec.test_fraction * items.len() as f64).round() as usize;
    Ok(partition(items, test_n, rng::derive_seed(spec.seed, 0x7e57)))
}

fn partition<T: Clone>(items: &[T], take: usize, seed: u64) -> (Vec<T>, Vec<T>) {
    let order = rng::permutation(items.len(), seed);
    let mut chosen = vec![false; items.len()];
    for &i in &order[..take.min(items.len())] {
        chosen[i] = true;
    }
    let mut rest = Vec::with_capacity(items.len() - take);
    let mut picked = Vec::with_capacity(take);
    for (item, &c) in items.iter().zip(&chosen) {
        if c {
            picked.push(item.clone());
        } else {
            rest.push(item.clone());
        }
    }
    (rest, picked)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub spec: SplitSpec,
    pub counts: Vec<(String, usize)>,
}

/// Writes each split as `<name>.jsonl` plus `split-manifest.json`.
pub fn write_splits<T: Serialize>(dir: &Path, spec: &SplitSpec, splits: &[(&str, &[T])]) -> Result<SplitManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, items) in splits {
        let path = dir.join(format!("{name}.jsonl"));
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        for item in *items {
            serde_json::to_writer(&mut out, item).map_err(|e| Error::json(&path, e))?;
            out.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
        out.flush().map_err(|e| Error::io(&path, e))?;
    }
    let manifest = SplitManifest {
        spec: *spec,
        counts: splits.iter().map(|(n, items)| (n.to_string(), items.len())).collect(),
    };
    let path = dir.join("split-manifest.json");
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::json(&path, e))?;
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
