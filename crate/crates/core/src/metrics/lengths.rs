use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const BUCKET_WIDTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthStats<S = f64> {
    pub max: usize,
    pub mean: S,
    /// Nearest-rank 95th percentile.
    pub p95: usize,
}

/// Value at 1-indexed rank `ceil(q * n)` of the sorted list, `q` in (0, 1].
/// The rank is computed exactly from `q = num / den`.
pub fn nearest_rank(sorted: &[usize], num: u64, den: u64) -> Option<usize> {
    if sorted.is_empty() || num == 0 || num > den {
        return None;
    }
    let n = sorted.len() as u64;
    let rank = (num * n).div_ceil(den).max(1);
    Some(sorted[rank as usize - 1])
}

pub fn length_stats<S: Scalar>(lengths: &[usize]) -> Result<LengthStats<S>> {
    if lengths.is_empty() {
        return Err(Error::invalid("length statistics of an empty list"));
    }
    let mut sorted = lengths.to_vec();
    sorted.sort_unstable();
    let total: u64 = sorted.iter().map(|&l| l as u64).sum();
    Ok(LengthStats {
        max: *sorted.last().expect("non-empty"),
        mean: S::ratio(total, sorted.len() as u64),
        p95: nearest_rank(&sorted, 95, 100).expect("non-empty"),
    })
}

fn round_up(n: usize) -> usize {
    n.div_ceil(BUCKET_WIDTH).max(1) * BUCKET_WIDTH
}

/// Maximum input length for a dataset from the per-tokenizer statistics.
///
/// The base bucket is the largest p95 rounded up to a multiple of 64 (at
/// least 64). If the longest sequence seen by any tokenizer fits within one
/// more bucket, the limit is raised to cover it; longer outliers are
/// truncated instead.
pub fn select_bucket<S>(stats: &[LengthStats<S>]) -> Result<usize> {
    let p95 = stats
        .iter()
        .map(|s| s.p95)
        .max()
        .ok_or_else(|| Error::invalid("select_bucket needs at least one statistics entry"))?;
    let longest = stats.iter().map(|s| s.max).max().expect("non-empty");
    let base = round_up(p95).max(BUCKET_WIDTH);
    let cover = round_up(longest);
    Ok(if cover <= base + BUCKET_WIDTH { cover.max(base) } else { base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;

    #[test]
    fn ladder_statistics() {
        let lengths: Vec<usize> = (1..=100).collect();
        let s = length_stats::<Exact>(&lengths).unwrap();
        assert_eq!(s.p95, 95);
        assert_eq!(s.max, 100);
        assert_eq!(s.mean, Exact::new(101, 2));
    }

    #[test]
    fn singleton_statistics() {
        let s = length_stats::<f64>(&[7]).unwrap();
        assert_eq!((s.max, s.mean, s.p95), (7, 7.0, 7));
        assert!(length_stats::<f64>(&[]).is_err());
    }

    fn stats(p95: usize, max: usize) -> LengthStats {
        LengthStats { max, mean: 0.0, p95 }
    }

    #[test]
    fn bucket_rule_cases() {
        assert_eq!(select_bucket(&[stats(10, 20)]).unwrap(), 64);
        assert_eq!(select_bucket(&[stats(60, 120)]).unwrap(), 128);
        assert_eq!(select_bucket(&[stats(60, 129)]).unwrap(), 64);
        assert_eq!(select_bucket(&[stats(65, 70)]).unwrap(), 128);
        assert_eq!(select_bucket(&[stats(0, 0)]).unwrap(), 64);
        assert!(select_bucket::<f64>(&[]).is_err());
    }
}
