use std::collections::HashSet;

use serde::Serialize;

use super::spans::Span;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanF1<S> {
    pub precision: S,
    pub recall: S,
    pub f1: S,
    pub true_positives: u64,
    pub gold: u64,
    pub predicted: u64,
    /// Both gold and predictions empty; scores are reported as 1.
    pub degenerate: bool,
}

/// Harmonic mean from raw counts; 0 when precision and recall are both 0.
fn f1_from_counts<S: Scalar>(tp: u64, predicted: u64, gold: u64) -> (S, S, S) {
    let precision = if predicted == 0 { S::zero() } else { S::ratio(tp, predicted) };
    let recall = if gold == 0 { S::zero() } else { S::ratio(tp, gold) };
    // 2PR/(P+R) == 2tp/(pred+gold)
    let f1 = if tp == 0 { S::zero() } else { S::ratio(2 * tp, predicted + gold) };
    (precision, recall, f1)
}

/// Exact-match span F1 pooled over all sentences.
pub fn micro_f1_spans<S: Scalar>(gold: &[Vec<Span>], predicted: &[Vec<Span>]) -> Result<SpanF1<S>> {
    if gold.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            what: "gold and predicted sentence counts",
            left: gold.len(),
            right: predicted.len(),
        });
    }
    let mut tp = 0u64;
    let mut n_gold = 0u64;
    let mut n_pred = 0u64;
    for (i, (g, p)) in gold.iter().zip(predicted).enumerate() {
        let key = |s: &Span| (i, s.start, s.end, s.entity_type.clone());
        let g: HashSet<_> = g.iter().map(key).collect();
        let p: HashSet<_> = p.iter().map(key).collect();
        n_gold += g.len() as u64;
        n_pred += p.len() as u64;
        tp += g.intersection(&p).count() as u64;
    }
    if n_gold == 0 && n_pred == 0 {
        return Ok(SpanF1 {
            precision: S::one(),
            recall: S::one(),
            f1: S::one(),
            true_positives: 0,
            gold: 0,
            predicted: 0,
            degenerate: true,
        });
    }
    let (precision, recall, f1) = f1_from_counts(tp, n_pred, n_gold);
    Ok(SpanF1 {
        precision,
        recall,
        f1,
        true_positives: tp,
        gold: n_gold,
        predicted: n_pred,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacroF1<S> {
    pub macro_f1: S,
    pub per_class: Vec<S>,
    /// Classes with neither gold nor predicted instances (scored 0).
    pub degenerate_classes: Vec<usize>,
}

/// Unweighted mean of per-class F1 over `0..class_count`.
pub fn macro_f1<S: Scalar>(gold: &[usize], predicted: &[usize], class_count: usize) -> Result<MacroF1<S>> {
    if gold.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            what: "gold and predicted label counts",
            left: gold.len(),
            right: predicted.len(),
        });
    }
    if class_count == 0 {
        return Err(Error::invalid("class_count must be positive"));
    }
    let mut tp = vec![0u64; class_count];
    let mut gold_n = vec![0u64; class_count];
    let mut pred_n = vec![0u64; class_count];
    for (&g, &p) in gold.iter().zip(predicted) {
        if g >= class_count || p >= class_count {
            return Err(Error::invalid(format!("label out of range for {class_count} classes")));
        }
        gold_n[g] += 1;
        pred_n[p] += 1;
        if g == p {
            tp[g] += 1;
        }
    }
    let mut degenerate_classes = Vec::new();
    let per_class: Vec<S> = (0..class_count)
        .map(|c| {
            if gold_n[c] == 0 && pred_n[c] == 0 {
                degenerate_classes.push(c);
                return S::zero();
            }
            f1_from_counts::<S>(tp[c], pred_n[c], gold_n[c]).2
        })
        .collect();
    let macro_f1 = unweighted_mean(&per_class)?;
    Ok(MacroF1 {
        macro_f1,
        per_class,
        degenerate_classes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanMacroF1<S> {
    pub macro_f1: S,
    /// Entity types seen in gold or predictions, sorted, with their span F1.
    pub per_type: Vec<(String, SpanF1<S>)>,
}

/// Unweighted mean over entity types of the per-type span F1. With no
/// spans at all the result is degenerate and scored 1.
pub fn macro_f1_spans<S: Scalar>(gold: &[Vec<Span>], predicted: &[Vec<Span>]) -> Result<SpanMacroF1<S>> {
    let mut types: Vec<&str> = gold
        .iter()
        .chain(predicted)
        .flatten()
        .map(|s| s.entity_type.as_str())
        .collect();
    types.sort_unstable();
    types.dedup();
    let filter = |sets: &[Vec<Span>], t: &str| -> Vec<Vec<Span>> {
        sets.iter()
            .map(|v| v.iter().filter(|s| s.entity_type == t).cloned().collect())
            .collect()
    };
    let mut per_type = Vec::with_capacity(types.len());
    for t in &types {
        per_type.push((t.to_string(), micro_f1_spans::<S>(&filter(gold, t), &filter(predicted, t))?));
    }
    if per_type.is_empty() {
        micro_f1_spans::<S>(gold, predicted)?;
        return Ok(SpanMacroF1 {
            macro_f1: S::one(),
            per_type,
        });
    }
    let scores: Vec<S> = per_type.iter().map(|(_, f)| f.f1).collect();
    Ok(SpanMacroF1 {
        macro_f1: unweighted_mean(&scores)?,
        per_type,
    })
}

pub fn unweighted_mean<S: Scalar>(scores: &[S]) -> Result<S> {
    if scores.is_empty() {
        return Err(Error::invalid("mean of an empty score list"));
    }
    let sum = scores.iter().fold(S::zero(), |acc, &s| acc + s);
    Ok(sum / S::from_count(scores.len() as u64))
}
