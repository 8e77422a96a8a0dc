use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BioTag {
    Outside,
    Begin(String),
    Inside(String),
}

impl BioTag {
    pub fn entity_type(&self) -> Option<&str> {
        match self {
            BioTag::Outside => None,
            BioTag::Begin(t) | BioTag::Inside(t) => Some(t),
        }
    }
}

impl FromStr for BioTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "O" {
            return Ok(BioTag::Outside);
        }
        let (prefix, ty) = s
            .split_once('-')
            .ok_or_else(|| Error::invalid(format!("malformed BIO tag {s:?}")))?;
        if ty.is_empty() {
            return Err(Error::invalid(format!("BIO tag {s:?} has no entity type")));
        }
        match prefix {
            "B" => Ok(BioTag::Begin(ty.to_string())),
            "I" => Ok(BioTag::Inside(ty.to_string())),
            _ => Err(Error::invalid(format!("malformed BIO tag {s:?}"))),
        }
    }
}

impl fmt::Display for BioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioTag::Outside => f.write_str("O"),
            BioTag::Begin(t) => write!(f, "B-{t}"),
            BioTag::Inside(t) => write!(f, "I-{t}"),
        }
    }
}

/// Parses a whole tag sequence.
pub fn parse_tags<S: AsRef<str>>(tags: &[S]) -> Result<Vec<BioTag>, Error> {
    tags.iter().map(|t| t.as_ref().parse()).collect()
}

/// Typed entity span over tokens, `end` exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub sentence_index: usize,
    pub start: usize,
    pub end: usize,
    pub entity_type: String,
}

impl Span {
    pub fn new(sentence_index: usize, start: usize, end: usize, entity_type: impl Into<String>) -> Self {
        Span {
            sentence_index,
            start,
            end,
            entity_type: entity_type.into(),
        }
    }
}

/// Maximal `B-X I-X*` runs become spans. An `I-X` that does not continue an
/// open `X` span opens a new one, so the function is total on any tag list.
pub fn bio_to_spans(sentence_index: usize, tags: &[BioTag]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            BioTag::Outside => {
                if let Some((start, ty)) = open.take() {
                    spans.push(Span::new(sentence_index, start, i, ty));
                }
            }
            BioTag::Begin(ty) => {
                if let Some((start, prev)) = open.take() {
                    spans.push(Span::new(sentence_index, start, i, prev));
                }
                open = Some((i, ty));
            }
            BioTag::Inside(ty) => match open {
                Some((_, prev)) if prev == ty => {}
                _ => {
                    if let Some((start, prev)) = open.take() {
                        spans.push(Span::new(sentence_index, start, i, prev));
                    }
                    open = Some((i, ty));
                }
            },
        }
    }
    if let Some((start, ty)) = open {
        spans.push(Span::new(sentence_index, start, tags.len(), ty));
    }
    spans
}

/// Inverse of [`bio_to_spans`] for non-overlapping spans within `len` tokens.
pub fn spans_to_bio(len: usize, spans: &[Span]) -> Result<Vec<BioTag>, Error> {
    let mut tags = vec![BioTag::Outside; len];
    for span in spans {
        if span.start >= span.end || span.end > len {
            return Err(Error::invalid(format!("span {span:?} out of range for length {len}")));
        }
        if tags[span.start..span.end].iter().any(|t| *t != BioTag::Outside) {
            return Err(Error::invalid(format!("span {span:?} overlaps another span")));
        }
        tags[span.start] = BioTag::Begin(span.entity_type.clone());
        for tag in &mut tags[span.start + 1..span.end] {
            *tag = BioTag::Inside(span.entity_type.clone());
        }
    }
    Ok(tags)
}

/// A position where `I-X` does not continue a `B-X`/`I-X` run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BioViolation {
    pub sentence_index: usize,
    pub position: usize,
    pub tag: String,
    pub previous: String,
}

pub fn bio_violations(sentence_index: usize, tags: &[BioTag]) -> Vec<BioViolation> {
    let mut out = Vec::new();
    let mut prev = &BioTag::Outside;
    for (i, tag) in tags.iter().enumerate() {
        if let BioTag::Inside(ty) = tag {
            if prev.entity_type() != Some(ty.as_str()) {
                out.push(BioViolation {
                    sentence_index,
                    position: i,
                    tag: tag.to_string(),
                    previous: prev.to_string(),
                });
            }
        }
        prev = tag;
    }
    out
}

/// Promotes every violating `I-X` to `B-X`.
pub fn repair_bio(tags: &mut [BioTag]) -> usize {
    let mut repaired = 0;
    for i in 0..tags.len() {
        if let BioTag::Inside(ty) = &tags[i] {
            let continues = i > 0 && tags[i - 1].entity_type() == Some(ty.as_str());
            if !continues {
                tags[i] = BioTag::Begin(ty.clone());
                repaired += 1;
            }
        }
    }
    repaired
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tags(s: &[&str]) -> Vec<BioTag> {
        parse_tags(s).unwrap()
    }

    #[test]
    fn spans_from_runs() {
        let spans = bio_to_spans(0, &tags(&["B-PER", "I-PER", "O", "B-LOC"]));
        assert_eq!(spans, vec![Span::new(0, 0, 2, "PER"), Span::new(0, 3, 4, "LOC")]);
    }

    #[test]
    fn all_outside_has_no_spans() {
        assert!(bio_to_spans(3, &tags(&["O", "O", "O"])).is_empty());
    }

    #[test]
    fn adjacent_begins_split_spans() {
        let spans = bio_to_spans(0, &tags(&["B-PER", "B-PER", "I-PER", "I-LOC"]));
        assert_eq!(
            spans,
            vec![Span::new(0, 0, 1, "PER"), Span::new(0, 1, 3, "PER"), Span::new(0, 3, 4, "LOC")]
        );
    }

    #[test]
    fn violation_and_repair() {
        let mut t = tags(&["O", "I-PER"]);
        let v = bio_violations(0, &t);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].position, 1);
        assert_eq!(repair_bio(&mut t), 1);
        assert_eq!(t, tags(&["O", "B-PER"]));
        assert!(bio_violations(0, &t).is_empty());
    }

    #[test]
    fn malformed_tags_rejected() {
        for bad in ["X-PER", "B-", "PER", "o"] {
            assert!(bad.parse::<BioTag>().is_err(), "{bad}");
        }
        assert_eq!("I-ORG".parse::<BioTag>().unwrap().to_string(), "I-ORG");
    }

    fn span_set() -> impl Strategy<Value = (usize, Vec<Span>)> {
        (1usize..12).prop_flat_map(|len| {
            proptest::collection::vec((0..len, 1usize..4, 0usize..3), 0..5).prop_map(move |raw| {
                let mut taken = vec![false; len];
                let mut spans = Vec::new();
                for (start, width, ty) in raw {
                    let end = (start + width).min(len);
                    if taken[start..end].iter().any(|&t| t) {
                        continue;
                    }
                    taken[start..end].iter_mut().for_each(|t| *t = true);
                    spans.push(Span::new(0, start, end, ["PER", "LOC", "ORG"][ty]));
                }
                spans.sort();
                (len, spans)
            })
        })
    }

    proptest! {
        #[test]
        fn spans_bio_round_trip((len, spans) in span_set()) {
            let tags = spans_to_bio(len, &spans).unwrap();
            prop_assert!(bio_violations(0, &tags).is_empty());
            prop_assert_eq!(bio_to_spans(0, &tags), spans);
        }
    }
}
