use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Neutral,
    Negative,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Positive, Sentiment::Neutral, Sentiment::Negative];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Positive => "positive",
            Sentiment::Neutral => "neutral",
            Sentiment::Negative => "negative",
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sentiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" => Ok(Sentiment::Positive),
            "neutral" | "neu" => Ok(Sentiment::Neutral),
            "negative" | "neg" => Ok(Sentiment::Negative),
            other => Err(Error::invalid(format!("unknown sentiment label {other:?}"))),
        }
    }
}

/// A pre-tokenized comment with its polarity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledText {
    pub tokens: Vec<String>,
    pub label: Sentiment,
}

impl LabeledText {
    pub fn new(text: &str, label: Sentiment) -> Result<Self> {
        let tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        if tokens.is_empty() {
            return Err(Error::invalid("labeled text has no tokens"));
        }
        Ok(LabeledText { tokens, label })
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Reads `text<TAB>label` rows. A first row of `text\tlabel` is treated as a
/// header; blank lines are skipped.
pub fn load_sentiment(path: &Path) -> Result<Vec<LabeledText>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (index, line) in raw.lines().enumerate() {
        let lineno = index + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (text, label) = line
            .rsplit_once('\t')
            .ok_or_else(|| Error::parse(path, lineno, "expected text<TAB>label"))?;
        if lineno == 1 && text.trim().eq_ignore_ascii_case("text") && label.trim().eq_ignore_ascii_case("label")
        {
            continue;
        }
        let label: Sentiment = label
            .parse()
            .map_err(|e: Error| Error::parse(path, lineno, e.to_string()))?;
        out.push(LabeledText::new(text, label).map_err(|e| Error::parse(path, lineno, e.to_string()))?);
    }
    Ok(out)
}

pub fn save_sentiment(path: &Path, items: &[LabeledText]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&item.text());
        out.push('\t');
        out.push_str(item.label.as_str());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// A text that occurs in more than one split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collision {
    pub text: String,
    /// (split name, index within split) for every occurrence after the first split.
    pub occurrences: Vec<(String, usize)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub collisions: Vec<Collision>,
}

impl LeakageReport {
    pub fn is_clean(&self) -> bool {
        self.collisions.is_empty()
    }
}

/// Finds texts shared between different named splits. Duplicates inside a
/// single split are not leakage and are ignored.
pub fn audit_leakage(splits: &[(&str, &[LabeledText])]) -> LeakageReport {
    let mut first_seen: HashMap<String, (usize, Vec<(String, usize)>)> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    for (split_idx, (name, items)) in splits.iter().enumerate() {
        for (i, item) in items.iter().enumerate() {
            let text = item.text();
            match first_seen.get_mut(&text) {
                Some((origin, hits)) => {
                    if *origin != split_idx {
                        hits.push((name.to_string(), i));
                    }
                }
                None => {
                    order.push(text.clone());
                    first_seen.insert(text, (split_idx, Vec::new()));
                }
            }
        }
    }
    let collisions = order
        .into_iter()
        .filter_map(|text| {
            let (_, hits) = first_seen.remove(&text).expect("recorded");
            (!hits.is_empty()).then_some(Collision {
                text,
                occurrences: hits,
            })
        })
        .collect();
    LeakageReport { collisions }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let file = tempfile::NamedTempFile::new().unwrap();
        fs::write(file.path(), content).unwrap();
        file
    }

    #[test]
    fn single_row() {
        let f = write("טוב\tpositive\n");
        let items = load_sentiment(f.path()).unwrap();
        assert_eq!(items.len(), 1);
        assert_eq!(items[0].label, Sentiment::Positive);
        assert_eq!(items[0].tokens, ["טוב"]);
    }

    #[test]
    fn header_and_blank_lines() {
        let f = write("text\tlabel\nזה רע\tnegative\n\nבסדר\tneutral\n");
        let items = load_sentiment(f.path()).unwrap();
        assert_eq!(items.len(), 2);
        assert_eq!(items[1].label, Sentiment::Neutral);
    }

    #[test]
    fn unknown_label_names_row() {
        let f = write("a\tpositive\nb\tmaybe\n");
        match load_sentiment(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn planted_collision_detected() {
        let train = vec![
            LabeledText::new("אחת", Sentiment::Positive).unwrap(),
            LabeledText::new("שתיים", Sentiment::Negative).unwrap(),
        ];
        let test = vec![
            LabeledText::new("שלוש", Sentiment::Neutral).unwrap(),
            LabeledText::new("שתיים", Sentiment::Negative).unwrap(),
        ];
        let report = audit_leakage(&[("train", &train), ("test", &test)]);
        assert_eq!(report.collisions.len(), 1);
        assert_eq!(report.collisions[0].text, "שתיים");
        assert_eq!(report.collisions[0].occurrences, vec![("test".to_string(), 1)]);
    }

    #[test]
    fn within_split_duplicates_are_not_leakage() {
        let train = vec![
            LabeledText::new("x", Sentiment::Positive).unwrap(),
            LabeledText::new("x", Sentiment::Positive).unwrap(),
        ];
        assert!(audit_leakage(&[("train", &train), ("test", &[])]).is_clean());
    }
}
