//! Recovering SST-2 test labels from the treebank phrase dictionary.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::LabeledInstance;
use crate::{Error, Result};

/// Scores strictly above this map to positive.
pub const POSITIVE_ABOVE: f64 = 0.6;
/// Scores at or below this map to negative.
pub const NEGATIVE_AT_MOST: f64 = 0.4;

#[derive(Debug, Clone, Default)]
pub struct PhraseDictionary {
    phrase_ids: HashMap<String, u64>,
    scores: HashMap<u64, f64>,
}

/// Lowercases, collapses whitespace and undoes the treebank bracket escapes.
pub fn normalize_phrase(s: &str) -> String {
    s.split_whitespace()
        .map(|tok| match tok {
            "-LRB-" | "-lrb-" => "(",
            "-RRB-" | "-rrb-" => ")",
            t => t,
        })
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

impl PhraseDictionary {
    pub fn new(entries: impl IntoIterator<Item = (String, u64)>, scores: HashMap<u64, f64>) -> Result<Self> {
        let mut phrase_ids = HashMap::new();
        for (phrase, id) in entries {
            if !scores.contains_key(&id) {
                return Err(Error::input(format!("phrase id {id} ({phrase:?}) has no sentiment score")));
            }
            phrase_ids.insert(normalize_phrase(&phrase), id);
        }
        if let Some((id, s)) = scores.iter().find(|(_, s)| !(0.0..=1.0).contains(*s)) {
            return Err(Error::input(format!("score {s} for phrase id {id} is outside [0, 1]")));
        }
        Ok(PhraseDictionary { phrase_ids, scores })
    }

    /// Loads `dictionary.txt` (`phrase|phrase_id`) and `sentiment_labels.txt`
    /// (`phrase_id|score`, optional header line).
    pub fn load(dictionary: &Path, sentiment_labels: &Path) -> Result<Self> {
        let scores_text = fs::read_to_string(sentiment_labels).map_err(|e| Error::io(sentiment_labels, e))?;
        let mut scores = HashMap::new();
        for (i, line) in scores_text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: sentiment_labels.to_path_buf(),
                line: i + 1,
                message,
            };
            let (id, score) = line
                .split_once('|')
                .ok_or_else(|| err("expected `phrase_id|score`".into()))?;
            let Ok(id) = id.trim().parse::<u64>() else {
                if i == 0 {
                    continue; // header
                }
                return Err(err(format!("bad phrase id {id:?}")));
            };
            let score: f64 = score.trim().parse().map_err(|_| err(format!("bad score {score:?}")))?;
            scores.insert(id, score);
        }

        let dict_text = fs::read_to_string(dictionary).map_err(|e| Error::io(dictionary, e))?;
        let mut entries = Vec::new();
        for (i, line) in dict_text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: dictionary.to_path_buf(),
                line: i + 1,
                message,
            };
            let (phrase, id) = line
                .rsplit_once('|')
                .ok_or_else(|| err("expected `phrase|phrase_id`".into()))?;
            let id: u64 = id.trim().parse().map_err(|_| err(format!("bad phrase id {id:?}")))?;
            entries.push((phrase.to_string(), id));
        }
        Self::new(entries, scores)
    }

    pub fn score(&self, sentence: &str) -> Option<f64> {
        self.phrase_ids
            .get(&normalize_phrase(sentence))
            .and_then(|id| self.scores.get(id))
            .copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroppedSentence {
    pub id: String,
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchReport {
    pub labeled: Vec<LabeledInstance>,
    /// Matched, but the score falls in the neutral band (0.4, 0.6].
    pub dropped: Vec<DroppedSentence>,
    /// No dictionary entry; left for manual resolution.
    pub unmatched: Vec<(String, String)>,
}

/// Labels test sentences through the phrase dictionary. Ids are 1-based
/// positions in `sentences`.
pub fn match_test_labels<S: AsRef<str>>(sentences: &[S], dict: &PhraseDictionary) -> MatchReport {
    let mut report = MatchReport::default();
    for (i, sentence) in sentences.iter().enumerate() {
        let text = sentence.as_ref().to_string();
        let id = (i + 1).to_string();
        match dict.score(&text) {
            None => report.unmatched.push((id, text)),
            Some(score) if score > POSITIVE_ABOVE => report.labeled.push(LabeledInstance { id, text, label: 1 }),
            Some(score) if score <= NEGATIVE_AT_MOST => report.labeled.push(LabeledInstance { id, text, label: 0 }),
            Some(score) => report.dropped.push(DroppedSentence { id, text, score }),
        }
    }
    report
}
