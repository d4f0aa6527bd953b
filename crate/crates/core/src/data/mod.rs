//! Corpus ingestion, SST-2 test-label recovery, the synthetic review corpus,
//! and name-polarity mining.

mod names;
mod sst;
mod synthetic;

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use names::{extract_name_polarity, find_names, NamePolarity, NamePolarityResult};
pub use sst::{match_test_labels, normalize_phrase, DroppedSentence, MatchReport, PhraseDictionary};
pub use synthetic::{gen_synthetic_corpus, gen_synthetic_corpus_with, SyntheticCorpus};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub id: String,
    pub text: String,
    /// 0 negative, 1 positive.
    pub label: u8,
}

/// Byte ranges of the maximal alphanumeric runs in `text`.
pub fn word_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// Reads a GLUE-style `sentence<TAB>label` file. Ids are 1-based row numbers.
pub fn load_tsv(path: &Path) -> Result<Vec<LabeledInstance>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(path, e))?,
        None => return Err(parse_err(1, "missing header `sentence<TAB>label`".into())),
    };
    if header.trim_end_matches('\r') != "sentence\tlabel" {
        return Err(parse_err(1, format!("expected header `sentence<TAB>label`, found {header:?}")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let (text, label) = line
            .rsplit_once('\t')
            .ok_or_else(|| parse_err(line_no, "expected `sentence<TAB>label`".into()))?;
        let label = match label.trim() {
            "0" => 0,
            "1" => 1,
            other => return Err(parse_err(line_no, format!("label {other:?} is not 0 or 1"))),
        };
        if text.trim().is_empty() {
            return Err(parse_err(line_no, "empty sentence".into()));
        }
        out.push(LabeledInstance {
            id: (out.len() + 1).to_string(),
            text: text.to_string(),
            label,
        });
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
