use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;

/// Dense token index. `PAD` and `UNK` always occupy indices 0 and 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Rebuilds a vocabulary from its index-ordered token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[PAD_INDEX] != PAD || tokens[UNK_INDEX] != UNK {
            return Err(Error::input("vocabulary must start with <pad>, <unk>"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if index.insert(tok.clone(), i).is_some() {
                return Err(Error::input(format!("duplicate vocabulary token '{tok}'")));
            }
        }
        Ok(Vocab { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// SHA-256 over the newline-joined token list.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for tok in &self.tokens {
            h.update(tok.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Builds a vocabulary from raw texts. Tokens seen at least `min_freq` times
/// are indexed by descending frequency, ties broken lexicographically.
pub fn build_vocab<S: AsRef<str>>(texts: &[S], min_freq: usize) -> Result<Vocab> {
    if texts.is_empty() {
        return Err(Error::input("cannot build a vocabulary from an empty corpus"));
    }
    if min_freq == 0 {
        return Err(Error::input("min_freq must be at least 1"));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for text in texts {
        for tok in tokenize(text.as_ref()) {
            *counts.entry(tok).or_default() += 1;
        }
    }
    let mut kept: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(tok, n)| *n >= min_freq && tok != PAD && tok != UNK)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut tokens = vec![PAD.to_string(), UNK.to_string()];
    tokens.extend(kept.into_iter().map(|(t, _)| t));
    Vocab::from_tokens(tokens)
}

/// Maps text to token indices. Unknown tokens become `UNK`; text without any
/// token encodes to a single `UNK`.
pub fn encode(text: &str, vocab: &Vocab) -> Vec<usize> {
    let ids: Vec<usize> = tokenize(text)
        .iter()
        .map(|t| vocab.get(t).unwrap_or(UNK_INDEX))
        .collect();
    if ids.is_empty() {
        vec![UNK_INDEX]
    } else {
        ids
    }
}
