use serde::{Deserialize, Serialize};

use super::vocab::Vocabulary;
use crate::error::{Error, Result};

/// Whitespace tokenizer with optional lowercasing and punctuation splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tokenizer {
    pub lowercase: bool,
    pub split_punctuation: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self {
            lowercase: true,
            split_punctuation: true,
        }
    }
}

impl Tokenizer {
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for word in text.split_whitespace() {
            let word = if self.lowercase {
                word.to_lowercase()
            } else {
                word.to_owned()
            };
            if !self.split_punctuation {
                out.push(word);
                continue;
            }
            let mut current = String::new();
            for ch in word.chars() {
                if ch.is_ascii_punctuation() {
                    if !current.is_empty() {
                        out.push(std::mem::take(&mut current));
                    }
                    out.push(ch.to_string());
                } else {
                    current.push(ch);
                }
            }
            if !current.is_empty() {
                out.push(current);
            }
        }
        out
    }
}

/// Binary sentiment label obtained by thresholding a rating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Pos,
    Neg,
}

impl Label {
    pub fn opposite(self) -> Self {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }

    /// `> threshold` is positive, `< threshold` negative, equality is unlabeled.
    pub fn from_rating(rating: f64, threshold: f64) -> Option<Self> {
        if rating > threshold {
            Some(Label::Pos)
        } else if rating < threshold {
            Some(Label::Neg)
        } else {
            None
        }
    }
}

/// Fixed-length id sequence ready for the encoder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedDocument {
    pub doc_id: String,
    /// Exactly `N` ids; positions `true_len..` hold the pad id.
    pub ids: Vec<u32>,
    pub true_len: usize,
    pub group_id: Option<String>,
    /// One entry per manifest aspect; empty for review corpora.
    pub labels: Vec<Option<Label>>,
}

impl EncodedDocument {
    pub fn seq_len(&self) -> usize {
        self.ids.len()
    }
}

/// Maps tokens to ids, truncates to `seq_len`, then right-pads.
pub fn encode_document<S: AsRef<str>>(
    doc_id: impl Into<String>,
    tokens: &[S],
    vocab: &Vocabulary,
    seq_len: usize,
) -> EncodedDocument {
    let ids = tokens.iter().map(|t| vocab.id(t.as_ref())).collect::<Vec<_>>();
    encode_ids(doc_id, &ids, vocab.pad_id(), seq_len)
}

/// Truncates/pads an id sequence that has already been mapped through the vocabulary.
pub fn encode_ids(doc_id: impl Into<String>, ids: &[u32], pad_id: u32, seq_len: usize) -> EncodedDocument {
    let true_len = ids.len().min(seq_len);
    let mut out = Vec::with_capacity(seq_len);
    out.extend_from_slice(&ids[..true_len]);
    out.resize(seq_len, pad_id);
    EncodedDocument {
        doc_id: doc_id.into(),
        ids: out,
        true_len,
        group_id: None,
        labels: Vec::new(),
    }
}

/// Nearest-rank percentile of document lengths: the smallest `L` such that at
/// least `percentile` of the documents have length `<= L`.
pub fn truncation_length(lengths: impl IntoIterator<Item = usize>, percentile: f64) -> Result<usize> {
    if !(percentile > 0.0 && percentile <= 1.0) {
        return Err(Error::config(format!("percentile must lie in (0, 1], got {percentile}")));
    }
    let mut lengths: Vec<usize> = lengths.into_iter().collect();
    if lengths.is_empty() {
        return Err(Error::EmptyCorpus("cannot compute a truncation length of zero documents"));
    }
    lengths.sort_unstable();
    let n = lengths.len();
    // Guard against 0.95 * 100 = 95.00000000000001 rounding up to 96.
    let rank = ((percentile * n as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(lengths[rank.min(n) - 1])
}
