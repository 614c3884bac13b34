use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::text::{encode_document, EncodedDocument, Label, Tokenizer};
use super::vocab::Vocabulary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupervisionMode {
    ReviewGroups,
    DichotomizedRatings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            valid: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.valid, self.test];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return Err(Error::config(format!(
                "split ratios must be in [0, 1] and sum to 1, got {}/{}/{}",
                self.train, self.valid, self.test
            )));
        }
        Ok(())
    }

    /// Document counts per split; train and valid are rounded, test takes the rest.
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let train = ((self.train * n as f64).round() as usize).min(n);
        let valid = ((self.valid * n as f64).round() as usize).min(n - train);
        (train, valid, n - train - valid)
    }
}

/// Options that control how a corpus file is turned into documents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadOptions {
    pub tokenizer: Tokenizer,
    pub rating_threshold: f64,
    pub split: SplitRatios,
    pub split_seed: u64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            tokenizer: Tokenizer::default(),
            rating_threshold: 3.0,
            split: SplitRatios::default(),
            split_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub aspect_names: Vec<String>,
    pub supervision_mode: SupervisionMode,
    /// Split of each document, aligned with the corpus document order.
    pub split: Vec<Split>,
}

impl CorpusManifest {
    pub fn aspect_index(&self, name: &str) -> Option<usize> {
        self.aspect_names.iter().position(|a| a == name)
    }
}

/// One corpus record after tokenization, before id encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusDocument {
    pub id: String,
    pub tokens: Vec<String>,
    pub group_id: Option<String>,
    /// Per-aspect summaries (review corpora); empty otherwise.
    pub summaries: Vec<Option<Vec<String>>>,
    /// Raw per-aspect ratings (rated corpora); empty otherwise.
    pub ratings: Vec<f64>,
    /// Dichotomized ratings; `None` where the rating equals the threshold.
    pub labels: Vec<Option<Label>>,
}

impl CorpusDocument {
    /// Every token the document contributes to the vocabulary: its text and all summaries.
    pub fn all_tokens(&self) -> impl Iterator<Item = &String> {
        self.tokens
            .iter()
            .chain(self.summaries.iter().flatten().flatten())
    }

    pub fn encode(&self, vocab: &Vocabulary, seq_len: usize) -> EncodedDocument {
        let mut doc = encode_document(self.id.clone(), &self.tokens, vocab, seq_len);
        doc.group_id = self.group_id.clone();
        doc.labels = self.labels.clone();
        doc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub docs: Vec<CorpusDocument>,
    pub manifest: CorpusManifest,
}

impl Corpus {
    pub fn split_indices(&self, split: Split) -> Vec<usize> {
        (0..self.docs.len())
            .filter(|&i| self.manifest.split[i] == split)
            .collect()
    }

    pub fn docs_in(&self, split: Split) -> impl Iterator<Item = &CorpusDocument> {
        self.docs
            .iter()
            .zip(&self.manifest.split)
            .filter(move |(_, s)| **s == split)
            .map(|(d, _)| d)
    }

    pub fn n_aspects(&self) -> usize {
        self.manifest.aspect_names.len()
    }
}

#[derive(Deserialize)]
struct Header {
    aspects: Vec<String>,
    mode: SupervisionMode,
}

pub fn load_corpus(path: &Path, mode: Option<SupervisionMode>, options: &LoadOptions) -> Result<Corpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, path, mode, options)
}

/// Parses corpus JSONL text. `origin` is only used in error messages.
pub fn parse_corpus(
    text: &str,
    origin: &Path,
    mode: Option<SupervisionMode>,
    options: &LoadOptions,
) -> Result<Corpus> {
    options.split.validate()?;
    let malformed = |line: usize, message: String| Error::MalformedLine {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let missing = |line: usize, field: &str| Error::MissingField {
        path: origin.to_path_buf(),
        line,
        field: field.to_owned(),
    };

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, hraw) = lines.next().ok_or(Error::EmptyCorpus("corpus file has no header"))?;
    let header: Header = serde_json::from_str(hraw).map_err(|e| malformed(hline, format!("bad header: {e}")))?;
    if header.aspects.is_empty() {
        return Err(malformed(hline, "header declares no aspects".into()));
    }
    let unique: HashSet<&String> = header.aspects.iter().collect();
    if unique.len() != header.aspects.len() {
        return Err(malformed(hline, "duplicate aspect names in header".into()));
    }
    if let Some(m) = mode {
        if m != header.mode {
            return Err(malformed(hline, format!("expected mode {m:?}, header declares {:?}", header.mode)));
        }
    }

    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (ln, raw) in lines {
        let value: Value = serde_json::from_str(raw).map_err(|e| malformed(ln, e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| malformed(ln, "record is not a JSON object".into()))?;
        let id = obj
            .get("id")
            .ok_or_else(|| missing(ln, "id"))?
            .as_str()
            .ok_or_else(|| malformed(ln, "`id` must be a string".into()))?
            .to_owned();
        if !seen.insert(id.clone()) {
            return Err(malformed(ln, format!("duplicate document id `{id}`")));
        }
        let text = obj.get("text").ok_or_else(|| missing(ln, "text"))?;
        let tokens = text_tokens(text, &options.tokenizer).ok_or_else(|| malformed(ln, "`text` must be a string or an array of strings".into()))?;

        let mut doc = CorpusDocument {
            id,
            tokens,
            group_id: None,
            summaries: Vec::new(),
            ratings: Vec::new(),
            labels: Vec::new(),
        };
        match header.mode {
            SupervisionMode::ReviewGroups => {
                let review = obj.get("review").ok_or_else(|| missing(ln, "review"))?;
                doc.group_id = Some(
                    review
                        .as_str()
                        .ok_or_else(|| malformed(ln, "`review` must be a string".into()))?
                        .to_owned(),
                );
                let summaries = match obj.get("aspect_summaries") {
                    None | Some(Value::Null) => Map::new(),
                    Some(Value::Object(m)) => m.clone(),
                    Some(_) => return Err(malformed(ln, "`aspect_summaries` must be an object".into())),
                };
                for name in &header.aspects {
                    let s = match summaries.get(name) {
                        None | Some(Value::Null) => None,
                        Some(v) => Some(text_tokens(v, &options.tokenizer).ok_or_else(|| {
                            malformed(ln, format!("`aspect_summaries.{name}` must be text"))
                        })?),
                    };
                    doc.summaries.push(s);
                }
            }
            SupervisionMode::DichotomizedRatings => {
                let ratings = obj
                    .get("ratings")
                    .ok_or_else(|| missing(ln, "ratings"))?
                    .as_object()
                    .ok_or_else(|| malformed(ln, "`ratings` must be an object".into()))?;
                for name in &header.aspects {
                    let r = ratings
                        .get(name)
                        .ok_or_else(|| missing(ln, &format!("ratings.{name}")))?
                        .as_f64()
                        .ok_or_else(|| malformed(ln, format!("`ratings.{name}` must be a number")))?;
                    doc.ratings.push(r);
                    doc.labels.push(Label::from_rating(r, options.rating_threshold));
                }
            }
        }
        docs.push(doc);
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus("corpus file has no document records"));
    }

    let split = assign_splits(docs.iter().map(|d| d.id.as_str()), &options.split, options.split_seed);
    Ok(Corpus {
        docs,
        manifest: CorpusManifest {
            aspect_names: header.aspects,
            supervision_mode: header.mode,
            split,
        },
    })
}

fn text_tokens(v: &Value, tokenizer: &Tokenizer) -> Option<Vec<String>> {
    match v {
        Value::String(s) => Some(tokenizer.tokenize(s)),
        Value::Array(items) => items.iter().map(|t| t.as_str().map(str::to_owned)).collect(),
        _ => None,
    }
}

/// Orders documents by a seeded hash of their id and cuts the order at the
/// configured counts. Assignment depends only on ids, seed and ratios.
pub fn assign_splits<'a>(ids: impl IntoIterator<Item = &'a str>, ratios: &SplitRatios, seed: u64) -> Vec<Split> {
    let mut keyed: Vec<([u8; 32], usize)> = ids
        .into_iter()
        .enumerate()
        .map(|(i, id)| {
            let mut h = Sha256::new();
            h.update(seed.to_le_bytes());
            h.update(id.as_bytes());
            (h.finalize().into(), i)
        })
        .collect();
    keyed.sort();
    let (n_train, n_valid, _) = ratios.counts(keyed.len());
    let mut out = vec![Split::Test; keyed.len()];
    for (rank, (_, i)) in keyed.into_iter().enumerate() {
        out[i] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_valid {
            Split::Valid
        } else {
            Split::Test
        };
    }
    out
}
