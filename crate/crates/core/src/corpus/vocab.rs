use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::sha256_hex;

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Token to id map with reserved padding and unknown-word ids.
///
/// Ids `0` and `1` are `<pad>` and `<unk>`; retained tokens follow in
/// lexicographic order so that the id assignment does not depend on corpus order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
    unk_id: u32,
    pad_id: u32,
    min_df: usize,
}

/// On-disk form: `{tokens, min_df, unk_id, pad_id}` with `tokens` listing every id in order.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabularyFile {
    tokens: Vec<String>,
    min_df: usize,
    unk_id: u32,
    pad_id: u32,
}

impl Vocabulary {
    /// Keeps every token that occurs in at least `min_df` distinct documents.
    pub fn build<D, S>(docs: impl IntoIterator<Item = D>, min_df: usize) -> Result<Self>
    where
        D: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if min_df == 0 {
            return Err(Error::config("min_df must be at least 1"));
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut n_docs = 0usize;
        for doc in docs {
            n_docs += 1;
            let distinct: BTreeSet<String> = doc
                .into_iter()
                .map(|t| t.as_ref().to_owned())
                .collect();
            for tok in distinct {
                *df.entry(tok).or_insert(0) += 1;
            }
        }
        if n_docs == 0 {
            return Err(Error::EmptyCorpus("cannot build a vocabulary from zero documents"));
        }
        let retained = df
            .into_iter()
            .filter(|(t, c)| *c >= min_df && t != PAD_TOKEN && t != UNK_TOKEN)
            .map(|(t, _)| t);
        Ok(Self::from_tokens(retained, min_df))
    }

    fn from_tokens(tokens: impl IntoIterator<Item = String>, min_df: usize) -> Self {
        let mut id_to_token = vec![PAD_TOKEN.to_owned(), UNK_TOKEN.to_owned()];
        id_to_token.extend(tokens);
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .skip(2)
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self {
            token_to_id,
            id_to_token,
            unk_id: 1,
            pad_id: 0,
            min_df,
        }
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn unk_id(&self) -> u32 {
        self.unk_id
    }

    pub fn pad_id(&self) -> u32 {
        self.pad_id
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }

    /// Id of `token`, or `unk_id` when it was not retained.
    pub fn id(&self, token: &str) -> u32 {
        self.token_to_id.get(token).copied().unwrap_or(self.unk_id)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_to_id.contains_key(token)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    pub fn is_special(&self, id: u32) -> bool {
        id == self.pad_id || id == self.unk_id
    }

    /// Retained (non-special) tokens in id order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.id_to_token.iter().skip(2).map(String::as_str)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = VocabularyFile {
            tokens: self.id_to_token.clone(),
            min_df: self.min_df,
            unk_id: self.unk_id,
            pad_id: self.pad_id,
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: VocabularyFile = serde_json::from_str(s)?;
        let n = file.tokens.len();
        if n < 2 || file.pad_id as usize >= n || file.unk_id as usize >= n || file.pad_id == file.unk_id {
            return Err(Error::config("vocabulary file has invalid special ids"));
        }
        let mut token_to_id = HashMap::with_capacity(n);
        for (i, t) in file.tokens.iter().enumerate() {
            let id = i as u32;
            if id == file.pad_id || id == file.unk_id {
                continue;
            }
            if token_to_id.insert(t.clone(), id).is_some() {
                return Err(Error::config(format!("duplicate vocabulary token `{t}`")));
            }
        }
        Ok(Self {
            token_to_id,
            id_to_token: file.tokens,
            unk_id: file.unk_id,
            pad_id: file.pad_id,
            min_df: file.min_df,
        })
    }

    /// SHA-256 of the canonical JSON form; checkpoints record it.
    pub fn content_hash(&self) -> String {
        sha256_hex(self.to_json().expect("vocabulary serializes").as_bytes())
    }
}

/// Standalone form of [`Vocabulary::build`].
pub fn build_vocabulary<D, S>(docs: impl IntoIterator<Item = D>, min_df: usize) -> Result<Vocabulary>
where
    D: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    Vocabulary::build(docs, min_df)
}
