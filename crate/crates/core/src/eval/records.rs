use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::affinity::{pairwise_affinity, AffinityMatrix};
use crate::corpus::{EncodedDocument, Label};
use crate::encoder::AspectModel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One line of an embeddings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub aspect: String,
    pub vector: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

/// Records ordered by document, then aspect.
pub fn embed_documents<T: Scalar>(
    model: &AspectModel<T>,
    docs: &[EncodedDocument],
    aspect_names: &[String],
) -> Result<Vec<EmbeddingRecord>> {
    if aspect_names.len() != model.n_aspects() {
        return Err(Error::config(format!(
            "{} aspect names for a model with {} aspects",
            aspect_names.len(),
            model.n_aspects()
        )));
    }
    let mut out = Vec::with_capacity(docs.len() * aspect_names.len());
    for doc in docs {
        for (a, name) in aspect_names.iter().enumerate() {
            out.push(EmbeddingRecord {
                id: doc.doc_id.clone(),
                aspect: name.clone(),
                vector: model.embed(doc, a)?.into_iter().map(Scalar::as_f64).collect(),
                group: doc.group_id.clone(),
                label: doc.labels.get(a).copied().flatten(),
            });
        }
    }
    Ok(out)
}

pub fn parse_embeddings_jsonl(text: &str) -> Result<Vec<EmbeddingRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

/// Embedding records arranged per aspect over one shared document order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub aspects: Vec<String>,
    pub doc_ids: Vec<String>,
    /// `[aspect][document]`.
    pub vectors: Vec<Vec<Vec<f64>>>,
    pub groups: Vec<Option<String>>,
    /// `[aspect][document]`.
    pub labels: Vec<Vec<Option<Label>>>,
}

impl EmbeddingTable {
    /// Aspects and documents keep their order of first appearance. Every
    /// document must carry every aspect exactly once.
    pub fn from_records(records: &[EmbeddingRecord]) -> Result<Self> {
        let mut aspects: Vec<String> = Vec::new();
        let mut doc_ids: Vec<String> = Vec::new();
        let mut doc_index: HashMap<&str, usize> = HashMap::new();
        for r in records {
            if !aspects.contains(&r.aspect) {
                aspects.push(r.aspect.clone());
            }
            if !doc_index.contains_key(r.id.as_str()) {
                doc_index.insert(&r.id, doc_ids.len());
                doc_ids.push(r.id.clone());
            }
        }
        let (k, n) = (aspects.len(), doc_ids.len());
        if n == 0 {
            return Err(Error::Evaluation("no embedding records".into()));
        }
        let mut vectors: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; n]; k];
        let mut labels = vec![vec![None; n]; k];
        let mut groups = vec![None; n];
        for r in records {
            let a = aspects.iter().position(|x| *x == r.aspect).expect("collected");
            let d = doc_index[r.id.as_str()];
            if vectors[a][d].replace(r.vector.clone()).is_some() {
                return Err(Error::Evaluation(format!("duplicate embedding for `{}` under aspect `{}`", r.id, r.aspect)));
            }
            labels[a][d] = r.label;
            if r.group.is_some() {
                groups[d] = r.group.clone();
            }
        }
        let vectors = vectors
            .into_iter()
            .zip(&aspects)
            .map(|(col, name)| {
                col.into_iter()
                    .zip(&doc_ids)
                    .map(|(v, id)| {
                        v.ok_or_else(|| {
                            Error::Evaluation(format!("aspect `{name}` covers a different document set: `{id}` is missing"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            aspects,
            doc_ids,
            vectors,
            groups,
            labels,
        })
    }

    pub fn aspect_index(&self, name: &str) -> Result<usize> {
        self.aspects
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::Evaluation(format!("no embeddings for aspect `{name}`")))
    }

    pub fn affinity(&self, aspect: usize) -> Result<AffinityMatrix<f64>> {
        let pairs: Vec<(&str, &[f64])> = self
            .doc_ids
            .iter()
            .zip(&self.vectors[aspect])
            .map(|(d, v)| (d.as_str(), v.as_slice()))
            .collect();
        pairwise_affinity(&pairs)
    }

    pub fn affinities(&self) -> Result<Vec<AffinityMatrix<f64>>> {
        (0..self.aspects.len()).map(|a| self.affinity(a)).collect()
    }

    /// Group per document, if every document has one.
    pub fn complete_groups(&self) -> Option<Vec<String>> {
        self.groups.iter().cloned().collect()
    }
}
