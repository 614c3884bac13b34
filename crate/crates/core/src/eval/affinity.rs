use serde::Serialize;

use crate::encoder::cosine_similarity;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pairwise cosine similarities of one aspect's embeddings.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct AffinityMatrix<T> {
    pub doc_ids: Vec<String>,
    sims: Vec<T>,
}

impl<T: Scalar> AffinityMatrix<T> {
    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.sims[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        let n = self.len();
        &self.sims[i * n..(i + 1) * n]
    }

    pub fn index_of(&self, doc_id: &str) -> Option<usize> {
        self.doc_ids.iter().position(|d| d == doc_id)
    }
}

/// Cosine affinity over `(doc_id, embedding)` pairs, computed once per unordered pair.
pub fn pairwise_affinity<T: Scalar, S: AsRef<str>, V: AsRef<[T]>>(embeddings: &[(S, V)]) -> Result<AffinityMatrix<T>> {
    let n = embeddings.len();
    if n < 2 {
        return Err(Error::Evaluation(format!("affinity needs at least 2 documents, got {n}")));
    }
    let dim = embeddings[0].1.as_ref().len();
    if embeddings.iter().any(|(_, v)| v.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch("embeddings differ in length".into()));
    }
    let mut sims = vec![T::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let c = cosine_similarity(embeddings[i].1.as_ref(), embeddings[j].1.as_ref());
            sims[i * n + j] = c;
            sims[j * n + i] = c;
        }
    }
    Ok(AffinityMatrix {
        doc_ids: embeddings.iter().map(|(d, _)| d.as_ref().to_owned()).collect(),
        sims,
    })
}
