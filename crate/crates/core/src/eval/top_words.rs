use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{EncodedDocument, Vocabulary};
use crate::encoder::AspectModel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_MIN_OCCURRENCE: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordActivation {
    pub word: String,
    pub mean_gate: f64,
    pub occurrences: usize,
}

/// Rank words by mean gate over their (document, position) occurrences.
pub fn rank_word_gates<'a>(
    occurrences: impl IntoIterator<Item = (&'a str, f64)>,
    top_n: usize,
    min_occurrence: usize,
) -> Vec<WordActivation> {
    let mut acc: HashMap<&str, (f64, usize)> = HashMap::new();
    for (w, g) in occurrences {
        let e = acc.entry(w).or_default();
        e.0 += g;
        e.1 += 1;
    }
    let mut words: Vec<WordActivation> = acc
        .into_iter()
        .filter(|(_, (_, n))| *n >= min_occurrence)
        .map(|(w, (s, n))| WordActivation {
            word: w.to_owned(),
            mean_gate: s / n as f64,
            occurrences: n,
        })
        .collect();
    words.sort_by(|a, b| b.mean_gate.total_cmp(&a.mean_gate).then_with(|| a.word.cmp(&b.word)));
    words.truncate(top_n);
    words
}

pub fn top_activated_words<T: Scalar>(
    model: &AspectModel<T>,
    docs: &[EncodedDocument],
    vocab: &Vocabulary,
    aspect: usize,
    top_n: usize,
    min_occurrence: usize,
) -> Result<Vec<WordActivation>> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus("top-word extraction needs documents"));
    }
    let mut occ: Vec<(&str, f64)> = Vec::new();
    for doc in docs {
        let fwd = model.forward_aspect(doc, aspect)?;
        for (t, &id) in doc.ids.iter().enumerate().take(doc.true_len) {
            if vocab.is_special(id) {
                continue;
            }
            if let Some(w) = vocab.token(id) {
                occ.push((w, fwd.gates[t].as_f64()));
            }
        }
    }
    Ok(rank_word_gates(occ, top_n, min_occurrence))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_gates_fall_back_to_lexicographic_order() {
        let occ = ["pear", "apple", "fig", "apple"].map(|w| (w, 0.5));
        let r = rank_word_gates(occ, 10, 1);
        let words: Vec<&str> = r.iter().map(|w| w.word.as_str()).collect();
        assert_eq!(words, ["apple", "fig", "pear"]);
        assert!(r.iter().all(|w| w.mean_gate == 0.5));
    }

    #[test]
    fn mean_and_threshold() {
        let occ = [("a", 0.2), ("a", 0.8), ("b", 0.9)];
        let r = rank_word_gates(occ, 10, 2);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].mean_gate, 0.5);
        assert_eq!(r[0].occurrences, 2);
        assert_eq!(rank_word_gates(occ, 1, 1)[0].word, "b");
    }
}
