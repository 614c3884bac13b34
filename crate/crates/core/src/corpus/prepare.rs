use super::jsonl::{Corpus, Split};
use super::text::{truncation_length, EncodedDocument};
use super::vocab::Vocabulary;
use crate::error::Result;

/// Vocabulary over the training split. A document's text and its aspect
/// summaries count as one document for frequency purposes.
pub fn training_vocabulary(corpus: &Corpus, min_df: usize) -> Result<Vocabulary> {
    Vocabulary::build(corpus.docs_in(Split::Train).map(|d| d.all_tokens()), min_df)
}

/// Truncation length from the training split, counting every text and summary
/// as a separate sequence.
pub fn training_sequence_length(corpus: &Corpus, percentile: f64) -> Result<usize> {
    let lengths = corpus.docs_in(Split::Train).flat_map(|d| {
        std::iter::once(d.tokens.len()).chain(d.summaries.iter().flatten().map(Vec::len))
    });
    Ok(truncation_length(lengths, percentile)?.max(1))
}

pub fn encode_split(corpus: &Corpus, split: Split, vocab: &Vocabulary, seq_len: usize) -> Vec<EncodedDocument> {
    corpus.docs_in(split).map(|d| d.encode(vocab, seq_len)).collect()
}
