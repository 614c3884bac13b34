//! Corpus ingestion, vocabularies, document encoding and synthetic corpora.

mod jsonl;
mod prepare;
mod synthetic;
mod text;
mod vocab;

pub use jsonl::{
    assign_splits, load_corpus, parse_corpus, Corpus, CorpusDocument, CorpusManifest, LoadOptions, Split,
    SplitRatios, SupervisionMode,
};
pub use prepare::{encode_split, training_sequence_length, training_vocabulary};
pub use synthetic::{generate_synthetic_corpus, pseudo_word, SyntheticAspect, SyntheticSpec};
pub use text::{encode_document, encode_ids, truncation_length, EncodedDocument, Label, Tokenizer};
pub use vocab::{build_vocabulary, Vocabulary, PAD_TOKEN, UNK_TOKEN};
