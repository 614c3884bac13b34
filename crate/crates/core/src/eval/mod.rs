//! Retrieval evaluation of aspect embeddings.

mod affinity;
mod auc;
mod cross;
mod records;
mod top_words;

pub use affinity::{pairwise_affinity, AffinityMatrix};
pub use auc::{aspect_auc, auc_from_scores, group_retrieval_auc, query_auc, AucMode, AucReport};
pub use cross::{cross_auc_matrix, decorrelated_cross_auc, CrossAucMatrix, DecorrelatedCrossAuc};
pub use records::{embed_documents, parse_embeddings_jsonl, EmbeddingRecord, EmbeddingTable};
pub use top_words::{rank_word_gates, top_activated_words, WordActivation, DEFAULT_MIN_OCCURRENCE};
