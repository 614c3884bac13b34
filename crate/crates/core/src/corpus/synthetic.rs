//! Controlled multi-aspect corpora with independent binary labels per aspect.

use std::collections::HashMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};

/// Signal vocabulary for one aspect: documents labeled positive draw from
/// `pos_pool`, negative ones from `neg_pool`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticAspect {
    pub name: String,
    pub pos_pool: Vec<String>,
    pub neg_pool: Vec<String>,
    /// Signal words inserted per document for this aspect.
    pub signal_count: usize,
}

impl SyntheticAspect {
    pub fn signal_words(&self) -> impl Iterator<Item = &String> {
        self.pos_pool.iter().chain(&self.neg_pool)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_docs: usize,
    pub aspects: Vec<SyntheticAspect>,
    /// Shared words carrying no label information.
    pub filler_pool: Vec<String>,
    /// Inclusive range of filler words per document.
    pub filler_min: usize,
    pub filler_max: usize,
    pub seed: u64,
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Deterministic pronounceable three-syllable word; distinct indices give distinct words.
pub fn pseudo_word(index: usize) -> String {
    let n_syl = CONSONANTS.len() * VOWELS.len();
    let mut rest = index;
    let mut word = String::with_capacity(6);
    for _ in 0..3 {
        let syl = rest % n_syl;
        rest /= n_syl;
        word.push(CONSONANTS[syl / VOWELS.len()] as char);
        word.push(VOWELS[syl % VOWELS.len()] as char);
    }
    assert_eq!(rest, 0, "pseudo_word index out of range");
    word
}

impl SyntheticSpec {
    /// Spec with generated pools: `pool_size` words per aspect side and `filler_size` filler words.
    pub fn with_generated_pools(
        n_docs: usize,
        n_aspects: usize,
        pool_size: usize,
        filler_size: usize,
        signal_count: usize,
        seed: u64,
    ) -> Self {
        let mut next = 0usize;
        let mut take = |n: usize| -> Vec<String> {
            let words = (next..next + n).map(pseudo_word).collect();
            next += n;
            words
        };
        let aspects = (0..n_aspects)
            .map(|a| SyntheticAspect {
                name: format!("aspect{a}"),
                pos_pool: take(pool_size),
                neg_pool: take(pool_size),
                signal_count,
            })
            .collect();
        Self {
            n_docs,
            aspects,
            filler_pool: take(filler_size),
            filler_min: 8,
            filler_max: 16,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.aspects.is_empty() {
            return Err(Error::config("synthetic corpus needs at least one aspect"));
        }
        if self.filler_min > self.filler_max || (self.filler_max > 0 && self.filler_pool.is_empty()) {
            return Err(Error::config("invalid filler configuration"));
        }
        let mut owner: HashMap<&str, usize> = HashMap::new();
        let pools = self
            .aspects
            .iter()
            .flat_map(|a| [&a.pos_pool, &a.neg_pool])
            .chain(std::iter::once(&self.filler_pool));
        for (pool_idx, pool) in pools.enumerate() {
            for w in pool {
                if let Some(&prev) = owner.get(w.as_str()) {
                    if prev != pool_idx {
                        return Err(Error::OverlappingPools(w.clone()));
                    }
                }
                owner.insert(w, pool_idx);
            }
        }
        for a in &self.aspects {
            if a.signal_count > 0 && (a.pos_pool.is_empty() || a.neg_pool.is_empty()) {
                return Err(Error::config(format!("aspect `{}` has an empty signal pool", a.name)));
            }
        }
        Ok(())
    }
}

/// Renders the corpus as rated-mode JSONL text (header line first).
///
/// Positive labels get rating 4 or 5, negative labels 1 or 2, so the default
/// threshold of 3 recovers the generating labels.
pub fn generate_synthetic_corpus(spec: &SyntheticSpec) -> Result<String> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let names: Vec<&str> = spec.aspects.iter().map(|a| a.name.as_str()).collect();
    let mut out = serde_json::to_string(&json!({"aspects": names, "mode": "dichotomized_ratings"}))?;
    out.push('\n');
    let width = spec.n_docs.max(1).to_string().len().max(5);
    for i in 0..spec.n_docs {
        let mut tokens: Vec<&str> = Vec::new();
        let mut ratings = serde_json::Map::new();
        for a in &spec.aspects {
            let positive = rng.gen_bool(0.5);
            let pool = if positive { &a.pos_pool } else { &a.neg_pool };
            for _ in 0..a.signal_count {
                tokens.push(pool.choose(&mut rng).expect("validated non-empty"));
            }
            let rating = if positive { rng.gen_range(4..=5) } else { rng.gen_range(1..=2) };
            ratings.insert(a.name.clone(), json!(rating));
        }
        let n_filler = rng.gen_range(spec.filler_min..=spec.filler_max);
        for _ in 0..n_filler {
            tokens.push(spec.filler_pool.choose(&mut rng).expect("validated non-empty"));
        }
        tokens.shuffle(&mut rng);
        let record = json!({
            "id": format!("syn{i:0width$}"),
            "text": tokens.join(" "),
            "ratings": ratings,
        });
        out.push_str(&serde_json::to_string(&record)?);
        out.push('\n');
    }
    Ok(out)
}
