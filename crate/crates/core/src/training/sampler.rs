//! Triplet construction from review groups (aspect summaries) and from
//! dichotomized aspect ratings.

use std::collections::BTreeMap;

use rand::Rng;

use super::loss::Triplet;
use crate::corpus::{encode_ids, CorpusDocument, EncodedDocument, Label, Vocabulary};
use crate::error::{Error, Result};

/// Attempts at finding a first review with at least two studies.
pub const MAX_GROUP_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ReviewStudy {
    pub id: String,
    pub abstract_ids: Vec<u32>,
    /// One summary per aspect, already mapped to ids (unpadded).
    pub summary_ids: Vec<Vec<u32>>,
}

/// Which studies a review-scheme draw selected, by position in the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReviewDraw {
    pub first_group: usize,
    pub second_group: usize,
    /// Study whose abstract becomes `d`.
    pub anchor: usize,
    /// Second study from the first group; supplies `s` and the other-aspect parts of `o`.
    pub sibling: usize,
    /// Study from the second group; supplies the target-aspect part of `o`.
    pub outsider: usize,
}

/// Studies grouped by review, ready for the summary-based triplet scheme.
#[derive(Debug, Clone)]
pub struct ReviewPool {
    pub groups: Vec<(String, Vec<ReviewStudy>)>,
    pub n_aspects: usize,
    pub seq_len: usize,
    pub pad_id: u32,
    /// Studies dropped because at least one aspect summary was missing.
    pub skipped_studies: usize,
}

fn ids(tokens: &[String], vocab: &Vocabulary) -> Vec<u32> {
    tokens.iter().map(|t| vocab.id(t)).collect()
}

impl ReviewPool {
    pub fn new<'a>(
        docs: impl IntoIterator<Item = &'a CorpusDocument>,
        n_aspects: usize,
        vocab: &Vocabulary,
        seq_len: usize,
    ) -> Result<Self> {
        let mut groups: BTreeMap<String, Vec<ReviewStudy>> = BTreeMap::new();
        let mut skipped = 0;
        for d in docs {
            let group = d
                .group_id
                .clone()
                .ok_or_else(|| Error::config(format!("document `{}` has no review group", d.id)))?;
            let complete = d.summaries.len() == n_aspects && d.summaries.iter().all(Option::is_some);
            if !complete {
                skipped += 1;
                continue;
            }
            groups.entry(group).or_default().push(ReviewStudy {
                id: d.id.clone(),
                abstract_ids: ids(&d.tokens, vocab),
                summary_ids: d.summaries.iter().map(|s| ids(s.as_ref().expect("checked"), vocab)).collect(),
            });
        }
        Ok(Self {
            groups: groups.into_iter().collect(),
            n_aspects,
            seq_len,
            pad_id: vocab.pad_id(),
            skipped_studies: skipped,
        })
    }

    /// Draws two distinct reviews uniformly, two distinct studies from the
    /// first (retrying when it has fewer than two) and one from the second.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ReviewDraw> {
        let n = self.groups.len();
        if n < 2 {
            return Err(Error::Sampling {
                aspect: "*".into(),
                message: format!("review scheme needs at least 2 review groups, found {n}"),
            });
        }
        for _ in 0..MAX_GROUP_RETRIES {
            let first = rng.gen_range(0..n);
            let size = self.groups[first].1.len();
            if size < 2 {
                continue;
            }
            let mut second = rng.gen_range(0..n - 1);
            if second >= first {
                second += 1;
            }
            let anchor = rng.gen_range(0..size);
            let mut sibling = rng.gen_range(0..size - 1);
            if sibling >= anchor {
                sibling += 1;
            }
            let outsider = rng.gen_range(0..self.groups[second].1.len());
            return Ok(ReviewDraw {
                first_group: first,
                second_group: second,
                anchor,
                sibling,
                outsider,
            });
        }
        Err(Error::Sampling {
            aspect: "*".into(),
            message: format!("no review with two complete studies found after {MAX_GROUP_RETRIES} draws"),
        })
    }

    /// Token ids of `o` for `aspect`: the aspect slot holds the outsider's
    /// summary, every other slot the sibling's, concatenated in aspect order.
    pub fn contrast_ids(&self, draw: &ReviewDraw, aspect: usize) -> Vec<u32> {
        let sibling = &self.groups[draw.first_group].1[draw.sibling];
        let outsider = &self.groups[draw.second_group].1[draw.outsider];
        (0..self.n_aspects)
            .flat_map(|a| {
                if a == aspect {
                    outsider.summary_ids[a].iter()
                } else {
                    sibling.summary_ids[a].iter()
                }
            })
            .copied()
            .collect()
    }

    pub fn triplet_from_draw(&self, draw: &ReviewDraw, aspect: usize) -> Triplet {
        let group = &self.groups[draw.first_group];
        let anchor = &group.1[draw.anchor];
        let sibling = &group.1[draw.sibling];
        let outsider = &self.groups[draw.second_group].1[draw.outsider];
        let mut d = encode_ids(anchor.id.clone(), &anchor.abstract_ids, self.pad_id, self.seq_len);
        d.group_id = Some(group.0.clone());
        let s = encode_ids(format!("{}#summary{aspect}", sibling.id), &sibling.summary_ids[aspect], self.pad_id, self.seq_len);
        let o = encode_ids(
            format!("{}#contrast{aspect}:{}", sibling.id, outsider.id),
            &self.contrast_ids(draw, aspect),
            self.pad_id,
            self.seq_len,
        );
        Triplet { s, d, o, aspect }
    }

    /// Fresh draw for every call, including calls for different aspects.
    pub fn sample<R: Rng + ?Sized>(&self, aspect: usize, rng: &mut R) -> Result<Triplet> {
        if aspect >= self.n_aspects {
            return Err(Error::config(format!("aspect index {aspect} out of range")));
        }
        let draw = self.draw(rng)?;
        Ok(self.triplet_from_draw(&draw, aspect))
    }
}

/// Encoded documents with per-aspect positive and negative pools.
#[derive(Debug, Clone)]
pub struct RatingPool {
    pub docs: Vec<EncodedDocument>,
    pub aspect_names: Vec<String>,
    pos: Vec<Vec<usize>>,
    neg: Vec<Vec<usize>>,
}

impl RatingPool {
    pub fn new(docs: Vec<EncodedDocument>, aspect_names: Vec<String>) -> Self {
        let n = aspect_names.len();
        let mut pos = vec![Vec::new(); n];
        let mut neg = vec![Vec::new(); n];
        for (i, d) in docs.iter().enumerate() {
            for a in 0..n {
                match d.labels.get(a).copied().flatten() {
                    Some(Label::Pos) => pos[a].push(i),
                    Some(Label::Neg) => neg[a].push(i),
                    None => {}
                }
            }
        }
        Self {
            docs,
            aspect_names,
            pos,
            neg,
        }
    }

    pub fn pool(&self, aspect: usize, label: Label) -> &[usize] {
        match label {
            Label::Pos => &self.pos[aspect],
            Label::Neg => &self.neg[aspect],
        }
    }

    fn err(&self, aspect: usize, message: impl Into<String>) -> Error {
        Error::Sampling {
            aspect: self.aspect_names[aspect].clone(),
            message: message.into(),
        }
    }

    /// Indices `(s, d, o)`: `d` uniform over labeled documents whose label pool
    /// has another member, `s` uniform over that pool minus `d`, `o` uniform
    /// over the opposite pool.
    pub fn sample_indices<R: Rng + ?Sized>(&self, aspect: usize, rng: &mut R) -> Result<(usize, usize, usize)> {
        if aspect >= self.aspect_names.len() {
            return Err(Error::config(format!("aspect index {aspect} out of range")));
        }
        let (pos, neg) = (&self.pos[aspect], &self.neg[aspect]);
        if pos.is_empty() || neg.is_empty() {
            return Err(self.err(aspect, "needs at least one positive and one negative document"));
        }
        let pos_ok = if pos.len() >= 2 { pos.len() } else { 0 };
        let neg_ok = if neg.len() >= 2 { neg.len() } else { 0 };
        if pos_ok + neg_ok == 0 {
            return Err(self.err(aspect, "no label pool has two documents to pair"));
        }
        let r = rng.gen_range(0..pos_ok + neg_ok);
        let (same, other, d_pos) = if r < pos_ok { (pos, neg, r) } else { (neg, pos, r - pos_ok) };
        let mut s_pos = rng.gen_range(0..same.len() - 1);
        if s_pos >= d_pos {
            s_pos += 1;
        }
        let o = other[rng.gen_range(0..other.len())];
        Ok((same[s_pos], same[d_pos], o))
    }

    pub fn sample<R: Rng + ?Sized>(&self, aspect: usize, rng: &mut R) -> Result<Triplet> {
        let (s, d, o) = self.sample_indices(aspect, rng)?;
        Ok(Triplet {
            s: self.docs[s].clone(),
            d: self.docs[d].clone(),
            o: self.docs[o].clone(),
            aspect,
        })
    }
}

/// Either triplet scheme behind one interface.
#[derive(Debug, Clone)]
pub enum TripletSource {
    Reviews(ReviewPool),
    Ratings(RatingPool),
}

impl TripletSource {
    pub fn sample<R: Rng + ?Sized>(&self, aspect: usize, rng: &mut R) -> Result<Triplet> {
        match self {
            TripletSource::Reviews(p) => p.sample(aspect, rng),
            TripletSource::Ratings(p) => p.sample(aspect, rng),
        }
    }

    pub fn n_aspects(&self) -> usize {
        match self {
            TripletSource::Reviews(p) => p.n_aspects,
            TripletSource::Ratings(p) => p.aspect_names.len(),
        }
    }

    /// Documents available as triplet anchors.
    pub fn n_documents(&self) -> usize {
        match self {
            TripletSource::Reviews(p) => p.groups.iter().map(|g| g.1.len()).sum(),
            TripletSource::Ratings(p) => p.docs.len(),
        }
    }
}
