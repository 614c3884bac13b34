//! Retrieval AUC by exact pair counting, ties counted one half.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::affinity::AffinityMatrix;
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How the grand mean aggregates per-query AUCs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AucMode {
    /// Mean over groups of the mean query AUC within each group.
    GroupMean,
    /// Mean over all queries.
    QueryMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucReport {
    pub mode: AucMode,
    pub grand_mean: f64,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub per_group: BTreeMap<String, f64>,
    pub per_query: BTreeMap<String, f64>,
    /// Queries with no positive or no negative candidates.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub skipped: Vec<String>,
}

fn cmp<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

/// Probability that a positive score exceeds a negative one, ties counted 1/2.
/// `None` if either side is empty.
///
/// Negatives are sorted once and each positive is located by binary search,
/// so the wins and ties are exact integer counts.
pub fn auc_from_scores<T: Scalar>(positives: &[T], negatives: &[T]) -> Option<f64> {
    if positives.is_empty() || negatives.is_empty() {
        return None;
    }
    let mut neg = negatives.to_vec();
    neg.sort_by(cmp);
    let mut wins = 0u64;
    let mut ties = 0u64;
    for p in positives {
        let below = neg.partition_point(|n| cmp(n, p) == Ordering::Less);
        let at_or_below = neg.partition_point(|n| cmp(n, p) != Ordering::Greater);
        wins += below as u64;
        ties += (at_or_below - below) as u64;
    }
    let pairs = positives.len() as f64 * negatives.len() as f64;
    Some((wins as f64 + 0.5 * ties as f64) / pairs)
}

/// AUC of ranking `positives` above `negatives` by similarity to `query`.
pub fn query_auc<T: Scalar>(affinity: &AffinityMatrix<T>, query: usize, positives: &[usize], negatives: &[usize]) -> Option<f64> {
    let row = affinity.row(query);
    let p: Vec<T> = positives.iter().map(|&i| row[i]).collect();
    let n: Vec<T> = negatives.iter().map(|&i| row[i]).collect();
    auc_from_scores(&p, &n)
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Same-group documents are positives, all other documents negatives.
/// The grand mean averages per-group means in group-name order.
pub fn group_retrieval_auc<T: Scalar>(affinity: &AffinityMatrix<T>, groups: &[String]) -> Result<AucReport> {
    let n = affinity.len();
    if groups.len() != n {
        return Err(Error::Evaluation(format!("{} group labels for {n} documents", groups.len())));
    }
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        members.entry(g).or_default().push(i);
    }
    if members.len() < 2 {
        return Err(Error::Evaluation("group AUC needs at least 2 groups".into()));
    }
    if members.values().all(|m| m.len() < 2) {
        return Err(Error::Evaluation("group AUC needs a group with at least 2 members".into()));
    }
    let mut per_query = BTreeMap::new();
    let mut per_group = BTreeMap::new();
    let mut skipped = Vec::new();
    for (g, idx) in &members {
        let negatives: Vec<usize> = (0..n).filter(|&j| groups[j] != *g).collect();
        let mut aucs = Vec::new();
        for &q in idx {
            let positives: Vec<usize> = idx.iter().copied().filter(|&j| j != q).collect();
            match query_auc(affinity, q, &positives, &negatives) {
                Some(a) => {
                    per_query.insert(affinity.doc_ids[q].clone(), a);
                    aucs.push(a);
                }
                None => skipped.push(affinity.doc_ids[q].clone()),
            }
        }
        if let Some(m) = mean(aucs) {
            per_group.insert((*g).to_owned(), m);
        }
    }
    let grand_mean = mean(per_group.values().copied()).expect("some group has two members");
    Ok(AucReport {
        mode: AucMode::GroupMean,
        grand_mean,
        per_group,
        per_query,
        skipped,
    })
}

/// Same-label documents are positives, opposite-label documents negatives.
/// Unlabeled documents take no part. The grand mean averages queries in
/// affinity order.
pub fn aspect_auc<T: Scalar>(affinity: &AffinityMatrix<T>, labels: &[Option<Label>]) -> Result<AucReport> {
    let n = affinity.len();
    if labels.len() != n {
        return Err(Error::Evaluation(format!("{} labels for {n} documents", labels.len())));
    }
    let pos: Vec<usize> = (0..n).filter(|&i| labels[i] == Some(Label::Pos)).collect();
    let neg: Vec<usize> = (0..n).filter(|&i| labels[i] == Some(Label::Neg)).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Evaluation("aspect AUC needs both positive and negative documents".into()));
    }
    let mut per_query = BTreeMap::new();
    let mut ordered = Vec::new();
    let mut skipped = Vec::new();
    for q in 0..n {
        let Some(label) = labels[q] else { continue };
        let (same, other) = match label {
            Label::Pos => (&pos, &neg),
            Label::Neg => (&neg, &pos),
        };
        let positives: Vec<usize> = same.iter().copied().filter(|&j| j != q).collect();
        match query_auc(affinity, q, &positives, other) {
            Some(a) => {
                per_query.insert(affinity.doc_ids[q].clone(), a);
                ordered.push(a);
            }
            None => skipped.push(affinity.doc_ids[q].clone()),
        }
    }
    let grand_mean = mean(ordered).ok_or_else(|| Error::Evaluation("no query has a same-label partner".into()))?;
    Ok(AucReport {
        mode: AucMode::QueryMean,
        grand_mean,
        per_group: BTreeMap::new(),
        per_query,
        skipped,
    })
}
