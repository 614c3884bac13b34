use serde::{Deserialize, Serialize};

use super::affinity::AffinityMatrix;
use super::auc::aspect_auc;
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row = embedding used, column = aspect whose labels are evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossAucMatrix {
    pub mode: String,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub matrix: Vec<Vec<Option<f64>>>,
    pub unavailable: Vec<[usize; 2]>,
}

/// Each available cell holds the AUC using the row aspect's embeddings and
/// the AUC using the column aspect's embeddings, both against column labels,
/// over documents whose row and column labels disagree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecorrelatedCrossAuc {
    pub mode: String,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub matrix: Vec<Vec<Option<[f64; 2]>>>,
    pub subset_sizes: Vec<Vec<usize>>,
    pub unavailable: Vec<[usize; 2]>,
}

fn check_inputs<T: Scalar>(affinities: &[AffinityMatrix<T>], labels: &[Vec<Option<Label>>], aspects: &[String]) -> Result<()> {
    let k = affinities.len();
    if k == 0 || labels.len() != k || aspects.len() != k {
        return Err(Error::Evaluation(format!(
            "{k} affinity matrices, {} label sets and {} aspect names",
            labels.len(),
            aspects.len()
        )));
    }
    let ids = &affinities[0].doc_ids;
    for (a, aff) in affinities.iter().enumerate() {
        if aff.doc_ids != *ids {
            return Err(Error::Evaluation(format!("aspect {} covers a different document set", aspects[a])));
        }
        if labels[a].len() != ids.len() {
            return Err(Error::Evaluation(format!("aspect {} has {} labels for {} documents", aspects[a], labels[a].len(), ids.len())));
        }
    }
    Ok(())
}

pub fn cross_auc_matrix<T: Scalar>(affinities: &[AffinityMatrix<T>], labels: &[Vec<Option<Label>>], aspects: &[String]) -> Result<CrossAucMatrix> {
    check_inputs(affinities, labels, aspects)?;
    let k = affinities.len();
    let mut matrix = vec![vec![None; k]; k];
    let mut unavailable = Vec::new();
    for (r, aff) in affinities.iter().enumerate() {
        for (c, lab) in labels.iter().enumerate() {
            match aspect_auc(aff, lab) {
                Ok(rep) => matrix[r][c] = Some(rep.grand_mean),
                Err(_) => unavailable.push([r, c]),
            }
        }
    }
    Ok(CrossAucMatrix {
        mode: "cross_auc".into(),
        rows: aspects.to_vec(),
        cols: aspects.to_vec(),
        matrix,
        unavailable,
    })
}

pub fn decorrelated_cross_auc<T: Scalar>(
    affinities: &[AffinityMatrix<T>],
    labels: &[Vec<Option<Label>>],
    aspects: &[String],
) -> Result<DecorrelatedCrossAuc> {
    check_inputs(affinities, labels, aspects)?;
    let k = affinities.len();
    let n = affinities[0].len();
    let mut matrix = vec![vec![None; k]; k];
    let mut subset_sizes = vec![vec![0; k]; k];
    let mut unavailable = Vec::new();
    for r in 0..k {
        for c in 0..k {
            if r == c {
                unavailable.push([r, c]);
                continue;
            }
            let masked: Vec<Option<Label>> = (0..n)
                .map(|i| match (labels[r][i], labels[c][i]) {
                    (Some(a), Some(b)) if a != b => Some(b),
                    _ => None,
                })
                .collect();
            subset_sizes[r][c] = masked.iter().flatten().count();
            match (aspect_auc(&affinities[r], &masked), aspect_auc(&affinities[c], &masked)) {
                (Ok(row), Ok(col)) => matrix[r][c] = Some([row.grand_mean, col.grand_mean]),
                _ => unavailable.push([r, c]),
            }
        }
    }
    Ok(DecorrelatedCrossAuc {
        mode: "decorrelated_cross_auc".into(),
        rows: aspects.to_vec(),
        cols: aspects.to_vec(),
        matrix,
        subset_sizes,
        unavailable,
    })
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

impl CrossAucMatrix {
    /// Table layout with a header row of column aspects; unavailable cells are `-`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("embedding");
        for c in &self.cols {
            out.push(',');
            out.push_str(&csv_cell(c));
        }
        out.push('\n');
        for (name, row) in self.rows.iter().zip(&self.matrix) {
            out.push_str(&csv_cell(name));
            for cell in row {
                out.push(',');
                match cell {
                    Some(v) => out.push_str(&format!("{v:.4}")),
                    None => out.push('-'),
                }
            }
            out.push('\n');
        }
        out
    }
}

impl DecorrelatedCrossAuc {
    /// Cells rendered as `row_embed/col_embed`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("embedding");
        for c in &self.cols {
            out.push(',');
            out.push_str(&csv_cell(c));
        }
        out.push('\n');
        for (name, row) in self.rows.iter().zip(&self.matrix) {
            out.push_str(&csv_cell(name));
            for cell in row {
                out.push(',');
                match cell {
                    Some([a, b]) => out.push_str(&format!("{a:.4}/{b:.4}")),
                    None => out.push('-'),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::pairwise_affinity;
    use Label::{Neg, Pos};

    fn names() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    fn aff(points: &[[f64; 2]]) -> AffinityMatrix<f64> {
        let e: Vec<(String, Vec<f64>)> = points.iter().enumerate().map(|(i, p)| (format!("d{i}"), p.to_vec())).collect();
        pairwise_affinity(&e).unwrap()
    }

    #[test]
    fn diagonal_equals_aspect_auc_and_duplicate_rows_agree() {
        let pts = [[1.0, 0.2], [0.9, -0.1], [-1.0, 0.3], [-0.2, 1.0], [0.5, 0.5], [0.1, -0.9]];
        let a = aff(&pts);
        let la = vec![Some(Pos), Some(Pos), Some(Neg), Some(Neg), None, Some(Pos)];
        let lb = vec![Some(Neg), Some(Pos), Some(Pos), Some(Neg), Some(Neg), Some(Pos)];
        let m = cross_auc_matrix(&[a.clone(), a.clone()], &[la.clone(), lb.clone()], &names()).unwrap();
        assert_eq!(m.matrix[0][0], Some(aspect_auc(&a, &la).unwrap().grand_mean));
        assert_eq!(m.matrix[1][1], Some(aspect_auc(&a, &lb).unwrap().grand_mean));
        assert_eq!(m.matrix[0], m.matrix[1]);
        assert!(m.unavailable.is_empty());
        assert!(m.to_csv().starts_with("embedding,a,b\na,"));
    }

    #[test]
    fn document_set_mismatch_is_an_error() {
        let a = aff(&[[1.0, 0.0], [0.0, 1.0]]);
        let b = pairwise_affinity(&[("x", vec![1.0f64]), ("y", vec![2.0])]).unwrap();
        let l = vec![Some(Pos), Some(Neg)];
        assert!(cross_auc_matrix(&[a, b], &[l.clone(), l], &names()).is_err());
    }

    #[test]
    fn correlated_labels_leave_every_cell_unavailable() {
        let a = aff(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 0.5]]);
        let l = vec![Some(Pos), Some(Neg), Some(Pos), Some(Neg)];
        let d = decorrelated_cross_auc(&[a.clone(), a], &[l.clone(), l], &names()).unwrap();
        assert!(d.matrix.iter().flatten().all(Option::is_none));
        assert_eq!(d.unavailable.len(), 4);
        assert_eq!(d.subset_sizes[0][1], 0);
    }

    #[test]
    fn disagreement_subset_uses_column_labels() {
        let pts_a = [[1.0, 0.0], [0.9, 0.2], [-1.0, 0.1], [-0.8, -0.3], [0.2, 1.0], [0.3, -1.0], [0.0, 0.7], [0.6, 0.6]];
        let pts_b = [[0.1, 1.0], [-0.2, -1.0], [0.3, 0.9], [0.0, -1.0], [1.0, 0.0], [-1.0, 0.2], [0.7, 0.7], [-0.6, 0.1]];
        let (aa, ab) = (aff(&pts_a), aff(&pts_b));
        let la = vec![Some(Pos), Some(Pos), Some(Neg), Some(Neg), Some(Pos), Some(Neg), Some(Pos), Some(Neg)];
        let lb = vec![Some(Neg), Some(Neg), Some(Pos), Some(Pos), Some(Pos), Some(Neg), Some(Neg), Some(Pos)];
        let d = decorrelated_cross_auc(&[aa.clone(), ab.clone()], &[la.clone(), lb.clone()], &names()).unwrap();
        // Disagreeing docs: 0,1,2,3,6,7.
        let subset = [0usize, 1, 2, 3, 6, 7];
        assert_eq!(d.subset_sizes[0][1], 6);
        let brute = |m: &AffinityMatrix<f64>, lab: &[Option<Label>]| {
            let mut total = 0.0;
            let mut count = 0;
            for &q in &subset {
                let mut s = 0.0;
                let mut pairs = 0;
                for &p in &subset {
                    if p == q || lab[p] != lab[q] {
                        continue;
                    }
                    for &n in &subset {
                        if lab[n] == lab[q] {
                            continue;
                        }
                        let (x, y) = (m.get(q, p), m.get(q, n));
                        s += if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 };
                        pairs += 1;
                    }
                }
                total += s / pairs as f64;
                count += 1;
            }
            total / count as f64
        };
        let [r, c] = d.matrix[0][1].unwrap();
        assert_eq!(r, brute(&aa, &lb));
        assert_eq!(c, brute(&ab, &lb));
        let [r, c] = d.matrix[1][0].unwrap();
        assert_eq!(r, brute(&ab, &la));
        assert_eq!(c, brute(&aa, &la));
        assert!(d.matrix[0][0].is_none());
    }
}
