//! Training objectives over score matrices.
//!
//! Self-arc cells are excluded from both losses.

use crate::decoder::ParseTree;
use crate::error::{Error, Result};
use crate::scores::{is_self_arc, ScoreMatrix};
use crate::tensor::DenseTensor;

/// What a sentence is trained towards.
#[derive(Clone, Debug, PartialEq)]
pub enum GoldTarget {
    /// A well-formed tree, trained with row-wise cross entropy.
    Tree(ParseTree),
    /// A real-valued score matrix, trained with mean squared error. Zero
    /// cells stand for "no evidence" and are ordinary targets.
    Scores(ScoreMatrix),
}

impl GoldTarget {
    pub fn len(&self) -> usize {
        match self {
            GoldTarget::Tree(t) => t.len(),
            GoldTarget::Scores(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_score_shape(scores: &DenseTensor) -> Result<usize> {
    let shape = scores.shape();
    if shape.len() != 2 || shape[1] != shape[0] + 1 {
        return Err(Error::shape(format!(
            "expected a w x (w+1) score matrix, got {shape:?}"
        )));
    }
    Ok(shape[0])
}

fn check_gold(w: usize, gold: &[usize]) -> Result<()> {
    if gold.len() != w {
        return Err(Error::shape(format!(
            "{} gold heads for a sentence of length {w}",
            gold.len()
        )));
    }
    for (row, &head) in gold.iter().enumerate() {
        if head > w {
            return Err(Error::data(
                format!("row {row}"),
                format!("gold head {head} out of range"),
            ));
        }
        if is_self_arc(row, head) {
            return Err(Error::data(
                format!("row {row}"),
                "gold head is the masked self-arc",
            ));
        }
    }
    Ok(())
}

/// Softmax of each row over its unmasked cells; masked cells are 0.
pub fn row_softmax(scores: &ScoreMatrix) -> DenseTensor {
    softmax_raw(scores.values())
}

fn softmax_raw(scores: &DenseTensor) -> DenseTensor {
    let w = scores.rows();
    let mut out = DenseTensor::zeros(scores.shape());
    for i in 0..w {
        let row = scores.row(i);
        let max = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| !is_self_arc(i, j))
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (j, &v) in row.iter().enumerate() {
            if !is_self_arc(i, j) {
                let e = (v - max).exp();
                out.set(&[i, j], e);
                total += e;
            }
        }
        for j in 0..=w {
            out.set(&[i, j], out.get(&[i, j]) / total);
        }
    }
    out
}

pub(crate) fn cross_entropy_raw(scores: &DenseTensor, gold: &[usize]) -> Result<f64> {
    let w = check_score_shape(scores)?;
    check_gold(w, gold)?;
    let mut loss = 0.0;
    for (i, &g) in gold.iter().enumerate() {
        let row = scores.row(i);
        let unmasked = || {
            row.iter()
                .enumerate()
                .filter(move |&(j, _)| !is_self_arc(i, j))
                .map(|(_, &v)| v)
        };
        let max = unmasked().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + unmasked().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - row[g];
    }
    Ok(loss)
}

pub(crate) fn cross_entropy_grad_raw(scores: &DenseTensor, gold: &[usize]) -> Result<DenseTensor> {
    let w = check_score_shape(scores)?;
    check_gold(w, gold)?;
    let mut grad = softmax_raw(scores);
    for (i, &g) in gold.iter().enumerate() {
        grad.set(&[i, g], grad.get(&[i, g]) - 1.0);
    }
    Ok(grad)
}

pub(crate) fn mse_raw(scores: &DenseTensor, target: &DenseTensor) -> Result<f64> {
    let w = check_score_shape(scores)?;
    if scores.shape() != target.shape() {
        return Err(Error::shape(format!(
            "prediction {:?} vs target {:?}",
            scores.shape(),
            target.shape()
        )));
    }
    let mut total = 0.0;
    for i in 0..w {
        for j in 0..=w {
            if !is_self_arc(i, j) {
                let d = scores.get(&[i, j]) - target.get(&[i, j]);
                total += d * d;
            }
        }
    }
    Ok(total / (w * w) as f64)
}

pub(crate) fn mse_grad_raw(scores: &DenseTensor, target: &DenseTensor) -> Result<DenseTensor> {
    let w = check_score_shape(scores)?;
    if scores.shape() != target.shape() {
        return Err(Error::shape("prediction and target shapes differ"));
    }
    let n = (w * w) as f64;
    let mut grad = DenseTensor::zeros(scores.shape());
    for i in 0..w {
        for j in 0..=w {
            if !is_self_arc(i, j) {
                let d = scores.get(&[i, j]) - target.get(&[i, j]);
                grad.set(&[i, j], 2.0 * d / n);
            }
        }
    }
    Ok(grad)
}

/// Sum over rows of the negative log-probability of the gold head.
pub fn cross_entropy_loss(pred: &ScoreMatrix, gold: &ParseTree) -> Result<f64> {
    cross_entropy_raw(pred.values(), gold.heads())
}

/// Mean of squared differences over the `w²` unmasked cells.
pub fn mse_loss(pred: &ScoreMatrix, target: &ScoreMatrix) -> Result<f64> {
    mse_raw(pred.values(), target.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tree(heads: &[usize]) -> ParseTree {
        ParseTree::new(heads.to_vec()).unwrap()
    }

    #[test]
    fn single_token_cross_entropy_is_zero() {
        let s = ScoreMatrix::from_rows(&[[3.7, -2.0]]).unwrap();
        assert_eq!(cross_entropy_loss(&s, &tree(&[0])).unwrap(), 0.0);
    }

    #[test]
    fn cross_entropy_two_unmasked_cells() {
        // Row 0 has unmasked cells (0,0)=ln 2 and (0,2)=0; row 1 is uniform.
        let ln2 = 2f64.ln();
        let s = ScoreMatrix::from_rows(&[[ln2, 99.0, 0.0], [0.0, 0.0, 99.0]]).unwrap();
        let loss = cross_entropy_loss(&s, &tree(&[0, 0])).unwrap();
        assert_abs_diff_eq!(loss, 0.405465 + ln2, epsilon = 1e-6);
        assert_abs_diff_eq!(loss - ln2, -(2.0f64 / 3.0).ln(), epsilon = 1e-12);
    }

    #[test]
    fn uniform_rows_give_ln_k() {
        let s = ScoreMatrix::zeros(4);
        let loss = cross_entropy_loss(&s, &tree(&[2, 0, 4, 2])).unwrap();
        assert_abs_diff_eq!(loss, 4.0 * 4f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn masked_gold_is_a_data_error() {
        let s = ScoreMatrix::zeros(2);
        let err = cross_entropy_raw(s.values(), &[1, 0]).unwrap_err();
        assert!(matches!(err, Error::Data { ref locus, .. } if locus == "row 0"));
    }

    #[test]
    fn softmax_rows_sum_to_one_and_ignore_mask() {
        let s = ScoreMatrix::from_rows(&[[1.0, 1e6, -3.0], [0.2, 0.1, f64::MAX]]).unwrap();
        let p = row_softmax(&s);
        for i in 0..2 {
            assert_abs_diff_eq!(p.row(i).iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            assert_eq!(p.get(&[i, i + 1]), 0.0);
        }
    }

    #[test]
    fn mse_cases() {
        let a = ScoreMatrix::from_rows(&[[0.3, 1.0, -2.0], [0.5, 9.0, 0.0]]).unwrap();
        assert_eq!(mse_loss(&a, &a).unwrap(), 0.0);

        let one = ScoreMatrix::from_rows(&[[1.0, 7.0]]).unwrap();
        let zero = ScoreMatrix::from_rows(&[[0.0, -3.0]]).unwrap();
        assert_eq!(mse_loss(&one, &zero).unwrap(), 1.0);

        let p = ScoreMatrix::from_rows(&[[1.0, 50.0, -1.0], [2.0, 0.0, 50.0]]).unwrap();
        let t = ScoreMatrix::zeros(2);
        assert_eq!(mse_loss(&p, &t).unwrap(), 1.5);

        assert!(mse_loss(&p, &ScoreMatrix::zeros(1)).is_err());
    }

    #[test]
    fn mse_is_symmetric() {
        let p = ScoreMatrix::from_rows(&[[1.0, 0.0, -1.5], [2.0, 0.3, 0.0]]).unwrap();
        let t = ScoreMatrix::from_rows(&[[0.2, 4.0, 0.5], [-1.0, 0.0, 9.0]]).unwrap();
        assert_eq!(mse_loss(&p, &t).unwrap(), mse_loss(&t, &p).unwrap());
    }
}
