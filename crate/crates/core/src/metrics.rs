//! Evaluation metrics. Both are unweighted.

use crate::error::{check_finite, Error, Result};

/// Coefficient of determination `1 - SSE / SST`.
pub fn r2_score(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            what: "predictions",
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.len() < 2 {
        return Err(Error::InvalidArgument("R2 needs at least 2 points".into()));
    }
    check_finite(y_true, "y_true")?;
    check_finite(y_pred, "y_pred")?;
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let sst: f64 = y_true.iter().map(|y| (y - mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::InvalidArgument("R2 is undefined for constant y_true".into()));
    }
    let sse: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(y, p)| (y - p).powi(2))
        .sum();
    Ok(1.0 - sse / sst)
}

/// Area under the ROC curve from the Mann-Whitney rank sum; ties count one half.
pub fn auroc(labels: &[f64], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch {
            what: "scores",
            expected: labels.len(),
            got: scores.len(),
        });
    }
    check_finite(scores, "scores")?;
    if let Some(i) = labels.iter().position(|&l| l != 0.0 && l != 1.0) {
        return Err(Error::InvalidArgument(format!(
            "labels must be 0 or 1, index {i} has {}",
            labels[i]
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidArgument("AUROC needs both classes".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of midranks (1-based) of the positives
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_tie = order[i..=j].iter().filter(|&&k| labels[k] == 1.0).count();
        pos_rank_sum += midrank * pos_in_tie as f64;
        i = j + 1;
    }
    let (np, nn) = (n_pos as f64, n_neg as f64);
    let u = pos_rank_sum - np * (np + 1.0) / 2.0;
    Ok((u / (np * nn)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairwise_auc(labels: &[f64], scores: &[f64]) -> f64 {
        let mut acc = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li == 1.0 && lj == 0.0 {
                    pairs += 1.0;
                    acc += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        acc / pairs
    }

    #[test]
    fn r2_examples() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(r2_score(&y, &y).unwrap(), 1.0);
        assert_eq!(r2_score(&y, &[2.0; 3]).unwrap(), 0.0);
        assert_eq!(r2_score(&y, &[1.0, 2.0, 2.0]).unwrap(), 0.5);
        assert!(r2_score(&[4.0; 3], &y).is_err());
        assert!(r2_score(&[1.0], &[1.0]).is_err());
        assert!(r2_score(&y, &[1.0]).is_err());
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0.0, 0.0, 1.0, 1.0], &[0.1, 0.2, 0.8, 0.9]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.0, 0.0, 1.0, 1.0], &[0.1, 0.4, 0.35, 0.8]).unwrap(), 0.75);
        assert_eq!(auroc(&[0.0, 1.0, 1.0, 0.0], &[0.3; 4]).unwrap(), 0.5);
        assert!(auroc(&[1.0, 1.0], &[0.1, 0.2]).is_err());
        assert!(auroc(&[0.0, 2.0], &[0.1, 0.2]).is_err());
    }

    proptest! {
        #[test]
        fn auroc_matches_pair_count(labels in prop::collection::vec(0u8..2, 2..60),
                                    scores in prop::collection::vec(0u8..8, 60)) {
            let labels: Vec<f64> = labels.into_iter().map(f64::from).collect();
            prop_assume!(labels.iter().any(|&l| l == 1.0) && labels.iter().any(|&l| l == 0.0));
            let scores: Vec<f64> = scores[..labels.len()].iter().map(|&s| f64::from(s) / 3.0).collect();
            let fast = auroc(&labels, &scores).unwrap();
            prop_assert!((fast - pairwise_auc(&labels, &scores)).abs() < 1e-12);
        }

        #[test]
        fn auroc_ignores_monotone_transforms(labels in prop::collection::vec(0u8..2, 2..60),
                                             scores in prop::collection::vec(-3.0f64..3.0, 60),
                                             a in 0.1f64..10.0, b in -5.0f64..5.0) {
            let labels: Vec<f64> = labels.into_iter().map(f64::from).collect();
            prop_assume!(labels.iter().any(|&l| l == 1.0) && labels.iter().any(|&l| l == 0.0));
            let s = &scores[..labels.len()];
            let base = auroc(&labels, s).unwrap();
            let exp: Vec<f64> = s.iter().map(|v| v.exp()).collect();
            let affine: Vec<f64> = s.iter().map(|v| a * v + b).collect();
            prop_assert_eq!(auroc(&labels, &exp).unwrap(), base);
            prop_assert_eq!(auroc(&labels, &affine).unwrap(), base);
        }
    }
}
