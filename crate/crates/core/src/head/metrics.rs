use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Area under the ROC curve by the Mann-Whitney pair count; ties count one
/// half.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            context: "auroc labels",
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("auroc scores"));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass("auroc labels"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // midranks, 1-based
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (positives as f64, negatives as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GateDecision {
    Pass,
    Alarm,
}

/// Alarm iff `prob > tau`.
pub fn gate(prob: f64, tau: f64) -> Result<GateDecision> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(invalid("prob", format!("{prob} is not a probability")));
    }
    Ok(if prob > tau {
        GateDecision::Alarm
    } else {
        GateDecision::Pass
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_count(scores: &[f64], labels: &[bool]) -> f64 {
        let mut total = 0.0;
        let mut pairs = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            for (j, &sj) in scores.iter().enumerate() {
                if labels[i] && !labels[j] {
                    pairs += 1.0;
                    total += if si > sj {
                        1.0
                    } else if si == sj {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        total / pairs
    }

    #[test]
    fn hand_cases() {
        let l = [true, false, true, false];
        assert_eq!(auroc(&[0.9, 0.8, 0.4, 0.3], &l).unwrap(), 0.75);
        assert_eq!(auroc(&[0.9, 0.1, 0.8, 0.2], &l).unwrap(), 1.0);
        assert_eq!(auroc(&[0.4; 4], &l).unwrap(), 0.5);
        assert!(matches!(
            auroc(&[0.1, 0.2], &[true, true]),
            Err(Error::SingleClass(_))
        ));
    }

    #[test]
    fn matches_pair_counting_with_ties() {
        let scores = [0.3, 0.3, 0.7, 0.1, 0.7, 0.5, 0.3, 0.9];
        let labels = [true, false, false, true, true, false, true, false];
        let a = auroc(&scores, &labels).unwrap();
        assert!((a - pair_count(&scores, &labels)).abs() < 1e-15);
        let transformed: Vec<f64> = scores.iter().map(|s| (5.0 * s).exp()).collect();
        assert_eq!(auroc(&transformed, &labels).unwrap(), a);
    }

    #[test]
    fn gate_is_strict() {
        assert_eq!(gate(0.9, 0.5).unwrap(), GateDecision::Alarm);
        assert_eq!(gate(0.5, 0.5).unwrap(), GateDecision::Pass);
        assert_eq!(gate(0.2, 0.5).unwrap(), GateDecision::Pass);
        assert!(gate(1.5, 0.5).is_err());
    }
}
