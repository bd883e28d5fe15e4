//! Binary classification metrics.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("labels contain a single class")]
    SingleClass,
    #[error("{scores} scores for {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
}

fn check(scores: &[f64], labels: &[u8]) -> Result<(usize, usize), MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch { scores: scores.len(), labels: labels.len() });
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    Ok((pos, neg))
}

/// Positions sorted by descending score.
fn descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// Cumulative `(threshold, tp, fp)` for each distinct score, from the
/// highest threshold down. Prediction rule is `score >= threshold`.
fn sweep(scores: &[f64], labels: &[u8]) -> Vec<(f64, usize, usize)> {
    let order = descending(scores);
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let t = scores[order[k]];
        while k < order.len() && scores[order[k]] == t {
            if labels[order[k]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        out.push((t, tp, fp));
    }
    out
}

/// ROC curve as `(fpr, tpr)` points from `(0, 0)` to `(1, 1)`.
pub fn roc_points(scores: &[f64], labels: &[u8]) -> Result<Vec<(f64, f64)>, MetricsError> {
    let (pos, neg) = check(scores, labels)?;
    let mut pts = vec![(0.0, 0.0)];
    for (_, tp, fp) in sweep(scores, labels) {
        pts.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(pts)
}

/// Trapezoidal area under [`roc_points`]; tied scores contribute half credit,
/// so this equals the Mann-Whitney U statistic over `pos * neg`.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64, MetricsError> {
    let (pos, neg) = check(scores, labels)?;
    // integrate in counts to keep the sum exact, then normalize once
    let mut area2 = 0u128;
    let (mut prev_tp, mut prev_fp) = (0usize, 0usize);
    for (_, tp, fp) in sweep(scores, labels) {
        area2 += ((fp - prev_fp) as u128) * ((tp + prev_tp) as u128);
        prev_tp = tp;
        prev_fp = fp;
    }
    Ok(area2 as f64 / (2.0 * pos as f64 * neg as f64))
}

pub fn gini(auc: f64) -> f64 {
    2.0 * auc - 1.0
}

pub const LOGLOSS_CLAMP: f64 = 1e-15;

pub fn logloss(scores: &[f64], labels: &[u8]) -> f64 {
    let n = scores.len() as f64;
    -scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| {
            let s = s.clamp(LOGLOSS_CLAMP, 1.0 - LOGLOSS_CLAMP);
            if y == 1 {
                math::ln(s)
            } else {
                math::ln(1.0 - s)
            }
        })
        .sum::<f64>()
        / n
}

pub fn mse(scores: &[f64], labels: &[u8]) -> f64 {
    let n = scores.len() as f64;
    scores.iter().zip(labels).map(|(&s, &y)| (y as f64 - s) * (y as f64 - s)).sum::<f64>() / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn sensitivity(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Counts with `score >= threshold` predicted positive.
pub fn confusion_at(scores: &[f64], labels: &[u8], threshold: f64) -> Confusion {
    let mut c = Confusion::default();
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    c
}

/// Distinct score maximizing F1; ties go to the smallest threshold.
pub fn f1_optimal_threshold(scores: &[f64], labels: &[u8]) -> Result<f64, MetricsError> {
    let (pos, _) = check(scores, labels)?;
    let mut best: Option<(f64, usize, usize)> = None; // (threshold, 2tp, 2tp+fp+fn)
    for (t, tp, fp) in sweep(scores, labels) {
        let num = 2 * tp;
        let den = 2 * tp + fp + (pos - tp);
        // sweep runs from high to low thresholds, so >= keeps the smallest
        let better = match best {
            None => true,
            Some((_, bn, bd)) => (num as u128) * (bd as u128) >= (bn as u128) * (den as u128),
        };
        if better {
            best = Some((t, num, den));
        }
    }
    Ok(best.map(|b| b.0).unwrap_or(0.5))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub auc: f64,
    pub gini: f64,
    pub logloss: f64,
    pub mse: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub threshold: f64,
    pub confusion: Confusion,
}

pub fn evaluate(scores: &[f64], labels: &[u8], threshold: f64) -> Result<EvalReport, MetricsError> {
    let auc = auc(scores, labels)?;
    let confusion = confusion_at(scores, labels, threshold);
    Ok(EvalReport {
        auc,
        gini: gini(auc),
        logloss: logloss(scores, labels),
        mse: mse(scores, labels),
        sensitivity: confusion.sensitivity(),
        specificity: confusion.specificity(),
        threshold,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roc_shapes() {
        let p = roc_points(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap();
        assert!(p.contains(&(0.0, 1.0)));
        assert_eq!(roc_points(&[0.5; 4], &[1, 0, 1, 0]).unwrap(), vec![(0.0, 0.0), (1.0, 1.0)]);
        let inv = roc_points(&[0.1, 0.2, 0.8, 0.9], &[1, 1, 0, 0]).unwrap();
        assert!(inv.iter().all(|&(f, t)| t <= f));
        assert_eq!(roc_points(&[0.1, 0.2], &[1, 1]), Err(MetricsError::SingleClass));
    }

    #[test]
    fn auc_basics() {
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 6], &[1, 0, 1, 0, 0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn gini_values() {
        assert!((gini(0.9289) - 0.8578).abs() < 1e-12);
        assert_eq!(gini(0.5), 0.0);
        assert!((gini(0.9781) - 0.9562).abs() < 1e-12);
    }

    #[test]
    fn logloss_and_mse() {
        assert!(logloss(&[1.0, 0.0], &[1, 0]) < 1e-13);
        assert!((logloss(&[0.5; 3], &[1, 0, 1]) - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((logloss(&[0.25], &[1]) - 1.386_294_361_119_890_6).abs() < 1e-12);
        assert_eq!(mse(&[1.0, 0.0], &[1, 0]), 0.0);
        assert_eq!(mse(&[0.5; 2], &[1, 0]), 0.25);
        assert!((mse(&[0.8, 0.4], &[1, 0]) - 0.10).abs() < 1e-15);
    }

    #[test]
    fn confusion_cases() {
        let s = [0.9, 0.6, 0.4, 0.1];
        let y = [1, 1, 0, 0];
        let c = confusion_at(&s, &y, 0.5);
        assert_eq!((c.tp, c.tn, c.fp, c.fn_), (2, 2, 0, 0));
        assert_eq!((c.sensitivity(), c.specificity()), (1.0, 1.0));
        let all = confusion_at(&s, &y, 0.0);
        assert_eq!((all.sensitivity(), all.specificity()), (1.0, 0.0));
        assert_eq!(confusion_at(&s, &y, 0.95).sensitivity(), 0.0);
    }

    #[test]
    fn f1_threshold_separated_clusters() {
        let s = [0.2, 0.21, 0.19, 0.8, 0.81, 0.85];
        let y = [0, 0, 0, 1, 1, 1];
        assert_eq!(f1_optimal_threshold(&s, &y).unwrap(), 0.8);
        assert_eq!(f1_optimal_threshold(&s, &[1; 6]), Err(MetricsError::SingleClass));
    }
}
