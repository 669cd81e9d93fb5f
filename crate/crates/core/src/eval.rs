//! Detection scores, ROC curves and area summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry<T> {
    pub id: String,
    pub score: T,
    pub truth: Option<bool>,
}

/// Per-instance detection scores with optional ground truth.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreSet<T> {
    pub entries: Vec<ScoreEntry<T>>,
}

impl<T: Real> ScoreSet<T> {
    /// Entries named by position, without truth.
    pub fn from_scores(scores: Vec<T>) -> Self {
        Self {
            entries: scores
                .into_iter()
                .enumerate()
                .map(|(i, score)| ScoreEntry {
                    id: i.to_string(),
                    score,
                    truth: None,
                })
                .collect(),
        }
    }

    pub fn from_labeled(scores: &[T], truth: &[bool]) -> Result<Self> {
        Self::from_scores(scores.to_vec()).with_truth(truth)
    }

    pub fn with_truth(mut self, truth: &[bool]) -> Result<Self> {
        if truth.len() != self.entries.len() {
            return Err(Error::DimensionMismatch {
                expected: self.entries.len(),
                found: truth.len(),
            });
        }
        for (e, t) in self.entries.iter_mut().zip(truth) {
            e.truth = Some(*t);
        }
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scores(&self) -> Vec<T> {
        self.entries.iter().map(|e| e.score).collect()
    }

    /// `(score, truth)` pairs; errors when any entry lacks truth.
    fn labeled(&self) -> Result<Vec<(T, bool)>> {
        self.entries
            .iter()
            .map(|e| e.truth.map(|t| (e.score, t)).ok_or_else(|| Error::MissingTruth(e.id.clone())))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// ROC curve from `(0, 0)` to `(1, 1)`. Thresholds sweep from high to low
/// and tied scores enter together as one step.
pub fn roc_curve<T: Real>(scores: &ScoreSet<T>) -> Result<Vec<RocPoint>> {
    let mut pairs = scores.labeled()?;
    let n_pos = pairs.iter().filter(|(_, t)| *t).count();
    let n_neg = pairs.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    if pairs.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::InvalidArgument("scores contain NaN".into()));
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("NaN filtered above"));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < pairs.len() {
        let s = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == s {
            if pairs[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            threshold: s.to_f64_lossy(),
        });
    }
    Ok(points)
}

/// Trapezoidal area under a ROC curve.
pub fn auc_of_curve(curve: &[RocPoint]) -> f64 {
    curve
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) * 0.5)
        .sum()
}

pub fn auc<T: Real>(scores: &ScoreSet<T>) -> Result<f64> {
    Ok(auc_of_curve(&roc_curve(scores)?))
}

/// Area under the ROC curve up to a false-alarm-rate cutoff, divided by the
/// width of the integration interval.
///
/// `far_cutoff` is in false alarms per unit area and `area_per_sample` is the
/// ground area of one instance, so the false-positive-rate limit is
/// `far_cutoff · area_per_sample · N / N⁻`, clipped to 1.
pub fn nauc<T: Real>(scores: &ScoreSet<T>, far_cutoff: f64, area_per_sample: f64) -> Result<f64> {
    if !(far_cutoff > 0.0) || !(area_per_sample > 0.0) {
        return Err(Error::InvalidArgument(
            "false alarm cutoff and area per sample must be positive".into(),
        ));
    }
    let curve = roc_curve(scores)?;
    let n = scores.len() as f64;
    let n_neg = scores.entries.iter().filter(|e| e.truth == Some(false)).count() as f64;
    let limit = (far_cutoff * area_per_sample * n / n_neg).min(1.0);
    Ok(partial_area(&curve, limit) / limit)
}

/// Area under the piecewise-linear curve over `[0, limit]`.
pub fn partial_area(curve: &[RocPoint], limit: f64) -> f64 {
    let mut area = 0.0;
    for w in curve.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.fpr >= limit {
            break;
        }
        if b.fpr <= limit {
            area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
        } else {
            let t = (limit - a.fpr) / (b.fpr - a.fpr);
            let tpr = a.tpr + t * (b.tpr - a.tpr);
            area += (limit - a.fpr) * (a.tpr + tpr) * 0.5;
            break;
        }
    }
    area
}

/// Lower median: for an even count the smaller of the two middle values.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}
