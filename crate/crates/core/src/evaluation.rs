//! Scoring of recovered layouts and of classifiers.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Add;

use crate::error::{Error, Result};
use crate::geometry::{Band, Label};

/// Intersection over union of two rectangles.
pub fn jaccard(a: &Band, b: &Band) -> Result<f64> {
    if a.area() == 0 {
        return Err(Error::ZeroArea(0));
    }
    if b.area() == 0 {
        return Err(Error::ZeroArea(1));
    }
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    Ok(inter as f64 / union as f64)
}

fn check_bands(bands: &[Band]) -> Result<()> {
    match bands.iter().position(|b| b.area() == 0) {
        Some(i) => Err(Error::ZeroArea(i)),
        None => Ok(()),
    }
}

/// Sum over result bands of the best ground-truth IoU, divided by the number
/// of ground-truth bands. Not symmetric, and exceeds 1 when many result
/// bands match well.
pub fn net_jaccard(result: &[Band], truth: &[Band]) -> Result<f64> {
    if truth.is_empty() || result.is_empty() {
        return Err(Error::InsufficientData);
    }
    check_bands(result)?;
    check_bands(truth)?;
    let mut sum = 0.0;
    for r in result {
        let mut best: f64 = 0.0;
        for t in truth {
            best = best.max(jaccard(r, t)?);
        }
        sum += best;
    }
    Ok(sum / truth.len() as f64)
}

/// One-to-one variant: the IoU sum of an optimal band matching divided by
/// the larger band count. Always in [0, 1].
pub fn matched_jaccard(result: &[Band], truth: &[Band]) -> Result<f64> {
    if truth.is_empty() || result.is_empty() {
        return Err(Error::InsufficientData);
    }
    check_bands(result)?;
    check_bands(truth)?;
    let mut cost = Vec::with_capacity(result.len());
    for r in result {
        let mut row = Vec::with_capacity(truth.len());
        for t in truth {
            row.push(-jaccard(r, t)?);
        }
        cost.push(row);
    }
    let total: f64 = -min_cost_assignment(&cost).into_iter().map(|(i, j)| cost[i][j]).sum::<f64>();
    Ok(total / result.len().max(truth.len()) as f64)
}

/// Hungarian method on an `n x m` cost matrix. Returns, for each row, its
/// assigned column when `n <= m`; otherwise the transpose is solved and only
/// matched rows are returned as `(row, col)` pairs in row order.
fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n = cost.len();
    let m = cost[0].len();
    if n > m {
        let t: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| cost[i][j]).collect()).collect();
        let mut pairs: Vec<(usize, usize)> = min_cost_assignment(&t).into_iter().map(|(j, i)| (i, j)).collect();
        pairs.sort_unstable();
        return pairs;
    }
    // potentials with 1-based sentinel column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=m).filter(|&j| p[j] != 0).map(|j| (p[j] - 1, j - 1)).collect();
    pairs.sort_unstable();
    pairs
}

/// Binary confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ConfusionCounts { tp, fp, tn, fn_ }
    }

    pub fn record(&mut self, actual: bool, predicted: bool) {
        match (actual, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Counts with the positive and negative classes exchanged.
    pub fn swapped(&self) -> Self {
        ConfusionCounts {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
        }
    }
}

impl Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

/// `None` marks a measure whose denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassifierMeasures {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_measure: Option<f64>,
    pub balanced_accuracy: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn classifier_measures(c: &ConfusionCounts) -> ClassifierMeasures {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let specificity = ratio(c.tn, c.tn + c.fp);
    let f_measure = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    let balanced_accuracy = match (recall, specificity) {
        (Some(r), Some(s)) => Some((r + s) / 2.0),
        _ => None,
    };
    ClassifierMeasures {
        precision,
        recall,
        f_measure,
        balanced_accuracy,
    }
}

/// Natural-vs-rest confusion of band labels: each result band is compared
/// with the truth band it overlaps most. Text bands on either side are
/// skipped.
pub fn band_label_confusion(result: &[Band], truth: &[Band]) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for r in result.iter().filter(|r| r.label != Label::Text) {
        let best = truth
            .iter()
            .filter(|t| t.intersection_area(r) > 0)
            .max_by_key(|t| t.intersection_area(r));
        if let Some(t) = best.filter(|t| t.label != Label::Text) {
            c.record(t.label == Label::Natural, r.label == Label::Natural);
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrameScore {
    pub name: alloc::string::String,
    pub net_jaccard: f64,
    pub matched_jaccard: f64,
}

/// Per-frame and corpus-level layout scores plus band-label measures for
/// both classes.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvaluationReport {
    pub frames: Vec<FrameScore>,
    pub mean_net_jaccard: f64,
    pub mean_matched_jaccard: f64,
    pub labels: ConfusionCounts,
    pub natural: ClassifierMeasures,
    pub synthetic: ClassifierMeasures,
}

impl EvaluationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_frame(&mut self, name: &str, result: &[Band], truth: &[Band]) -> Result<()> {
        self.frames.push(FrameScore {
            name: name.into(),
            net_jaccard: net_jaccard(result, truth)?,
            matched_jaccard: matched_jaccard(result, truth)?,
        });
        let n = self.frames.len() as f64;
        self.mean_net_jaccard = self.frames.iter().map(|f| f.net_jaccard).sum::<f64>() / n;
        self.mean_matched_jaccard = self.frames.iter().map(|f| f.matched_jaccard).sum::<f64>() / n;
        self.labels = self.labels + band_label_confusion(result, truth);
        self.natural = classifier_measures(&self.labels);
        self.synthetic = classifier_measures(&self.labels.swapped());
        Ok(())
    }
}
