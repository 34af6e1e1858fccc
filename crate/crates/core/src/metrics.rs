//! Binary classification metrics with class 1 (DDoS) as the positive class.
//!
//! Ratios whose denominator is zero are reported as 0 and the metric name is
//! added to [`MetricsReport::degenerate`].

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

fn check_labels(y: &[u8], what: &str) -> Result<()> {
    match y.iter().position(|&l| l > 1) {
        Some(i) => Err(Error::invalid(format!(
            "{what}[{i}] = {} is not a binary label",
            y[i]
        ))),
        None => Ok(()),
    }
}

pub fn confusion_matrix(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::invalid(format!(
            "label vectors differ in length ({} vs {})",
            y_true.len(),
            y_pred.len()
        )));
    }
    check_labels(y_true, "y_true")?;
    check_labels(y_pred, "y_pred")?;
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 0) => cm.tn += 1,
            (0, 1) => cm.fp += 1,
            _ => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_degenerate: bool,
    pub recall_degenerate: bool,
    pub f1_degenerate: bool,
}

fn ratio(num: f64, den: f64) -> (f64, bool) {
    if den == 0.0 {
        (0.0, true)
    } else {
        (num / den, false)
    }
}

/// Accuracy, precision, recall and F1.
pub fn core_metrics(cm: &ConfusionMatrix) -> Result<CoreMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::invalid("empty confusion matrix"));
    }
    let (tp, tn, fp, fn_) = (cm.tp as f64, cm.tn as f64, cm.fp as f64, cm.fn_ as f64);
    let accuracy = (tp + tn) / total as f64;
    let (precision, precision_degenerate) = ratio(tp, tp + fp);
    let (recall, recall_degenerate) = ratio(tp, tp + fn_);
    let (f1, f1_degenerate) = ratio(2.0 * precision * recall, precision + recall);
    Ok(CoreMetrics {
        accuracy,
        precision,
        recall,
        f1,
        precision_degenerate,
        recall_degenerate,
        f1_degenerate,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementMetrics {
    pub kappa: f64,
    pub mcc: f64,
    pub kappa_degenerate: bool,
    pub mcc_degenerate: bool,
}

/// Cohen's kappa and Matthews correlation coefficient.
pub fn agreement_metrics(cm: &ConfusionMatrix) -> Result<AgreementMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::invalid("empty confusion matrix"));
    }
    let (tp, tn, fp, fn_) = (cm.tp as i128, cm.tn as i128, cm.fp as i128, cm.fn_ as i128);
    // kappa = (p_o - p_e) / (1 - p_e), multiplied through by n^2 so both
    // sides are exact integers
    let kappa_num = 2 * (tp * tn - fn_ * fp);
    let kappa_den = (tp + fp) * (fp + tn) + (tp + fn_) * (fn_ + tn);
    let (kappa, kappa_degenerate) = ratio(kappa_num as f64, kappa_den as f64);

    let den = (((tp + fp) * (tp + fn_)) as f64 * ((tn + fp) * (tn + fn_)) as f64).sqrt();
    let mcc_num = (tp * tn - fp * fn_) as f64;
    let (mcc, mcc_degenerate) = ratio(mcc_num, den);
    Ok(AgreementMetrics {
        kappa,
        mcc: mcc.clamp(-1.0, 1.0),
        kappa_degenerate,
        mcc_degenerate,
    })
}

/// Mean squared error between positive-class probabilities and labels.
pub fn brier_score(y_true: &[u8], probs: &[f64]) -> Result<f64> {
    if y_true.is_empty() {
        return Err(Error::invalid("brier score of empty input"));
    }
    if y_true.len() != probs.len() {
        return Err(Error::invalid("labels and probabilities differ in length"));
    }
    check_labels(y_true, "y_true")?;
    if let Some(i) = probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid(format!("probability {} outside [0,1]", probs[i])));
    }
    let s: f64 = y_true
        .iter()
        .zip(probs)
        .map(|(&y, &p)| {
            let d = p - y as f64;
            d * d
        })
        .sum();
    Ok(s / y_true.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Score threshold (`score >= threshold` is predicted positive); +inf
    /// for the origin.
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    /// Two-column `fpr,tpr` CSV for plotting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "fpr,tpr")?;
        for p in &self.points {
            writeln!(w, "{},{}", p.fpr, p.tpr)?;
        }
        Ok(())
    }
}

/// ROC curve with one step per distinct score (descending) and trapezoidal
/// AUC. Tied scores move diagonally, which credits tied pairs with one half.
pub fn roc_auc(y_true: &[u8], scores: &[f64]) -> Result<RocCurve> {
    if y_true.len() != scores.len() {
        return Err(Error::invalid("labels and scores differ in length"));
    }
    check_labels(y_true, "y_true")?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    let pos = y_true.iter().filter(|&&y| y == 1).count() as u64;
    let neg = y_true.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::invalid("ROC AUC needs both classes present"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    // integer counts keep the area exact up to the final division
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut twice_area: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if y_true[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        twice_area += (fp - fp0) as u128 * (tp + tp0) as u128;
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold: s,
        });
    }
    let auc = twice_area as f64 / (2.0 * pos as f64 * neg as f64);
    Ok(RocCurve { points, auc })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `None` when the evaluated labels contain a single class.
    pub auc: Option<f64>,
    pub kappa: f64,
    pub mcc: f64,
    pub brier: f64,
    pub cm: ConfusionMatrix,
    /// Names of metrics whose denominator was zero (reported as 0).
    pub degenerate: Vec<String>,
}

/// Every metric for one set of predictions. Returns the ROC curve alongside
/// when both classes are present.
pub fn evaluate(
    y_true: &[u8],
    y_pred: &[u8],
    probs: &[f64],
) -> Result<(MetricsReport, Option<RocCurve>)> {
    let cm = confusion_matrix(y_true, y_pred)?;
    let core = core_metrics(&cm)?;
    let agree = agreement_metrics(&cm)?;
    let brier = brier_score(y_true, probs)?;
    let dist_pos = cm.tp + cm.fn_;
    let roc = if dist_pos > 0 && dist_pos < cm.total() {
        Some(roc_auc(y_true, probs)?)
    } else {
        None
    };
    let mut degenerate = Vec::new();
    for (flag, name) in [
        (core.precision_degenerate, "precision"),
        (core.recall_degenerate, "recall"),
        (core.f1_degenerate, "f1"),
        (agree.kappa_degenerate, "kappa"),
        (agree.mcc_degenerate, "mcc"),
        (roc.is_none(), "auc"),
    ] {
        if flag {
            degenerate.push(name.to_string());
        }
    }
    Ok((
        MetricsReport {
            accuracy: core.accuracy,
            precision: core.precision,
            recall: core.recall,
            f1: core.f1,
            auc: roc.as_ref().map(|r| r.auc),
            kappa: agree.kappa,
            mcc: agree.mcc,
            brier,
            cm,
            degenerate,
        },
        roc,
    ))
}
