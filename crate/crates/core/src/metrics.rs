//! Confusion-matrix metrics, agreement coefficients, and ROC/AUC.
//!
//! Counts are exact integers; every rate is computed in `f64`. Undefined
//! ratios (0/0) follow the documented convention: the value is 0 and the
//! metric name is recorded in the report's `degenerate` list.

use crate::data::Label;
use crate::error::{Error, Result};
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

/// 2×2 contingency table; rows = true class, columns = predicted class,
/// class order `[case, control]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 2]; 2],
}

impl ConfusionMatrix {
    pub fn new(counts: [[usize; 2]; 2]) -> Result<Self> {
        let cm = Self { counts };
        if cm.total() == 0 {
            return Err(Error::InvalidData("confusion matrix has zero total".into()));
        }
        Ok(cm)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        (self.counts[0][0] + self.counts[1][1]) as f64 / self.total() as f64
    }

    /// Row sum: number of samples whose true class is `c`.
    pub fn actual(&self, c: usize) -> usize {
        self.counts[c][0] + self.counts[c][1]
    }

    /// Column sum: number of samples predicted as class `c`.
    pub fn predicted(&self, c: usize) -> usize {
        self.counts[0][c] + self.counts[1][c]
    }
}

/// Exact counts from paired label vectors.
pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::InvalidData("confusion of empty label vectors".into()));
    }
    let mut counts = [[0usize; 2]; 2];
    for (t, p) in y_true.iter().zip(y_pred) {
        counts[t.index()][p.index()] += 1;
    }
    ConfusionMatrix::new(counts)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetricsReport {
    /// Indexed `[case, control]`.
    pub per_class: [ClassMetrics; 2],
    pub accuracy: f64,
    /// Names of metrics that hit the 0/0 convention, e.g. `precision[control]`.
    pub degenerate: Vec<String>,
}

fn ratio(num: usize, den: usize, name: &str, degenerate: &mut Vec<String>) -> f64 {
    if den == 0 {
        degenerate.push(name.to_owned());
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class precision/sensitivity/specificity/F1 plus overall accuracy.
pub fn class_metrics(cm: &ConfusionMatrix) -> ClassMetricsReport {
    let mut degenerate = Vec::new();
    let mut per_class = [ClassMetrics {
        precision: 0.0,
        sensitivity: 0.0,
        specificity: 0.0,
        f1: 0.0,
    }; 2];
    for (c, slot) in per_class.iter_mut().enumerate() {
        let o = 1 - c;
        let tp = cm.counts[c][c];
        let fp = cm.counts[o][c];
        let fam = Label::from_index(c);
        let precision = ratio(tp, tp + fp, &format!("precision[{fam}]"), &mut degenerate);
        let sensitivity = ratio(tp, cm.actual(c), &format!("sensitivity[{fam}]"), &mut degenerate);
        let specificity = ratio(
            cm.counts[o][o],
            cm.actual(o),
            &format!("specificity[{fam}]"),
            &mut degenerate,
        );
        let f1 = if precision + sensitivity > 0.0 {
            2.0 * precision * sensitivity / (precision + sensitivity)
        } else {
            degenerate.push(format!("f1[{fam}]"));
            0.0
        };
        *slot = ClassMetrics {
            precision,
            sensitivity,
            specificity,
            f1,
        };
    }
    ClassMetricsReport {
        per_class,
        accuracy: cm.accuracy(),
        degenerate,
    }
}

/// Matthews correlation coefficient; 0 when any marginal is empty.
pub fn mcc(cm: &ConfusionMatrix) -> f64 {
    let [[a, b], [c, d]] = cm.counts.map(|r| r.map(|v| v as f64));
    let den = ((a + b) * (c + d) * (a + c) * (b + d)).sqrt();
    if den == 0.0 {
        0.0
    } else {
        (a * d - b * c) / den
    }
}

fn mcc_is_degenerate(cm: &ConfusionMatrix) -> bool {
    cm.actual(0) == 0 || cm.actual(1) == 0 || cm.predicted(0) == 0 || cm.predicted(1) == 0
}

/// Cohen's kappa; 0 when chance agreement is exactly 1.
pub fn kappa(cm: &ConfusionMatrix) -> f64 {
    let n = cm.total() as f64;
    let po = cm.accuracy();
    let pe = (cm.actual(0) as f64 * cm.predicted(0) as f64
        + cm.actual(1) as f64 * cm.predicted(1) as f64)
        / (n * n);
    if (1.0 - pe).abs() < f64::EPSILON {
        0.0
    } else {
        (po - pe) / (1.0 - pe)
    }
}

/// One point of a ROC curve. `threshold` is the lowest score still classified
/// positive at this point; `None` marks the (0,0) anchor above every score.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: Option<f64>,
}

/// ROC sweep over the distinct scores in descending order. Tied scores are
/// processed as one group, so the trapezoidal area equals the tie-corrected
/// rank-sum statistic exactly. Starts at (0,0) and ends at (1,1).
pub fn roc_points(scores: &[f64], y_true: &[bool]) -> Result<Vec<RocPoint>> {
    if scores.len() != y_true.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: y_true.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("ROC scores".into()));
    }
    let pos = y_true.iter().filter(|p| **p).count();
    let neg = y_true.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::InvalidData(
            "ROC needs at least one positive and one negative sample".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].partial_cmp(&scores[i]).unwrap().then(i.cmp(&j)));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: None,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if y_true[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold: Some(s),
        });
    }
    Ok(points)
}

/// Trapezoidal area under a ROC point list.
pub fn auc(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

/// Convenience: area under the ROC of (scores, labels).
pub fn roc_auc(scores: &[f64], y_true: &[bool]) -> Result<f64> {
    Ok(auc(&roc_points(scores, y_true)?))
}

/// Micro-averaged AUC: one pooled ROC over the (sample, class) indicator set.
/// `probs` is n×2 with columns in `[case, control]` order.
pub fn auc_micro(probs: ArrayView2<f64>, y_true: &[Label]) -> Result<f64> {
    if probs.nrows() != y_true.len() || probs.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            got: probs.nrows(),
        });
    }
    let mut scores = Vec::with_capacity(2 * y_true.len());
    let mut indicator = Vec::with_capacity(2 * y_true.len());
    for c in 0..2 {
        for (i, label) in y_true.iter().enumerate() {
            scores.push(probs[[i, c]]);
            indicator.push(label.index() == c);
        }
    }
    roc_auc(&scores, &indicator)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
    pub auc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerClass<V> {
    pub case: V,
    pub control: V,
}

/// The full evaluation document for one test partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub confusion: [[usize; 2]; 2],
    pub accuracy: f64,
    pub per_class: PerClass<ClassReport>,
    pub mcc: f64,
    pub kappa: f64,
    pub macro_auc: f64,
    pub micro_auc: f64,
    pub roc: PerClass<Vec<RocPoint>>,
    pub degenerate: Vec<String>,
}

impl MetricsReport {
    /// Build every metric from class probabilities (n×2, `[case, control]`
    /// columns) and true labels. Predictions are argmax with ties going to
    /// the case class.
    pub fn from_probabilities(probs: ArrayView2<f64>, y_true: &[Label]) -> Result<Self> {
        if probs.nrows() != y_true.len() || probs.ncols() != 2 {
            return Err(Error::DimensionMismatch {
                expected: y_true.len(),
                got: probs.nrows(),
            });
        }
        let y_pred: Vec<Label> = probs
            .rows()
            .into_iter()
            .map(|r| if r[1] > r[0] { Label::Control } else { Label::Case })
            .collect();
        let cm = confusion(y_true, &y_pred)?;
        let cls = class_metrics(&cm);
        let mut degenerate = cls.degenerate.clone();
        if mcc_is_degenerate(&cm) {
            degenerate.push("mcc".into());
        }

        let mut class_auc = [0.0f64; 2];
        let mut class_roc: [Vec<RocPoint>; 2] = [Vec::new(), Vec::new()];
        for c in 0..2 {
            let scores: Vec<f64> = probs.column(c).to_vec();
            let truth: Vec<bool> = y_true.iter().map(|l| l.index() == c).collect();
            let points = roc_points(&scores, &truth)?;
            class_auc[c] = auc(&points);
            class_roc[c] = points;
        }
        let [roc_case, roc_control] = class_roc;

        Ok(MetricsReport {
            confusion: cm.counts,
            accuracy: cls.accuracy,
            per_class: PerClass {
                case: ClassReport {
                    precision: cls.per_class[0].precision,
                    sensitivity: cls.per_class[0].sensitivity,
                    specificity: cls.per_class[0].specificity,
                    f1: cls.per_class[0].f1,
                    auc: class_auc[0],
                },
                control: ClassReport {
                    precision: cls.per_class[1].precision,
                    sensitivity: cls.per_class[1].sensitivity,
                    specificity: cls.per_class[1].specificity,
                    f1: cls.per_class[1].f1,
                    auc: class_auc[1],
                },
            },
            mcc: mcc(&cm),
            kappa: kappa(&cm),
            macro_auc: (class_auc[0] + class_auc[1]) / 2.0,
            micro_auc: auc_micro(probs, y_true)?,
            roc: PerClass {
                case: roc_case,
                control: roc_control,
            },
            degenerate,
        })
    }
}
