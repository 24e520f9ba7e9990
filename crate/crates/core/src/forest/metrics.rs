use serde::{Deserialize, Serialize};

use super::{class_indices, FeatureMatrix, ForestModel, N_CLASSES};
use crate::ecg::BeatClass;
use crate::error::{Error, Result};

/// Classification statistics derived from a 3x3 confusion matrix whose rows
/// are true classes and columns predicted classes, in `[Normal, PVC, AF]`
/// order. Undefined ratios (zero denominators) are reported as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub confusion: [[u64; N_CLASSES]; N_CLASSES],
    pub total: u64,
    pub accuracy: f64,
    pub precision: [f64; N_CLASSES],
    pub recall: [f64; N_CLASSES],
    pub f1: [f64; N_CLASSES],
    pub macro_f1: f64,
    /// Anomalous (PVC or AF) segments flagged as any anomaly.
    pub sensitivity: f64,
    /// Normal segments predicted Normal.
    pub specificity: f64,
    /// Accuracy of the anomaly-vs-normal decision.
    pub binary_accuracy: f64,
    pub true_positive_rate: [f64; N_CLASSES],
    pub false_negative_rate: [f64; N_CLASSES],
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricsReport {
    pub fn from_confusion(confusion: [[u64; N_CLASSES]; N_CLASSES]) -> Self {
        let total: u64 = confusion.iter().flatten().sum();
        let correct: u64 = (0..N_CLASSES).map(|c| confusion[c][c]).sum();
        let support: Vec<u64> = confusion.iter().map(|row| row.iter().sum()).collect();
        let predicted: Vec<u64> = (0..N_CLASSES).map(|c| confusion.iter().map(|row| row[c]).sum()).collect();

        let mut precision = [0.0; N_CLASSES];
        let mut recall = [0.0; N_CLASSES];
        let mut f1 = [0.0; N_CLASSES];
        let mut fnr = [0.0; N_CLASSES];
        for c in 0..N_CLASSES {
            precision[c] = ratio(confusion[c][c], predicted[c]);
            recall[c] = ratio(confusion[c][c], support[c]);
            f1[c] = if precision[c] + recall[c] > 0.0 {
                2.0 * precision[c] * recall[c] / (precision[c] + recall[c])
            } else {
                0.0
            };
            fnr[c] = ratio(support[c] - confusion[c][c], support[c]);
        }
        let present: Vec<usize> = (0..N_CLASSES).filter(|&c| support[c] > 0 || predicted[c] > 0).collect();
        let macro_f1 =
            if present.is_empty() { 0.0 } else { present.iter().map(|&c| f1[c]).sum::<f64>() / present.len() as f64 };

        let normal = BeatClass::Normal.index();
        let anomalous_flagged: u64 = (0..N_CLASSES)
            .filter(|&t| t != normal)
            .flat_map(|t| (0..N_CLASSES).filter(|&p| p != normal).map(move |p| (t, p)))
            .map(|(t, p)| confusion[t][p])
            .sum();
        let anomalous_total: u64 = (0..N_CLASSES).filter(|&t| t != normal).map(|t| support[t]).sum();
        let sensitivity = ratio(anomalous_flagged, anomalous_total);
        let specificity = ratio(confusion[normal][normal], support[normal]);
        let binary_accuracy = ratio(anomalous_flagged + confusion[normal][normal], total);

        MetricsReport {
            confusion,
            total,
            accuracy: ratio(correct, total),
            precision,
            recall,
            f1,
            macro_f1,
            sensitivity,
            specificity,
            binary_accuracy,
            true_positive_rate: recall,
            false_negative_rate: fnr,
        }
    }

    pub fn from_labels(truth: &[u8], predicted: &[u8]) -> Self {
        let mut confusion = [[0u64; N_CLASSES]; N_CLASSES];
        for (&t, &p) in truth.iter().zip(predicted) {
            confusion[t as usize][p as usize] += 1;
        }
        Self::from_confusion(confusion)
    }

    pub fn support(&self, class: BeatClass) -> u64 {
        self.confusion[class.index()].iter().sum()
    }
}

/// Scores `model` on labelled test rows.
pub fn evaluate(model: &ForestModel, x: &FeatureMatrix, labels: &[BeatClass]) -> Result<MetricsReport> {
    if x.rows == 0 {
        return Err(Error::param("empty test set"));
    }
    if labels.len() != x.rows {
        return Err(Error::Dimension { expected: x.rows, actual: labels.len() });
    }
    let predicted = class_indices(&model.predict_matrix(x)?);
    Ok(MetricsReport::from_labels(&class_indices(labels), &predicted))
}
