use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::labels::LabeledFrame;
use crate::models::vote::VotedPrediction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: usize,
    pub accuracy_direction: f64,
    pub accuracy_magnitude: f64,
    /// Accuracy over matched rows; `None` when nothing matched.
    pub accuracy_retained: Option<f64>,
    pub matched: usize,
    pub coverage: f64,
    /// `[truth][predicted]` counts.
    pub confusion_direction: Vec<Vec<u64>>,
    pub confusion_magnitude: Vec<Vec<u64>>,
    /// Frequency of the most common true direction.
    pub majority_baseline: f64,
}

fn confusion(truth: &[u32], pred: &[u32], classes: usize) -> Vec<Vec<u64>> {
    let mut c = vec![vec![0u64; classes]; classes];
    for (&t, &p) in truth.iter().zip(pred) {
        c[t as usize][p as usize] += 1;
    }
    c
}

fn trace_fraction(c: &[Vec<u64>], rows: usize) -> f64 {
    (0..c.len()).map(|k| c[k][k]).sum::<u64>() as f64 / rows as f64
}

pub fn evaluate(pred: &VotedPrediction, truth_direction: &[u32], truth_magnitude: &[u32]) -> Result<EvalReport> {
    let rows = pred.len();
    if truth_direction.len() != rows || truth_magnitude.len() != rows {
        return Err(Error::Shape(format!(
            "{rows} predictions vs {} direction and {} magnitude labels",
            truth_direction.len(),
            truth_magnitude.len()
        )));
    }
    if rows == 0 {
        return Err(Error::Empty("nothing to evaluate".into()));
    }
    if let Some(i) = truth_direction.iter().position(|&d| d > 1) {
        return Err(Error::LabelOutOfRange { row: i, label: truth_direction[i], n_classes: 2 });
    }
    if let Some(i) = truth_magnitude.iter().position(|&c| c > 9) {
        return Err(Error::LabelOutOfRange { row: i, label: truth_magnitude[i], n_classes: 10 });
    }
    let confusion_direction = confusion(truth_direction, &pred.direction, 2);
    let confusion_magnitude = confusion(truth_magnitude, &pred.magnitude, 10);
    let matched = pred.matched_count();
    let retained_hits = pred.retained.iter().zip(truth_direction).filter(|(r, &t)| **r == Some(t)).count();
    let ups = truth_direction.iter().filter(|&&d| d == 1).count();
    Ok(EvalReport {
        rows,
        accuracy_direction: trace_fraction(&confusion_direction, rows),
        accuracy_magnitude: trace_fraction(&confusion_magnitude, rows),
        accuracy_retained: (matched > 0).then(|| retained_hits as f64 / matched as f64),
        matched,
        coverage: matched as f64 / rows as f64,
        confusion_direction,
        confusion_magnitude,
        majority_baseline: ups.max(rows - ups) as f64 / rows as f64,
    })
}

pub fn evaluate_frame(pred: &VotedPrediction, truth: &LabeledFrame) -> Result<EvalReport> {
    evaluate(pred, &truth.direction, &truth.magnitude)
}

impl EvalReport {
    /// Plain-text summary table.
    pub fn to_table(&self) -> String {
        let pct = |v: f64| format!("{:.2}%", 100.0 * v);
        let retained = self.accuracy_retained.map_or_else(|| "undefined".to_owned(), pct);
        let mut s = String::new();
        let mut line = |k: &str, v: String| s.push_str(&format!("{k:<22}{v:>12}\n"));
        line("rows", self.rows.to_string());
        line("direction accuracy", pct(self.accuracy_direction));
        line("magnitude accuracy", pct(self.accuracy_magnitude));
        line("retained accuracy", retained);
        line("coverage", pct(self.coverage));
        line("majority baseline", pct(self.majority_baseline));
        s
    }
}
