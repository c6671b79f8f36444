//! Next-minute direction labels and ten-class magnitude buckets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::candles::CandleSeries;
use crate::matrix::FeatureMatrix;

/// `close[t + 1] - close[t]`; one shorter than the input.
pub fn close_changes(close: &[f64]) -> Vec<f64> {
    close.windows(2).map(|w| w[1] - w[0]).collect()
}

/// 1 for a rise, 0 otherwise (an unchanged close counts as "not up").
#[inline]
pub fn direction_of(change: f64) -> u32 {
    u32::from(change > 0.0)
}

/// Mean positive and mean negative close change, fitted on training rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketThresholds {
    pub mean_pos: f64,
    pub mean_neg: f64,
}

impl BucketThresholds {
    pub fn new(mean_pos: f64, mean_neg: f64) -> Result<Self> {
        if !(mean_pos > 0.0 && mean_neg < 0.0) {
            return Err(Error::InvalidArgument(format!("need mean_pos > 0 > mean_neg, got {mean_pos} and {mean_neg}")));
        }
        Ok(BucketThresholds { mean_pos, mean_neg })
    }

    pub fn fit(train_changes: &[f64]) -> Result<Self> {
        let mean = |it: Vec<f64>| (!it.is_empty()).then(|| it.iter().sum::<f64>() / it.len() as f64);
        let pos = mean(train_changes.iter().copied().filter(|&c| c > 0.0).collect());
        let neg = mean(train_changes.iter().copied().filter(|&c| c < 0.0).collect());
        match (pos, neg) {
            (Some(p), Some(n)) => Self::new(p, n),
            _ => Err(Error::InvalidArgument(
                "training changes need both rises and falls to define magnitude buckets".into(),
            )),
        }
    }

    /// The nine bin edges: `mean_neg`, three inner negative edges, 0, three
    /// inner positive edges, `mean_pos`.
    pub fn edges(&self) -> [f64; 9] {
        let wn = -self.mean_neg / 4.0;
        let wp = self.mean_pos / 4.0;
        [
            self.mean_neg,
            self.mean_neg + wn,
            self.mean_neg + 2.0 * wn,
            self.mean_neg + 3.0 * wn,
            0.0,
            wp,
            2.0 * wp,
            3.0 * wp,
            self.mean_pos,
        ]
    }

    /// Class 0 below `mean_neg`; 1..=4 split `[mean_neg, 0]` into equal
    /// half-open bins with the top bin closed at 0; 5..=8 split `(0, mean_pos]`;
    /// 9 above `mean_pos`.
    pub fn classify(&self, change: f64) -> u32 {
        let e = self.edges();
        if change < e[0] {
            0
        } else if change <= 0.0 {
            (0..4).rev().find(|&k| change >= e[k]).map_or(1, |k| k as u32 + 1)
        } else if change <= e[8] {
            (5..=8).find(|&k| change <= e[k]).map_or(8, |k| k as u32)
        } else {
            9
        }
    }
}

pub fn bucket_magnitude(changes: &[f64], thresholds: &BucketThresholds) -> Vec<u32> {
    changes.iter().map(|&c| thresholds.classify(c)).collect()
}

/// Feature rows paired with next-minute targets. `features.labels()` holds the
/// direction labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFrame {
    pub features: FeatureMatrix,
    pub timestamps: Vec<i64>,
    pub direction: Vec<u32>,
    pub magnitude: Vec<u32>,
    pub close_change: Vec<f64>,
    pub thresholds: BucketThresholds,
}

impl LabeledFrame {
    pub fn rows(&self) -> usize {
        self.direction.len()
    }

    /// Same rows, labelled with magnitude classes instead of directions.
    pub fn magnitude_matrix(&self) -> Result<FeatureMatrix> {
        self.features.with_labels(self.magnitude.clone(), 10)
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> LabeledFrame {
        LabeledFrame {
            features: self.features.slice_rows(range.clone()),
            timestamps: self.timestamps[range.clone()].to_vec(),
            direction: self.direction[range.clone()].to_vec(),
            magnitude: self.magnitude[range.clone()].to_vec(),
            close_change: self.close_change[range].to_vec(),
            thresholds: self.thresholds,
        }
    }

    pub fn select_columns_by_name<S: AsRef<str>>(&self, names: &[S]) -> Result<LabeledFrame> {
        Ok(LabeledFrame { features: self.features.select_columns_by_name(names)?, ..self.clone() })
    }
}

/// Attaches direction and magnitude targets to row-aligned features. The last
/// bar has no successor and is dropped.
pub fn label_frame(
    series: &CandleSeries,
    features: &FeatureMatrix,
    thresholds: &BucketThresholds,
) -> Result<LabeledFrame> {
    if features.rows() != series.len() {
        return Err(Error::Shape(format!("{} feature rows for {} bars", features.rows(), series.len())));
    }
    if series.len() < 2 {
        return Err(Error::InvalidArgument("labelling needs at least 2 bars".into()));
    }
    let close_change = close_changes(&series.close());
    let direction: Vec<u32> = close_change.iter().map(|&c| direction_of(c)).collect();
    let magnitude = bucket_magnitude(&close_change, thresholds);
    let keep = features.slice_rows(0..close_change.len());
    let mut timestamps = series.timestamps();
    timestamps.pop();
    Ok(LabeledFrame {
        features: keep.with_labels(direction.clone(), 2)?,
        timestamps,
        direction,
        magnitude,
        close_change,
        thresholds: *thresholds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::candles::{Candle, MINUTE_MS};

    fn series(closes: &[f64]) -> CandleSeries {
        CandleSeries::from_bars(
            closes
                .iter()
                .enumerate()
                .map(|(i, &c)| Candle {
                    timestamp: i as i64 * MINUTE_MS,
                    open: c,
                    high: c,
                    low: c,
                    close: c,
                    volume: 1.0,
                })
                .collect(),
        )
    }

    fn frame(closes: &[f64]) -> LabeledFrame {
        let s = series(closes);
        let f = FeatureMatrix::new(closes.to_vec(), vec!["close".into()], vec![0; closes.len()]).unwrap();
        label_frame(&s, &f, &BucketThresholds::new(1.0, -1.0).unwrap()).unwrap()
    }

    #[test]
    fn direction_rules() {
        assert_eq!(frame(&[100.0, 101.0]).direction, vec![1]);
        assert_eq!(frame(&[100.0, 100.0]).direction, vec![0]);
        assert_eq!(frame(&[100.0, 99.0]).direction, vec![0]);
        let f = frame(&[100.0, 100.0]);
        assert_eq!(f.magnitude, vec![4]);
        assert_eq!(f.rows(), 1);
        assert_eq!(f.features.labels(), &[0]);
    }

    #[test]
    fn misaligned_lengths_rejected() {
        let s = series(&[1.0, 2.0, 3.0]);
        let f = FeatureMatrix::new(vec![1.0, 2.0], vec!["c".into()], vec![0, 0]).unwrap();
        let t = BucketThresholds::new(1.0, -1.0).unwrap();
        assert!(matches!(label_frame(&s, &f, &t), Err(Error::Shape(_))));
    }

    #[test]
    fn bucket_examples() {
        let t = BucketThresholds::new(4.0, -4.0).unwrap();
        assert_eq!(t.classify(-4.0 - 1e-9), 0);
        assert_eq!(t.classify(0.0), 4);
        assert_eq!(t.classify(1.0), 5);
        assert_eq!(t.classify(3.5), 8);
        assert_eq!(t.classify(4.0 + 1e-9), 9);
        assert_eq!(t.classify(-4.0), 1);
    }

    #[test]
    fn fit_requires_both_signs() {
        assert!(BucketThresholds::fit(&[1.0, 2.0, 0.0]).is_err());
        let t = BucketThresholds::fit(&[1.0, 3.0, -2.0, 0.0]).unwrap();
        assert_eq!((t.mean_pos, t.mean_neg), (2.0, -2.0));
    }
}
