//! Exact k-nearest-neighbor classifier over min-max (or z-score) scaled rows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::labels::LabeledFrame;
use crate::kernel::{self, Packed};
use crate::matrix::{FeatureMatrix, Normalization, Scaling};
use crate::si::row_min;

const QUERY_CHUNK: usize = 64;
const REFERENCE_TILE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    #[default]
    Direction,
    Magnitude,
}

impl Target {
    pub fn n_classes(self) -> u32 {
        match self {
            Target::Direction => 2,
            Target::Magnitude => 10,
        }
    }
}

/// A fitted model: the scaled training rows, their labels and the scaling to
/// apply to query rows. Immutable after fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub scaling: Scaling,
    train: FeatureMatrix,
}

impl KnnModel {
    /// Fits on `train` using its own labels.
    pub fn fit(train: &FeatureMatrix, k: usize, normalization: Normalization) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        if k > train.rows() {
            return Err(Error::InvalidArgument(format!("k={k} exceeds the {} training rows", train.rows())));
        }
        let scaling = Scaling::fit(train, normalization)?;
        let scaled = scaling.apply(train)?;
        Ok(KnnModel { k, scaling, train: scaled })
    }

    pub fn column_names(&self) -> &[String] {
        self.train.column_names()
    }

    pub fn n_classes(&self) -> u32 {
        self.train.n_classes()
    }

    pub fn train_rows(&self) -> usize {
        self.train.rows()
    }

    /// Majority label among the `k` nearest training rows of each query row.
    pub fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<u32>> {
        if rows.column_names() != self.column_names() {
            let missing: Vec<&String> =
                self.column_names().iter().filter(|c| !rows.column_names().contains(c)).collect();
            let extra: Vec<&String> = rows.column_names().iter().filter(|c| !self.column_names().contains(c)).collect();
            return Err(Error::Shape(format!(
                "model columns {:?} do not match query columns {:?} (missing {missing:?}, unexpected {extra:?})",
                self.column_names(),
                rows.column_names()
            )));
        }
        let scaled = self.scaling.apply(rows)?;
        let queries: Vec<&[f64]> = (0..scaled.rows()).map(|i| scaled.row(i)).collect();
        Ok(self.classify(&queries, None))
    }

    /// Predictions for the training rows themselves, each excluding itself.
    /// With `k = 1` the accuracy of these equals the separation index of the
    /// scaled training matrix.
    pub fn predict_leave_one_out(&self) -> Vec<u32> {
        let queries: Vec<&[f64]> = (0..self.train.rows()).map(|i| self.train.row(i)).collect();
        let ids: Vec<usize> = (0..self.train.rows()).collect();
        self.classify(&queries, Some(&ids))
    }

    /// The `k` nearest training rows of each query, ordered by
    /// `(distance, index)`.
    pub fn neighbors(&self, rows: &FeatureMatrix) -> Result<Vec<Vec<(f64, usize)>>> {
        let scaled = self.scaling.apply(rows)?;
        let queries: Vec<&[f64]> = (0..scaled.rows()).map(|i| scaled.row(i)).collect();
        Ok(self.search(&queries, None))
    }

    fn classify(&self, queries: &[&[f64]], exclude: Option<&[usize]>) -> Vec<u32> {
        let labels = self.train.labels();
        let n_classes = self.n_classes() as usize;
        self.search(queries, exclude).iter().map(|nn| majority(nn.iter().map(|&(_, j)| labels[j]), n_classes)).collect()
    }

    fn search(&self, queries: &[&[f64]], exclude: Option<&[usize]>) -> Vec<Vec<(f64, usize)>> {
        let train = &self.train;
        let (m, n) = (train.rows(), train.cols());
        let values = train.values();
        let norms = kernel::row_norms(values, n);
        let k = if exclude.is_some() { self.k.min(m.saturating_sub(1)) } else { self.k };
        queries
            .par_chunks(QUERY_CHUNK)
            .enumerate()
            .flat_map_iter(|(c, chunk)| {
                let base = c * QUERY_CHUNK;
                let qnorms: Vec<f64> = chunk.iter().map(|q| kernel::squared_norm(q)).collect();
                let mut best: Vec<Vec<(f64, usize)>> = vec![Vec::with_capacity(k + 1); chunk.len()];
                let tile = REFERENCE_TILE.min(m);
                let mut packed = Packed::new(values, n, &norms, 0, tile);
                let mut start = 0;
                while start < m {
                    let len = tile.min(m - start);
                    packed.repack(values, &norms, start, len);
                    if k == 1 {
                        kernel::visit_blocks(chunk, &qnorms, &packed, &mut |q0, j0, live, d| {
                            for (r, row) in d.iter().enumerate() {
                                let mut row = *row;
                                let me = exclude.map(|ids| ids[base + q0 + r]);
                                if let Some(me) = me.filter(|&me| (j0..j0 + live).contains(&me)) {
                                    row[me - j0] = f64::INFINITY;
                                }
                                let (v, l) = row_min(&row);
                                if me != Some(j0 + l) {
                                    offer(&mut best[q0 + r], 1, v, j0 + l);
                                }
                            }
                        });
                    } else {
                        kernel::visit_block(chunk, &qnorms, &packed, &mut |q, j, d| {
                            if exclude.is_some_and(|ids| ids[base + q] == j) {
                                return;
                            }
                            offer(&mut best[q], k, d, j);
                        });
                    }
                    start += len;
                }
                best
            })
            .collect()
    }
}

fn offer(list: &mut Vec<(f64, usize)>, k: usize, d: f64, j: usize) {
    if k == 0 {
        return;
    }
    let before = |a: &(f64, usize)| a.0 < d || (a.0 == d && a.1 < j);
    if list.len() == k && before(&list[k - 1]) {
        return;
    }
    let pos = list.partition_point(before);
    list.insert(pos, (d, j));
    list.truncate(k);
}

/// Most frequent label; ties go to the tied label whose nearest member comes
/// first, so an exact split defers to the nearest neighbor.
fn majority(ordered_labels: impl Iterator<Item = u32> + Clone, n_classes: usize) -> u32 {
    let mut counts = vec![0usize; n_classes];
    for l in ordered_labels.clone() {
        counts[l as usize] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0);
    ordered_labels.into_iter().find(|&l| counts[l as usize] == top).unwrap_or(0)
}

/// Fits on a labelled frame for either target. Direction models need odd `k`.
pub fn knn_fit(train: &LabeledFrame, k: usize, target: Target, normalization: Normalization) -> Result<KnnModel> {
    let matrix = match target {
        Target::Direction => {
            if k.is_multiple_of(2) {
                return Err(Error::InvalidArgument(format!("direction models need odd k, got {k}")));
            }
            train.features.with_labels(train.direction.clone(), 2)?
        }
        Target::Magnitude => train.magnitude_matrix()?,
    };
    KnnModel::fit(&matrix, k, normalization)
}

pub fn knn_predict(model: &KnnModel, rows: &FeatureMatrix) -> Result<Vec<u32>> {
    model.predict(rows)
}
