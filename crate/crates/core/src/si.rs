//! Separation Index: the fraction of points whose nearest distinct neighbor
//! carries the same class label (leave-one-out 1-NN accuracy).
//!
//! Three routes compute neighbors:
//!
//! * [`distance_matrix`] + [`nearest_neighbors`] materialize all `m x m`
//!   squared distances and refuse inputs over a memory budget;
//! * [`nearest_neighbors_tiled`] walks `tile_rows`-sized blocks and keeps
//!   running per-row minima, so memory stays at `O(m * tile_rows)`;
//! * [`separation_index_sampled`] finds neighbors only for a seeded sample of
//!   reference rows.
//!
//! All three share the kernel in [`crate::kernel`], and ties always resolve to
//! the lowest row index, so the first two agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{self, Packed, LANES};
use crate::matrix::FeatureMatrix;

/// 4 GiB.
pub const DEFAULT_MEMORY_BUDGET: u128 = 4 << 30;
pub const DEFAULT_TILE_ROWS: usize = 256;

/// Symmetric `m x m` matrix of squared Euclidean distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    m: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.m..(i + 1) * self.m]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborAssignment {
    pub nearest_index: Vec<usize>,
    pub nearest_distance: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiResult {
    pub value: f64,
    pub matched_count: usize,
    pub m: usize,
    pub estimator: EstimatorKind,
    pub standard_error: f64,
    pub sample_size: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

/// How to evaluate SI on a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Estimator {
    /// Full distance matrix; fails over the memory budget.
    Exact,
    /// Exact value through the memory-bounded tiled kernel.
    Tiled {
        #[serde(default = "default_tile_rows")]
        tile_rows: usize,
    },
    Sampled {
        sample_size: usize,
        seed: u64,
    },
}

fn default_tile_rows() -> usize {
    DEFAULT_TILE_ROWS
}

impl Default for Estimator {
    fn default() -> Self {
        Estimator::Tiled { tile_rows: DEFAULT_TILE_ROWS }
    }
}

impl Estimator {
    pub fn evaluate(&self, matrix: &FeatureMatrix) -> Result<SiResult> {
        match *self {
            Estimator::Exact => separation_index(matrix),
            Estimator::Tiled { tile_rows } => separation_index_tiled(matrix, tile_rows.min(matrix.rows()).max(1)),
            Estimator::Sampled { sample_size, seed } => {
                separation_index_sampled(matrix, sample_size.min(matrix.rows()), seed)
            }
        }
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self, Estimator::Sampled { .. })
    }
}

fn require_rows(matrix: &FeatureMatrix, min: usize) -> Result<()> {
    if matrix.rows() < min {
        return Err(Error::InvalidArgument(format!("need at least {min} rows, got {}", matrix.rows())));
    }
    Ok(())
}

fn require_classes(matrix: &FeatureMatrix) -> Result<()> {
    if matrix.distinct_labels() < 2 {
        return Err(Error::SingleClass);
    }
    Ok(())
}

pub fn distance_matrix(matrix: &FeatureMatrix) -> Result<DistanceMatrix> {
    distance_matrix_with_budget(matrix, DEFAULT_MEMORY_BUDGET)
}

/// Gram-expansion distance matrix. Errors when `m^2` doubles exceed
/// `budget_bytes`.
pub fn distance_matrix_with_budget(matrix: &FeatureMatrix, budget_bytes: u128) -> Result<DistanceMatrix> {
    require_rows(matrix, 2)?;
    let m = matrix.rows();
    let needed = (m as u128) * (m as u128) * std::mem::size_of::<f64>() as u128;
    if needed > budget_bytes {
        return Err(Error::MemoryBudget { m, needed, budget: budget_bytes });
    }
    let n = matrix.cols();
    let values = matrix.values();
    let norms = kernel::row_norms(values, n);
    let tile = DEFAULT_TILE_ROWS.min(m);
    let mut entries = vec![0.0; m * m];
    entries.par_chunks_mut(tile * m).enumerate().for_each(|(t, out)| {
        let q0 = t * tile;
        let rows = out.len() / m;
        let queries: Vec<&[f64]> = (q0..q0 + rows).map(|i| matrix.row(i)).collect();
        let qnorms = &norms[q0..q0 + rows];
        let mut packed = Packed::new(values, n, &norms, 0, tile.min(m));
        let mut start = 0;
        while start < m {
            let len = tile.min(m - start);
            packed.repack(values, &norms, start, len);
            kernel::visit_block(&queries, qnorms, &packed, &mut |q, j, d| {
                out[q * m + j] = if q0 + q == j { 0.0 } else { d };
            });
            start += len;
        }
    });
    Ok(DistanceMatrix { m, entries })
}

/// Nearest distinct row for every row; ties go to the lowest index.
pub fn nearest_neighbors(distances: &DistanceMatrix) -> Result<NeighborAssignment> {
    let m = distances.m();
    if m < 2 {
        return Err(Error::InvalidArgument("need at least 2 rows".into()));
    }
    let (nearest_index, nearest_distance) = (0..m)
        .map(|i| {
            let mut best = (f64::INFINITY, usize::MAX);
            for (j, &d) in distances.row(i).iter().enumerate() {
                if j != i && d < best.0 {
                    best = (d, j);
                }
            }
            (best.1, best.0)
        })
        .unzip();
    Ok(NeighborAssignment { nearest_index, nearest_distance })
}

/// Minimum of a block row and its first lane. Padding lanes hold `+inf`, so
/// they never win against a live lane.
#[inline(always)]
pub(crate) fn row_min(row: &[f64; LANES]) -> (f64, usize) {
    let (mut v, mut at) = (row[0], 0);
    for (l, &x) in row.iter().enumerate().skip(1) {
        let lt = x < v;
        v = if lt { x } else { v };
        at = if lt { l } else { at };
    }
    (v, at)
}

/// Per-lane minimum over the block rows and the first row attaining it.
#[inline(always)]
fn column_min(d: &[[f64; LANES]]) -> ([f64; LANES], [usize; LANES]) {
    let mut v = d[0];
    let mut at = [0usize; LANES];
    for (r, row) in d.iter().enumerate().skip(1) {
        for l in 0..LANES {
            let lt = row[l] < v[l];
            v[l] = if lt { row[l] } else { v[l] };
            at[l] = if lt { r } else { at[l] };
        }
    }
    (v, at)
}

#[derive(Clone, Copy)]
struct Best {
    d: f64,
    j: usize,
}

impl Best {
    const NONE: Best = Best { d: f64::INFINITY, j: usize::MAX };

    #[inline]
    fn offer(&mut self, d: f64, j: usize) {
        if d < self.d || (d == self.d && j < self.j) {
            self.d = d;
            self.j = j;
        }
    }
}

/// Memory-bounded nearest neighbors. Visits each unordered pair of tiles once
/// and updates the running minima of both sides; partial minima from parallel
/// workers merge on `(distance, index)`, so the result is independent of
/// scheduling.
pub fn nearest_neighbors_tiled(matrix: &FeatureMatrix, tile_rows: usize) -> Result<NeighborAssignment> {
    require_rows(matrix, 2)?;
    let m = matrix.rows();
    if tile_rows == 0 || tile_rows > m {
        return Err(Error::InvalidArgument(format!("tile_rows must be in 1..={m}, got {tile_rows}")));
    }
    let n = matrix.cols();
    let values = matrix.values();
    let norms = kernel::row_norms(values, n);
    let n_tiles = m.div_ceil(tile_rows);
    let tile_range = |t: usize| {
        let s = t * tile_rows;
        (s, tile_rows.min(m - s))
    };

    let best = (0..n_tiles)
        .into_par_iter()
        .fold(
            || vec![Best::NONE; m],
            |mut best, ti| {
                let (qs, ql) = tile_range(ti);
                let queries: Vec<&[f64]> = (qs..qs + ql).map(|i| matrix.row(i)).collect();
                let qnorms = &norms[qs..qs + ql];
                let mut packed = Packed::new(values, n, &norms, qs, ql);
                for tj in ti..n_tiles {
                    let (rs, rl) = tile_range(tj);
                    if tj != ti {
                        packed.repack(values, &norms, rs, rl);
                    }
                    if tj == ti {
                        kernel::visit_block(&queries, qnorms, &packed, &mut |q, j, d| {
                            if qs + q != j {
                                best[qs + q].offer(d, j);
                            }
                        });
                    } else {
                        // Reduce each block to one candidate per query row and
                        // one per reference row; strict `<` keeps the lowest
                        // index among equal distances.
                        kernel::visit_blocks(&queries, qnorms, &packed, &mut |q0, j0, live, d| {
                            for (r, row) in d.iter().enumerate() {
                                let (v, l) = row_min(row);
                                best[qs + q0 + r].offer(v, j0 + l);
                            }
                            let (cmin, carg) = column_min(d);
                            for l in 0..live {
                                best[j0 + l].offer(cmin[l], qs + q0 + carg[l]);
                            }
                        });
                    }
                }
                best
            },
        )
        .reduce(
            || vec![Best::NONE; m],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x.offer(y.d, y.j);
                }
                a
            },
        );

    Ok(NeighborAssignment {
        nearest_index: best.iter().map(|b| b.j).collect(),
        nearest_distance: best.iter().map(|b| b.d).collect(),
    })
}

/// Nearest neighbor among all rows of `matrix` (excluding the row itself) for
/// each row listed in `queries`.
pub(crate) fn nearest_for_rows(matrix: &FeatureMatrix, queries: &[usize], tile_rows: usize) -> Vec<(usize, f64)> {
    let m = matrix.rows();
    let n = matrix.cols();
    let values = matrix.values();
    let norms = kernel::row_norms(values, n);
    let tile = tile_rows.clamp(1, m.max(1));
    queries
        .par_chunks(tile)
        .flat_map_iter(|chunk| {
            let rows: Vec<&[f64]> = chunk.iter().map(|&i| matrix.row(i)).collect();
            let qnorms: Vec<f64> = chunk.iter().map(|&i| norms[i]).collect();
            let mut best = vec![Best::NONE; chunk.len()];
            let mut packed = Packed::new(values, n, &norms, 0, tile.min(m));
            let mut start = 0;
            while start < m {
                let len = tile.min(m - start);
                packed.repack(values, &norms, start, len);
                kernel::visit_blocks(&rows, &qnorms, &packed, &mut |q0, j0, live, d| {
                    for (r, row) in d.iter().enumerate() {
                        let me = chunk[q0 + r];
                        let mut row = *row;
                        if (j0..j0 + live).contains(&me) {
                            row[me - j0] = f64::INFINITY;
                        }
                        let (v, l) = row_min(&row);
                        if j0 + l != me {
                            best[q0 + r].offer(v, j0 + l);
                        }
                    }
                });
                start += len;
            }
            best.into_iter().map(|b| (b.j, b.d))
        })
        .collect()
}

fn exact_result(matrix: &FeatureMatrix, nn: &NeighborAssignment) -> SiResult {
    let labels = matrix.labels();
    let matched = nn.nearest_index.iter().enumerate().filter(|&(i, &j)| labels[i] == labels[j]).count();
    let m = matrix.rows();
    SiResult {
        value: matched as f64 / m as f64,
        matched_count: matched,
        m,
        estimator: EstimatorKind::Exact,
        standard_error: 0.0,
        sample_size: m,
        seed: None,
    }
}

/// Exact SI through the full distance matrix (default 4 GiB budget).
pub fn separation_index(matrix: &FeatureMatrix) -> Result<SiResult> {
    separation_index_with_budget(matrix, DEFAULT_MEMORY_BUDGET)
}

pub fn separation_index_with_budget(matrix: &FeatureMatrix, budget_bytes: u128) -> Result<SiResult> {
    require_rows(matrix, 2)?;
    require_classes(matrix)?;
    let d = distance_matrix_with_budget(matrix, budget_bytes)?;
    let nn = nearest_neighbors(&d)?;
    Ok(exact_result(matrix, &nn))
}

/// Exact SI through the tiled kernel.
pub fn separation_index_tiled(matrix: &FeatureMatrix, tile_rows: usize) -> Result<SiResult> {
    require_rows(matrix, 2)?;
    require_classes(matrix)?;
    let nn = nearest_neighbors_tiled(matrix, tile_rows)?;
    Ok(exact_result(matrix, &nn))
}

/// Unbiased SI estimate from `sample_size` reference rows drawn uniformly
/// without replacement. Each sampled row still searches all `m` rows.
pub fn separation_index_sampled(matrix: &FeatureMatrix, sample_size: usize, seed: u64) -> Result<SiResult> {
    require_rows(matrix, 2)?;
    require_classes(matrix)?;
    let m = matrix.rows();
    if sample_size < 2 || sample_size > m {
        return Err(Error::InvalidArgument(format!("sample_size must be in 2..={m}, got {sample_size}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = rand::seq::index::sample(&mut rng, m, sample_size).into_vec();
    sample.sort_unstable();
    let nn = nearest_for_rows(matrix, &sample, DEFAULT_TILE_ROWS);
    let labels = matrix.labels();
    let matched = sample.iter().zip(&nn).filter(|&(&i, &(j, _))| labels[i] == labels[j]).count();
    let value = matched as f64 / sample_size as f64;
    Ok(SiResult {
        value,
        matched_count: matched,
        m,
        estimator: EstimatorKind::Sampled,
        standard_error: (value * (1.0 - value) / sample_size as f64).sqrt(),
        sample_size,
        seed: Some(seed),
    })
}
