//! Labeled feature matrices, CSV round-tripping and per-column scaling.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of `m` data points by `n` features, with one class
/// label per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    labels: Vec<u32>,
    column_names: Vec<String>,
    n_rows: usize,
    n_classes: u32,
}

impl FeatureMatrix {
    /// Builds a matrix from row-major `values`. The class count is inferred as
    /// `max(label) + 1` (at least 2).
    pub fn new(values: Vec<f64>, column_names: Vec<String>, labels: Vec<u32>) -> Result<Self> {
        let n_classes = labels.iter().copied().max().map_or(2, |l| (l + 1).max(2));
        Self::with_classes(values, column_names, labels, n_classes)
    }

    pub fn with_classes(values: Vec<f64>, column_names: Vec<String>, labels: Vec<u32>, n_classes: u32) -> Result<Self> {
        let n = column_names.len();
        if n == 0 {
            return Err(Error::Empty("feature matrix has no columns".into()));
        }
        if values.len() != labels.len() * n {
            return Err(Error::Shape(format!(
                "{} values do not fill {} rows x {} columns",
                values.len(),
                labels.len(),
                n
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / n, column: column_names[pos % n].clone() });
        }
        for (row, &label) in labels.iter().enumerate() {
            if label >= n_classes {
                return Err(Error::LabelOutOfRange { row, label, n_classes });
            }
        }
        Ok(FeatureMatrix { values, n_rows: labels.len(), labels, column_names, n_classes })
    }

    /// Convenience constructor from nested rows with generated column names
    /// `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u32>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let names = (0..n).map(|j| format!("x{j}")).collect();
        Self::new(rows.concat(), names, labels)
    }

    pub fn rows(&self) -> usize {
        self.n_rows
    }

    pub fn cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.cols();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Number of distinct labels actually present.
    pub fn distinct_labels(&self) -> usize {
        self.labels.iter().collect::<HashSet<_>>().len()
    }

    /// Keeps the given columns, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(Error::Empty("column selection is empty".into()));
        }
        let n = self.cols();
        if let Some(&bad) = idx.iter().find(|&&j| j >= n) {
            return Err(Error::InvalidArgument(format!("column index {bad} out of range")));
        }
        let mut values = Vec::with_capacity(self.n_rows * idx.len());
        for i in 0..self.n_rows {
            let row = self.row(i);
            values.extend(idx.iter().map(|&j| row[j]));
        }
        let names = idx.iter().map(|&j| self.column_names[j].clone()).collect();
        Self::with_classes(values, names, self.labels.clone(), self.n_classes)
    }

    pub fn select_columns_by_name<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|c| self.column_index(c.as_ref()).ok_or_else(|| Error::UnknownColumn(c.as_ref().to_owned())))
            .collect::<Result<Vec<_>>>()?;
        self.select_columns(&idx)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.cols());
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            values,
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            column_names: self.column_names.clone(),
            n_rows: idx.len(),
            n_classes: self.n_classes,
        }
    }

    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> Self {
        let idx: Vec<usize> = range.collect();
        self.select_rows(&idx)
    }

    /// Same features, different labels.
    pub fn with_labels(&self, labels: Vec<u32>, n_classes: u32) -> Result<Self> {
        Self::with_classes(self.values.clone(), self.column_names.clone(), labels, n_classes)
    }

    /// Appends `other`'s columns to the right of `self`.
    pub fn hstack(&self, other: &FeatureMatrix) -> Result<Self> {
        if self.n_rows != other.n_rows {
            return Err(Error::Shape(format!("{} rows vs {} rows", self.n_rows, other.n_rows)));
        }
        let mut values = Vec::with_capacity(self.values.len() + other.values.len());
        for i in 0..self.n_rows {
            values.extend_from_slice(self.row(i));
            values.extend_from_slice(other.row(i));
        }
        let mut names = self.column_names.clone();
        names.extend(other.column_names.iter().cloned());
        Self::with_classes(values, names, self.labels.clone(), self.n_classes)
    }

    /// Reads a CSV with a header row. The `label` column holds class labels,
    /// every other column is a numeric feature.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv_with(path, &CsvLayout::default())
    }

    pub fn read_csv_with(path: impl AsRef<Path>, layout: &CsvLayout) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, layout)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R, layout: &CsvLayout) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let label_idx = headers
            .iter()
            .position(|h| h == layout.label_column)
            .ok_or_else(|| Error::UnknownColumn(layout.label_column.clone()))?;
        let feature_idx: Vec<usize> = (0..headers.len())
            .filter(|&j| j != label_idx && !layout.exclude.iter().any(|e| e == &headers[j]))
            .collect();
        let names: Vec<String> = feature_idx.iter().map(|&j| headers[j].to_owned()).collect();
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (k, record) in rdr.records().enumerate() {
            let line = k + 2;
            let record = record?;
            let parse = |j: usize| -> Result<f64> {
                let field = record.get(j).unwrap_or("");
                field.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("column `{}`: cannot parse `{field}` as a number", &headers[j]),
                })
            };
            for &j in &feature_idx {
                values.push(parse(j)?);
            }
            let raw = record.get(label_idx).unwrap_or("");
            let label = raw.parse::<f64>().ok().filter(|v| *v >= 0.0 && v.fract() == 0.0).ok_or_else(|| {
                Error::Parse { line, message: format!("label `{raw}` is not a non-negative integer") }
            })?;
            labels.push(label as u32);
        }
        Self::new(values, names, labels)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_csv_writer(file)
    }

    pub fn to_csv_writer<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.column_names.iter().map(String::as_str).collect();
        header.push("label");
        wtr.write_record(&header)?;
        for i in 0..self.n_rows {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(self.labels[i].to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Which CSV columns carry labels and which to ignore.
#[derive(Debug, Clone)]
pub struct CsvLayout {
    pub label_column: String,
    pub exclude: Vec<String>,
}

impl Default for CsvLayout {
    fn default() -> Self {
        CsvLayout { label_column: "label".into(), exclude: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    MinMax,
    ZScore,
    None,
}

impl std::str::FromStr for Normalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" => Ok(Normalization::MinMax),
            "zscore" => Ok(Normalization::ZScore),
            "none" => Ok(Normalization::None),
            other => Err(Error::InvalidArgument(format!("unknown normalization `{other}`"))),
        }
    }
}

/// Per-column affine map `(x - offset) / scale` fitted on one matrix and
/// reusable on held-out rows. A zero scale marks a constant column, which maps
/// to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub method: Normalization,
    pub column_names: Vec<String>,
    pub offsets: Vec<f64>,
    pub scales: Vec<f64>,
    /// Columns that were constant when fitted.
    pub warnings: Vec<String>,
}

impl Scaling {
    pub fn fit(matrix: &FeatureMatrix, method: Normalization) -> Result<Self> {
        let (m, n) = (matrix.rows(), matrix.cols());
        if m == 0 {
            return Err(Error::Empty("cannot normalize an empty matrix".into()));
        }
        let mut offsets = vec![0.0; n];
        let mut scales = vec![1.0; n];
        let mut warnings = Vec::new();
        for j in 0..n {
            let col = matrix.column(j);
            let (offset, scale) = match method {
                Normalization::None => (0.0, 1.0),
                Normalization::MinMax => {
                    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi - lo)
                }
                Normalization::ZScore => {
                    let mean = col.iter().sum::<f64>() / m as f64;
                    let var =
                        if m > 1 { col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64 } else { 0.0 };
                    (mean, var.sqrt())
                }
            };
            if method != Normalization::None && scale <= 0.0 {
                warnings.push(matrix.column_names()[j].clone());
                scales[j] = 0.0;
            } else {
                scales[j] = scale;
            }
            offsets[j] = offset;
        }
        Ok(Scaling { method, column_names: matrix.column_names().to_vec(), offsets, scales, warnings })
    }

    pub fn apply(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        if matrix.column_names() != self.column_names.as_slice() {
            return Err(Error::Shape(format!(
                "scaling fitted on columns {:?}, got {:?}",
                self.column_names,
                matrix.column_names()
            )));
        }
        let n = matrix.cols();
        let values = matrix
            .values()
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let j = k % n;
                if self.scales[j] == 0.0 {
                    0.0
                } else {
                    (v - self.offsets[j]) / self.scales[j]
                }
            })
            .collect();
        FeatureMatrix::with_classes(values, self.column_names.clone(), matrix.labels().to_vec(), matrix.n_classes())
    }
}

/// Fits a per-column scaling on `matrix` and applies it.
pub fn normalize(matrix: &FeatureMatrix, method: Normalization) -> Result<(FeatureMatrix, Scaling)> {
    let scaling = Scaling::fit(matrix, method)?;
    let out = scaling.apply(matrix)?;
    Ok((out, scaling))
}
