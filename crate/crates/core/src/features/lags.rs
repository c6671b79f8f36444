use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

pub fn lag_name(column: &str, lag: usize) -> String {
    format!("{column}_lag{lag}")
}

fn check_lags(lags: &[usize]) -> Result<usize> {
    if lags.is_empty() {
        return Err(Error::InvalidArgument("lag list is empty".into()));
    }
    if lags.contains(&0) {
        return Err(Error::InvalidArgument("lags must be >= 1".into()));
    }
    Ok(*lags.iter().max().unwrap())
}

/// Appends `c_lag{k}` (column `c` shifted down `k` rows) for every lag `k` and
/// every input column, then drops the first `max(lags)` rows. Labels follow
/// the surviving rows.
pub fn build_lags(matrix: &FeatureMatrix, lags: &[usize]) -> Result<FeatureMatrix> {
    let max_lag = check_lags(lags)?;
    let (m, n) = (matrix.rows(), matrix.cols());
    if m <= max_lag {
        return Err(Error::InvalidArgument(format!("{m} rows cannot supply a lag of {max_lag}")));
    }
    let mut names = matrix.column_names().to_vec();
    for &k in lags {
        names.extend(matrix.column_names().iter().map(|c| lag_name(c, k)));
    }
    let mut values = Vec::with_capacity((m - max_lag) * n * (1 + lags.len()));
    for t in max_lag..m {
        values.extend_from_slice(matrix.row(t));
        for &k in lags {
            values.extend_from_slice(matrix.row(t - k));
        }
    }
    FeatureMatrix::with_classes(values, names, matrix.labels()[max_lag..].to_vec(), matrix.n_classes())
}

/// `values` delayed by `lag` positions; the first `lag` entries are undefined.
pub fn shift(values: &[Option<f64>], lag: usize) -> Vec<Option<f64>> {
    (0..values.len()).map(|t| if t >= lag { values[t - lag] } else { None }).collect()
}
