//! Assembles indicator columns, lagged copies and targets into a
//! [`LabeledFrame`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::candles::CandleSeries;
use crate::features::indicators::{self as ind, EmaSeed, Indicator, MaKind};
use crate::features::labels::{bucket_magnitude, close_changes, direction_of, BucketThresholds, LabeledFrame};
use crate::features::lags::{lag_name, shift};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnorsParams {
    pub rsi: usize,
    pub streak: usize,
    pub rank: usize,
}

impl Default for ConnorsParams {
    fn default() -> Self {
        ConnorsParams { rsi: 3, streak: 2, rank: 100 }
    }
}

/// Parameters for every indicator column. Only `safe_dump_threshold` has no
/// default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorConfig {
    #[serde(default = "d::ema_periods")]
    pub ema_periods: Vec<usize>,
    #[serde(default)]
    pub ema_seed: EmaSeed,
    #[serde(default = "d::cti_periods")]
    pub cti_periods: Vec<usize>,
    #[serde(default)]
    pub crsi: ConnorsParams,
    /// The second default follows the `R_480` column name; the table text
    /// says 40. Either works.
    #[serde(default = "d::willr_periods")]
    pub willr_periods: Vec<usize>,
    #[serde(default = "d::one")]
    pub roc_period: usize,
    #[serde(default = "d::rsi")]
    pub rsi_period: usize,
    #[serde(default = "d::cmf")]
    pub cmf_period: usize,
    #[serde(default = "d::five")]
    pub t3_period: usize,
    #[serde(default = "d::t3_vf")]
    pub t3_volume_factor: f64,
    #[serde(default = "d::five")]
    pub ewo_fast: usize,
    #[serde(default = "d::ewo_slow")]
    pub ewo_slow: usize,
    #[serde(default)]
    pub ewo_ma: MaKind,
    #[serde(default = "d::five")]
    pub pct_change_window: usize,
    #[serde(default = "d::five")]
    pub low_window: usize,
    #[serde(default = "d::one")]
    pub low_shift: usize,
    #[serde(default = "d::vwap")]
    pub vwap_window: usize,
    pub safe_dump_threshold: f64,
}

mod d {
    pub fn ema_periods() -> Vec<usize> {
        vec![8, 50, 100, 200]
    }
    pub fn cti_periods() -> Vec<usize> {
        vec![12, 40]
    }
    pub fn willr_periods() -> Vec<usize> {
        vec![96, 480]
    }
    pub fn one() -> usize {
        1
    }
    pub fn five() -> usize {
        5
    }
    pub fn rsi() -> usize {
        14
    }
    pub fn cmf() -> usize {
        20
    }
    pub fn t3_vf() -> f64 {
        0.7
    }
    pub fn ewo_slow() -> usize {
        35
    }
    pub fn vwap() -> usize {
        14
    }
    pub fn lags() -> Vec<usize> {
        vec![1]
    }
    pub fn yes() -> bool {
        true
    }
    pub fn max_gap() -> i64 {
        crate::features::candles::DEFAULT_MAX_GAP_MINUTES
    }
}

impl IndicatorConfig {
    pub fn with_threshold(safe_dump_threshold: f64) -> Self {
        serde_json::from_value(serde_json::json!({ "safe_dump_threshold": safe_dump_threshold }))
            .expect("defaults deserialize")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_owned()));
        let periods = self.ema_periods.iter().chain(&self.willr_periods).chain(&self.cti_periods).chain([
            &self.roc_period,
            &self.rsi_period,
            &self.cmf_period,
            &self.t3_period,
            &self.ewo_fast,
            &self.pct_change_window,
            &self.low_window,
            &self.vwap_window,
            &self.crsi.rsi,
            &self.crsi.streak,
            &self.crsi.rank,
        ]);
        for &p in periods {
            if p == 0 {
                return bad("indicator periods must be >= 1");
            }
        }
        if self.cti_periods.iter().any(|&p| p < 2) {
            return bad("cti periods must be >= 2");
        }
        if self.ewo_fast >= self.ewo_slow {
            return bad("ewo_fast must be below ewo_slow");
        }
        if !(self.t3_volume_factor > 0.0 && self.t3_volume_factor <= 1.0) {
            return bad("t3_volume_factor must be in (0, 1]");
        }
        if !self.safe_dump_threshold.is_finite() {
            return bad("safe_dump_threshold must be finite");
        }
        Ok(())
    }
}

/// Everything between raw bars and the labelled matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    pub indicators: IndicatorConfig,
    #[serde(default = "d::yes")]
    pub include_ohlcv: bool,
    /// Keep only these base columns (before lagging); `None` keeps all.
    #[serde(default)]
    pub columns: Option<Vec<String>>,
    #[serde(default = "d::lags")]
    pub lags: Vec<usize>,
    #[serde(default = "d::max_gap")]
    pub max_gap_minutes: i64,
}

impl FeatureConfig {
    pub fn new(indicators: IndicatorConfig) -> Self {
        FeatureConfig { indicators, include_ohlcv: true, columns: None, lags: d::lags(), max_gap_minutes: d::max_gap() }
    }

    pub fn validate(&self) -> Result<()> {
        self.indicators.validate()?;
        if self.lags.contains(&0) {
            return Err(Error::Config("lags must be >= 1".into()));
        }
        if self.max_gap_minutes < 0 {
            return Err(Error::Config("max_gap_minutes must be >= 0".into()));
        }
        Ok(())
    }
}

/// Named, possibly undefined columns aligned with the bars.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub columns: Vec<Vec<Option<f64>>>,
}

impl FeatureTable {
    fn push(&mut self, name: impl Into<String>, values: Vec<Option<f64>>) {
        self.names.push(name.into());
        self.columns.push(values);
    }

    fn push_indicator(&mut self, name: impl Into<String>, ind: Indicator) {
        self.push(name, ind.values)
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.names.iter().position(|n| n == name).map(|j| self.columns[j].as_slice())
    }
}

/// All configured indicator columns plus (optionally) raw OHLCV.
pub fn indicator_table(series: &CandleSeries, cfg: &FeatureConfig) -> Result<FeatureTable> {
    cfg.validate()?;
    let c = &cfg.indicators;
    let (open, high, low, close, volume) =
        (series.open(), series.high(), series.low(), series.close(), series.volume());
    let ts = series.timestamps();
    let mut t = FeatureTable::default();
    if cfg.include_ohlcv {
        for (name, col) in [("open", &open), ("high", &high), ("low", &low), ("close", &close), ("volume", &volume)] {
            t.push(name, col.iter().copied().map(Some).collect());
        }
    }
    let lifted: Vec<Option<f64>> = close.iter().copied().map(Some).collect();
    for &p in &c.ema_periods {
        t.push_indicator(format!("ema_{p}"), ind::ema_with(&lifted, p, c.ema_seed));
    }
    for &p in &c.cti_periods {
        t.push_indicator(format!("cti_{p}"), ind::cti(&close, p));
    }
    t.push_indicator("crsi", ind::connors_rsi(&close, c.crsi.rsi, c.crsi.streak, c.crsi.rank));
    for &p in &c.willr_periods {
        t.push_indicator(format!("r_{p}"), ind::williams_r(&high, &low, &close, p));
    }
    let h1 = ind::hourly_pct_change_max(&ts, &close, c.pct_change_window);
    let dump = ind::safe_dump(&h1.values, c.safe_dump_threshold);
    t.push_indicator(format!("h1_prc_change_{}", c.pct_change_window), h1);
    t.push_indicator("roc", ind::roc(&close, c.roc_period));
    t.push_indicator("rsi", ind::rsi(&close, c.rsi_period));
    t.push_indicator("cmf", ind::cmf(&high, &low, &close, &volume, c.cmf_period));
    t.push_indicator("t3", ind::t3(&close, c.t3_period, c.t3_volume_factor));
    t.push_indicator("ewo", ind::ewo(&close, c.ewo_fast, c.ewo_slow, c.ewo_ma));
    t.push_indicator(format!("low_{}", c.low_window), ind::rolling_low(&low, c.low_window, c.low_shift));
    t.push_indicator("safe_dump", dump);
    t.push_indicator("weighted_price", ind::vwap(&high, &low, &close, &volume, c.vwap_window));

    if let Some(keep) = &cfg.columns {
        let mut filtered = FeatureTable::default();
        for name in keep {
            let col = t.column(name).ok_or_else(|| Error::UnknownColumn(name.clone()))?;
            filtered.push(name.clone(), col.to_vec());
        }
        t = filtered;
    }
    if t.names.is_empty() {
        return Err(Error::Config("feature roster is empty".into()));
    }
    Ok(t)
}

/// Row bookkeeping for a built frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub bars: usize,
    pub rows: usize,
    pub base_columns: Vec<String>,
    pub columns: usize,
    /// Rows dropped because some column was undefined (warm-up or flagged).
    pub dropped_undefined: usize,
    /// The final bar, which has no next close.
    pub dropped_unlabeled: usize,
    pub train_rows: usize,
    pub thresholds: BucketThresholds,
    pub bin_edges: [f64; 9],
}

/// Builds the labelled frame: indicator columns, lagged copies, next-minute
/// targets. Rows with any undefined value are dropped (never back-filled).
/// Magnitude thresholds come from the first `train_fraction` of surviving rows.
pub fn build_frame(
    series: &CandleSeries,
    cfg: &FeatureConfig,
    train_fraction: f64,
) -> Result<(LabeledFrame, FrameReport)> {
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::Config(format!("train fraction must be in (0, 1], got {train_fraction}")));
    }
    if series.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 bars".into()));
    }
    let base = indicator_table(series, cfg)?;
    let mut table = base.clone();
    for &k in &cfg.lags {
        for (name, col) in base.names.iter().zip(&base.columns) {
            table.push(lag_name(name, k), shift(col, k));
        }
    }

    let changes = close_changes(&series.close());
    let kept: Vec<usize> = (0..changes.len()).filter(|&t| table.columns.iter().all(|c| c[t].is_some())).collect();
    if kept.is_empty() {
        return Err(Error::Empty(format!(
            "no complete rows: {} bars are too few for the configured lookbacks",
            series.len()
        )));
    }
    let train_rows = ((kept.len() as f64) * train_fraction).floor().max(1.0) as usize;
    let train_changes: Vec<f64> = kept[..train_rows].iter().map(|&t| changes[t]).collect();
    let thresholds = BucketThresholds::fit(&train_changes)?;

    let n = table.names.len();
    let mut values = Vec::with_capacity(kept.len() * n);
    for &t in &kept {
        values.extend(table.columns.iter().map(|c| c[t].unwrap()));
    }
    let close_change: Vec<f64> = kept.iter().map(|&t| changes[t]).collect();
    let direction: Vec<u32> = close_change.iter().map(|&c| direction_of(c)).collect();
    let magnitude = bucket_magnitude(&close_change, &thresholds);
    let features = FeatureMatrix::with_classes(values, table.names.clone(), direction.clone(), 2)?;
    let ts = series.timestamps();
    let frame = LabeledFrame {
        features,
        timestamps: kept.iter().map(|&t| ts[t]).collect(),
        direction,
        magnitude,
        close_change,
        thresholds,
    };
    let report = FrameReport {
        bars: series.len(),
        rows: kept.len(),
        base_columns: base.names,
        columns: n,
        dropped_undefined: changes.len() - kept.len(),
        dropped_unlabeled: 1,
        train_rows,
        thresholds,
        bin_edges: thresholds.edges(),
    };
    Ok((frame, report))
}

/// Writes the frame as CSV: `timestamp`, feature columns, `label`,
/// `magnitude_class`.
pub fn write_frame_csv<W: std::io::Write>(frame: &LabeledFrame, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["timestamp".to_owned()];
    header.extend(frame.features.column_names().iter().cloned());
    header.push("label".into());
    header.push("magnitude_class".into());
    wtr.write_record(&header)?;
    for i in 0..frame.rows() {
        let mut rec = vec![frame.timestamps[i].to_string()];
        rec.extend(frame.features.row(i).iter().map(|v| v.to_string()));
        rec.push(frame.direction[i].to_string());
        rec.push(frame.magnitude[i].to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::candles::{Candle, MINUTE_MS};

    fn walk(n: usize) -> CandleSeries {
        let mut c = 100.0;
        let bars = (0..n)
            .map(|i| {
                let open = c;
                c += ((i * 7919 % 13) as f64 - 6.0) * 0.1;
                Candle {
                    timestamp: i as i64 * MINUTE_MS,
                    open,
                    high: open.max(c) + 0.2,
                    low: open.min(c) - 0.2,
                    close: c,
                    volume: 1.0 + (i % 5) as f64,
                }
            })
            .collect();
        CandleSeries::from_bars(bars)
    }

    #[test]
    fn default_roster_has_ohlcv_plus_eighteen() {
        let cfg = FeatureConfig::new(IndicatorConfig::with_threshold(0.05));
        let t = indicator_table(&walk(50), &cfg).unwrap();
        assert_eq!(t.names.len(), 5 + 18);
    }

    #[test]
    fn lagged_frame_shape_and_drop_accounting() {
        let mut cfg = FeatureConfig::new(IndicatorConfig::with_threshold(0.05));
        cfg.lags = vec![1, 2, 3];
        cfg.columns = Some(vec!["close".into(), "roc".into(), "rsi".into()]);
        let (frame, rep) = build_frame(&walk(200), &cfg, 0.7).unwrap();
        assert_eq!(frame.features.cols(), 3 * 4);
        // rsi(14) is defined from bar 14; lag 3 pushes the first complete row to 17.
        assert_eq!(rep.dropped_undefined, 17);
        assert_eq!(rep.rows, 199 - 17);
        assert_eq!(frame.timestamps[0], 17 * MINUTE_MS);
        assert!(frame.direction.iter().zip(&frame.magnitude).all(|(&d, &m)| (d == 0) == (m <= 4)));
    }

    #[test]
    fn zero_period_rejected_before_computing() {
        let mut cfg = FeatureConfig::new(IndicatorConfig::with_threshold(0.05));
        cfg.indicators.rsi_period = 0;
        assert!(matches!(indicator_table(&walk(10), &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn threshold_is_required() {
        let err = serde_json::from_str::<IndicatorConfig>("{}").unwrap_err();
        assert!(err.to_string().contains("safe_dump_threshold"));
    }

    #[test]
    fn deterministic() {
        let cfg = FeatureConfig::new(IndicatorConfig::with_threshold(0.01));
        let a = build_frame(&walk(700), &cfg, 0.7).unwrap();
        let b = build_frame(&walk(700), &cfg, 0.7).unwrap();
        assert_eq!(a, b);
    }
}
