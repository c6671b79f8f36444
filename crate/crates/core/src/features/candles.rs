//! Minute OHLCV bars: CSV ingestion and gap repair.

use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MINUTE_MS: i64 = 60_000;
pub const DEFAULT_MAX_GAP_MINUTES: i64 = 120;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candle {
    /// Epoch milliseconds.
    pub timestamp: i64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl Candle {
    pub fn is_consistent(&self) -> bool {
        let fields = [self.open, self.high, self.low, self.close, self.volume];
        fields.iter().all(|v| v.is_finite())
            && self.low <= self.open.min(self.close)
            && self.open.max(self.close) <= self.high
            && self.volume >= 0.0
    }
}

/// Timestamp-ordered bars.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CandleSeries {
    pub bars: Vec<Candle>,
}

impl CandleSeries {
    /// Sorts by timestamp (stable) and collapses duplicate timestamps to their
    /// last occurrence.
    pub fn from_bars(mut bars: Vec<Candle>) -> Self {
        bars.sort_by_key(|b| b.timestamp);
        let mut out: Vec<Candle> = Vec::with_capacity(bars.len());
        for b in bars {
            match out.last_mut() {
                Some(last) if last.timestamp == b.timestamp => *last = b,
                _ => out.push(b),
            }
        }
        CandleSeries { bars: out }
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn timestamps(&self) -> Vec<i64> {
        self.bars.iter().map(|b| b.timestamp).collect()
    }

    pub fn open(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.open).collect()
    }

    pub fn high(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.high).collect()
    }

    pub fn low(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.low).collect()
    }

    pub fn close(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    pub fn volume(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.volume).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["timestamp", "open", "high", "low", "close", "volume"])?;
        for b in &self.bars {
            wtr.write_record(&[
                b.timestamp.to_string(),
                b.open.to_string(),
                b.high.to_string(),
                b.low.to_string(),
                b.close.to_string(),
                b.volume.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TimeFormat {
    EpochMillis,
    Iso8601,
}

fn detect_format(raw: &str) -> TimeFormat {
    if raw.parse::<i64>().is_ok() {
        TimeFormat::EpochMillis
    } else {
        TimeFormat::Iso8601
    }
}

fn parse_iso(raw: &str) -> Option<i64> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.timestamp_millis());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(dt.and_utc().timestamp_millis());
        }
    }
    None
}

const HEADER: [&str; 6] = ["timestamp", "open", "high", "low", "close", "volume"];

/// Reads `timestamp,open,high,low,close,volume` rows. Timestamps are either all
/// epoch milliseconds or all ISO-8601 (naive times are UTC).
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<CandleSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_candles(file)
}

pub fn read_candles<R: std::io::Read>(reader: R) -> Result<CandleSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = HEADER
        .iter()
        .map(|h| {
            headers.iter().position(|c| c.eq_ignore_ascii_case(h)).ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("missing column `{h}`; expected header {}", HEADER.join(",")),
            })
        })
        .collect::<Result<_>>()?;

    let mut format = None;
    let mut bars = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let field = |c: usize| record.get(idx[c]).unwrap_or("");
        let raw_ts = field(0);
        let this = detect_format(raw_ts);
        let fmt = *format.get_or_insert(this);
        if fmt != this {
            return Err(Error::Parse {
                line,
                message: format!("timestamp `{raw_ts}` does not match the file's {fmt:?} format"),
            });
        }
        let timestamp = match fmt {
            TimeFormat::EpochMillis => raw_ts.parse::<i64>().ok(),
            TimeFormat::Iso8601 => parse_iso(raw_ts),
        }
        .ok_or_else(|| Error::Parse { line, message: format!("bad timestamp `{raw_ts}`") })?;
        let num = |c: usize| -> Result<f64> {
            let raw = field(c);
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse { line, message: format!("{}: bad number `{raw}`", HEADER[c]) })
        };
        let bar = Candle { timestamp, open: num(1)?, high: num(2)?, low: num(3)?, close: num(4)?, volume: num(5)? };
        if !bar.is_consistent() {
            return Err(Error::InvalidBar {
                line,
                message: format!("o={} h={} l={} c={} v={}", bar.open, bar.high, bar.low, bar.close, bar.volume),
            });
        }
        bars.push(bar);
    }
    Ok(CandleSeries::from_bars(bars))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilledRange {
    /// Timestamp of the real bar before the gap.
    pub after: i64,
    /// Timestamp of the real bar after the gap.
    pub before: i64,
    pub inserted: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RepairReport {
    pub filled: Vec<FilledRange>,
    pub inserted_total: usize,
}

/// Fills every missing minute by linear interpolation of open/high/low/close
/// between the neighbouring real bars; synthetic bars carry zero volume.
pub fn repair_gaps(series: &CandleSeries, max_gap_minutes: i64) -> Result<(CandleSeries, RepairReport)> {
    if series.len() < 2 {
        return Err(Error::InvalidArgument("gap repair needs at least 2 bars".into()));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut report = RepairReport::default();
    out.push(series.bars[0]);
    for w in series.bars.windows(2) {
        let (a, b) = (w[0], w[1]);
        let delta = b.timestamp - a.timestamp;
        if delta <= 0 || delta % MINUTE_MS != 0 {
            return Err(Error::InvalidArgument(format!(
                "bars at {} and {} are not whole minutes apart",
                a.timestamp, b.timestamp
            )));
        }
        let steps = delta / MINUTE_MS;
        let missing = steps - 1;
        if missing > max_gap_minutes {
            return Err(Error::GapTooLong { after: a.timestamp, missing, max_gap: max_gap_minutes });
        }
        for s in 1..steps {
            let t = s as f64 / steps as f64;
            let lerp = |x: f64, y: f64| x + (y - x) * t;
            out.push(Candle {
                timestamp: a.timestamp + s * MINUTE_MS,
                open: lerp(a.open, b.open),
                high: lerp(a.high, b.high),
                low: lerp(a.low, b.low),
                close: lerp(a.close, b.close),
                volume: 0.0,
            });
        }
        if missing > 0 {
            report.filled.push(FilledRange { after: a.timestamp, before: b.timestamp, inserted: missing as usize });
            report.inserted_total += missing as usize;
        }
        out.push(b);
    }
    Ok((CandleSeries { bars: out }, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bar(ts: i64, close: f64) -> Candle {
        Candle { timestamp: ts, open: close, high: close + 1.0, low: close - 1.0, close, volume: 5.0 }
    }

    #[test]
    fn happy_path() {
        let csv =
            "timestamp,open,high,low,close,volume\n0,1,2,0.5,1.5,10\n60000,1.5,2,1,1.8,3\n120000,1.8,1.9,1.7,1.7,0\n";
        let s = read_candles(csv.as_bytes()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.close(), vec![1.5, 1.8, 1.7]);
    }

    #[test]
    fn out_of_order_rows_sorted_and_duplicates_keep_last() {
        let csv = "timestamp,open,high,low,close,volume\n120000,1,1,1,1,1\n0,2,2,2,2,1\n60000,3,3,3,3,1\n0,4,4,4,4,1\n";
        let s = read_candles(csv.as_bytes()).unwrap();
        assert_eq!(s.timestamps(), vec![0, 60000, 120000]);
        assert_eq!(s.close(), vec![4.0, 3.0, 1.0]);
    }

    #[test]
    fn high_below_low_rejected_with_line() {
        let csv = "timestamp,open,high,low,close,volume\n0,1,2,0.5,1.5,10\n60000,1.5,1,2,1.5,3\n";
        let err = read_candles(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::InvalidBar { line: 3, .. }), "{err}");
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = "timestamp,open,high,low,close,volume\n0,1,2,0.5,1.5,10\n60000,x,1,2,1.5,3\n";
        assert!(matches!(read_candles(csv.as_bytes()).unwrap_err(), Error::Parse { line: 3, .. }));
    }

    #[test]
    fn iso_timestamps_and_mixed_formats() {
        let csv =
            "timestamp,open,high,low,close,volume\n2021-01-01T00:00:00Z,1,1,1,1,1\n2021-01-01 00:01:00,1,1,1,1,1\n";
        let s = read_candles(csv.as_bytes()).unwrap();
        assert_eq!(s.bars[1].timestamp - s.bars[0].timestamp, MINUTE_MS);
        let mixed = "timestamp,open,high,low,close,volume\n2021-01-01T00:00:00Z,1,1,1,1,1\n1609459260000,1,1,1,1,1\n";
        assert!(matches!(read_candles(mixed.as_bytes()).unwrap_err(), Error::Parse { line: 3, .. }));
    }

    #[test]
    fn midpoint_interpolation() {
        let s = CandleSeries::from_bars(vec![bar(0, 100.0), bar(2 * MINUTE_MS, 102.0)]);
        let (r, report) = repair_gaps(&s, DEFAULT_MAX_GAP_MINUTES).unwrap();
        assert_eq!(r.close(), vec![100.0, 101.0, 102.0]);
        assert_eq!(r.bars[1].volume, 0.0);
        assert_eq!(report.filled, vec![FilledRange { after: 0, before: 2 * MINUTE_MS, inserted: 1 }]);
    }

    #[test]
    fn no_gaps_is_identity() {
        let s = CandleSeries::from_bars((0..5).map(|i| bar(i * MINUTE_MS, i as f64)).collect());
        let (r, report) = repair_gaps(&s, 10).unwrap();
        assert_eq!(r, s);
        assert!(report.filled.is_empty());
    }

    #[test]
    fn three_minute_gap() {
        let s = CandleSeries::from_bars(vec![bar(0, 100.0), bar(3 * MINUTE_MS, 106.0)]);
        let (r, _) = repair_gaps(&s, 10).unwrap();
        // Independent oracle: close(t) = 100 + 6 * t / 3.
        let oracle: Vec<f64> = (0..4).map(|t| 100.0 + 6.0 * t as f64 / 3.0).collect();
        assert_eq!(r.close(), oracle);
        assert!(r.bars.iter().all(Candle::is_consistent));
    }

    #[test]
    fn overlong_gap_is_an_error() {
        let s = CandleSeries::from_bars(vec![bar(0, 1.0), bar(200 * MINUTE_MS, 1.0)]);
        assert!(matches!(repair_gaps(&s, 120), Err(Error::GapTooLong { missing: 199, .. })));
    }
}
