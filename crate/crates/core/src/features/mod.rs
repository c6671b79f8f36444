//! Minute-bar ingestion, technical indicators, lagging and labelling.

pub mod candles;
pub mod indicators;
pub mod labels;
pub mod lags;
pub mod pipeline;

pub use candles::{ingest_csv, read_candles, repair_gaps, Candle, CandleSeries, RepairReport};
pub use labels::{label_frame, BucketThresholds, LabeledFrame};
pub use lags::build_lags;
pub use pipeline::{build_frame, indicator_table, FeatureConfig, FrameReport, IndicatorConfig};
