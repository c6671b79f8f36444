//! The single JSON document that drives every pipeline stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::pipeline::FeatureConfig;
use crate::matrix::Normalization;
use crate::selection::{ObservationSet, SelectionConfig};
use crate::synth::SyntheticSource;

/// Where bars come from: a CSV file or a seeded generator.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    #[serde(default)]
    pub candles: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub k_direction: usize,
    pub k_magnitude: usize,
    pub normalization: Normalization,
    /// Number of repeated runs.
    pub seeds: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { k_direction: 1, k_magnitude: 1, normalization: Normalization::MinMax, seeds: 15 }
    }
}

/// Chronological train/validation/test fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train: 0.7, validation: 0.1, test: 0.2 }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) || self.train <= 0.0 || self.test <= 0.0 {
            return Err(Error::Config("split fractions must lie in [0, 1] with train and test > 0".into()));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("split fractions must sum to 1".into()));
        }
        Ok(())
    }

    /// `(train_end, validation_end)` row boundaries for `rows` rows.
    pub fn bounds(&self, rows: usize) -> (usize, usize) {
        let train_end = ((rows as f64 * self.train).floor() as usize).max(1);
        let val_end = (train_end + (rows as f64 * self.validation).floor() as usize).min(rows);
        (train_end, val_end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub input: InputConfig,
    pub features: FeatureConfig,
    /// Observation sets for selection; empty means "use every column".
    #[serde(default)]
    pub sets: Vec<ObservationSet>,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate_values()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks every section without touching the filesystem.
    pub fn validate_values(&self) -> Result<()> {
        self.features.validate()?;
        self.selection.validate()?;
        self.split.validate()?;
        if self.model.k_direction == 0 || self.model.k_direction.is_multiple_of(2) {
            return Err(Error::Config(format!("k_direction must be odd and >= 1, got {}", self.model.k_direction)));
        }
        if self.model.k_magnitude == 0 {
            return Err(Error::Config("k_magnitude must be >= 1".into()));
        }
        if self.model.seeds == 0 {
            return Err(Error::Config("seeds must be >= 1".into()));
        }
        if self.input.candles.is_some() && self.input.synthetic.is_some() {
            return Err(Error::Config("input.candles and input.synthetic are mutually exclusive".into()));
        }
        Ok(())
    }

    /// Also requires referenced input files to exist.
    pub fn validate(&self) -> Result<()> {
        self.validate_values()?;
        if let Some(p) = &self.input.candles {
            if !p.is_file() {
                return Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found")));
            }
        }
        Ok(())
    }

    /// Hash of the whole document.
    pub fn hash(&self) -> String {
        canonical_hash(&serde_json::to_value(self).expect("config serializes"))
    }

    /// Hash of the sections that determine ingested bars.
    pub fn ingest_hash(&self) -> String {
        canonical_hash(&serde_json::json!({
            "input": self.input,
            "max_gap_minutes": self.features.max_gap_minutes,
        }))
    }

    /// Hash of the sections that determine the labelled feature frame.
    pub fn features_hash(&self) -> String {
        canonical_hash(&serde_json::json!({
            "input": self.input,
            "features": self.features,
            "train": self.split.train,
        }))
    }
}

/// SHA-256 of the JSON text with object keys sorted recursively and no
/// insignificant whitespace.
pub fn canonical_hash(value: &Value) -> String {
    let text = canonical_json(value);
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

pub fn canonical_json(value: &Value) -> String {
    fn sort(v: &Value) -> Value {
        match v {
            Value::Object(map) => {
                let mut keys: Vec<&String> = map.keys().collect();
                keys.sort();
                let mut out = serde_json::Map::new();
                for k in keys {
                    out.insert(k.clone(), sort(&map[k]));
                }
                Value::Object(out)
            }
            Value::Array(items) => Value::Array(items.iter().map(sort).collect()),
            other => other.clone(),
        }
    }
    serde_json::to_string(&sort(value)).expect("value serializes")
}
