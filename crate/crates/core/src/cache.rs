//! Versioned binary artifacts tagged with the hash of the config that made
//! them. A reader that expects a different hash gets [`Error::Stale`].
//!
//! Layout: 8-byte magic, `u32` format version (LE), `u8` kind, `u16` hash
//! length (LE), hash bytes, then the bincode payload.

use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::candles::CandleSeries;
use crate::features::labels::LabeledFrame;
use crate::features::pipeline::FrameReport;
use crate::matrix::FeatureMatrix;
use crate::models::knn::KnnModel;

pub const MAGIC: &[u8; 8] = b"SEPIDXC\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ArtifactKind {
    Matrix = 1,
    Candles = 2,
    Features = 3,
    KnnModel = 4,
}

impl ArtifactKind {
    fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            1 => ArtifactKind::Matrix,
            2 => ArtifactKind::Candles,
            3 => ArtifactKind::Features,
            4 => ArtifactKind::KnnModel,
            _ => return None,
        })
    }
}

pub trait Cacheable: Serialize + DeserializeOwned {
    const KIND: ArtifactKind;
}

impl Cacheable for FeatureMatrix {
    const KIND: ArtifactKind = ArtifactKind::Matrix;
}

impl Cacheable for CandleSeries {
    const KIND: ArtifactKind = ArtifactKind::Candles;
}

impl Cacheable for KnnModel {
    const KIND: ArtifactKind = ArtifactKind::KnnModel;
}

/// A labelled frame together with its build report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureArtifact {
    pub frame: LabeledFrame,
    pub report: FrameReport,
}

impl Cacheable for FeatureArtifact {
    const KIND: ArtifactKind = ArtifactKind::Features;
}

pub fn encode<T: Cacheable, W: Write>(mut out: W, value: &T, config_hash: &str) -> Result<()> {
    let hash = config_hash.as_bytes();
    let hash_len = u16::try_from(hash.len()).map_err(|_| Error::Cache("config hash too long".into()))?;
    let mut header = Vec::with_capacity(15 + hash.len());
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    header.push(T::KIND as u8);
    header.extend_from_slice(&hash_len.to_le_bytes());
    header.extend_from_slice(hash);
    out.write_all(&header).map_err(|e| Error::Cache(e.to_string()))?;
    bincode::serialize_into(&mut out, value).map_err(|e| Error::Cache(e.to_string()))
}

/// Returns the value and the stored config hash.
pub fn decode<T: Cacheable, R: Read>(mut input: R) -> Result<(T, String)> {
    let mut fixed = [0u8; 15];
    input.read_exact(&mut fixed).map_err(|_| Error::Cache("truncated header".into()))?;
    if &fixed[..8] != MAGIC {
        return Err(Error::Cache("not a sepindex cache file".into()));
    }
    let version = u32::from_le_bytes(fixed[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Cache(format!("format version {version}, expected {FORMAT_VERSION}")));
    }
    match ArtifactKind::from_u8(fixed[12]) {
        Some(k) if k == T::KIND => {}
        other => return Err(Error::Cache(format!("artifact kind {other:?}, expected {:?}", T::KIND))),
    }
    let hash_len = u16::from_le_bytes(fixed[13..15].try_into().unwrap()) as usize;
    let mut hash = vec![0u8; hash_len];
    input.read_exact(&mut hash).map_err(|_| Error::Cache("truncated header".into()))?;
    let hash = String::from_utf8(hash).map_err(|_| Error::Cache("config hash is not UTF-8".into()))?;
    let value = bincode::deserialize_from(input).map_err(|e| Error::Cache(e.to_string()))?;
    Ok((value, hash))
}

pub fn write_cache<T: Cacheable>(path: impl AsRef<Path>, value: &T, config_hash: &str) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    encode(&mut w, value, config_hash)?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads an artifact, refusing it when `expected_hash` is given and differs.
pub fn read_cache<T: Cacheable>(path: impl AsRef<Path>, expected_hash: Option<&str>) -> Result<(T, String)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let (value, found) = decode::<T, _>(std::io::BufReader::new(file))?;
    if let Some(expected) = expected_hash {
        if expected != found {
            return Err(Error::Stale { path: path.to_path_buf(), found, expected: expected.to_owned() });
        }
    }
    Ok((value, found))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix() -> FeatureMatrix {
        FeatureMatrix::new(vec![0.1, -2.5, f64::MIN_POSITIVE, 1e300], vec!["a".into(), "b".into()], vec![0, 1]).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let mut buf = Vec::new();
        encode(&mut buf, &matrix(), "abc").unwrap();
        let (back, hash): (FeatureMatrix, _) = decode(buf.as_slice()).unwrap();
        assert_eq!(back, matrix());
        assert_eq!(hash, "abc");
    }

    #[test]
    fn wrong_kind_or_magic() {
        let mut buf = Vec::new();
        encode(&mut buf, &matrix(), "abc").unwrap();
        assert!(matches!(decode::<CandleSeries, _>(buf.as_slice()), Err(Error::Cache(_))));
        buf[0] = b'X';
        assert!(matches!(decode::<FeatureMatrix, _>(buf.as_slice()), Err(Error::Cache(_))));
    }

    #[test]
    fn stale_hash_refused() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        write_cache(&p, &matrix(), "one").unwrap();
        assert!(read_cache::<FeatureMatrix>(&p, Some("one")).is_ok());
        assert!(matches!(read_cache::<FeatureMatrix>(&p, Some("two")), Err(Error::Stale { .. })));
    }
}
