//! Seeded synthetic datasets: labelled Gaussian blobs, a four-set selection
//! fixture, and minute-bar series with and without a persistent trend.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::candles::{Candle, CandleSeries, MINUTE_MS};
use crate::matrix::FeatureMatrix;
use crate::selection::ObservationSet;

/// 2020-01-01T00:00:00Z.
pub const SYNTH_START_MS: i64 = 1_577_836_800_000;

/// Two balanced classes with unit-variance Gaussian features whose means sit
/// `separation` apart along every axis.
pub fn two_gaussians(m: usize, n: usize, separation: f64, seed: u64) -> Result<FeatureMatrix> {
    if m < 2 || n == 0 {
        return Err(Error::InvalidArgument("two_gaussians needs m >= 2 and n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut values = Vec::with_capacity(m * n);
    let mut labels = Vec::with_capacity(m);
    for i in 0..m {
        let l = (i % 2) as u32;
        let mu = if l == 1 { separation / 2.0 } else { -separation / 2.0 };
        values.extend((0..n).map(|_| mu + normal.sample(&mut rng)));
        labels.push(l);
    }
    let names = (0..n).map(|j| format!("x{j}")).collect();
    FeatureMatrix::with_classes(values, names, labels, 2)
}

/// Binary labels with three label-correlated observation sets of decreasing
/// strength and one set of pure noise. Returns the matrix and the sets in the
/// order `base`, `refining`, `lagged`, `noise`.
pub fn selection_fixture(m: usize, seed: u64) -> Result<(FeatureMatrix, Vec<ObservationSet>)> {
    if m < 2 {
        return Err(Error::InvalidArgument("selection_fixture needs m >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base_noise = Normal::new(0.0, 0.8).unwrap();
    let unit = Normal::new(0.0, 1.0).unwrap();
    let mut values = Vec::with_capacity(m * 6);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let l: u32 = rng.gen_range(0..2);
        let s = 2.0 * l as f64 - 1.0;
        values.push(s + base_noise.sample(&mut rng));
        values.push(0.8 * s + unit.sample(&mut rng));
        values.push(0.8 * s + unit.sample(&mut rng));
        for _ in 0..3 {
            values.push(rng.gen::<f64>());
        }
        labels.push(l);
    }
    let names: Vec<String> =
        ["base", "refining", "lagged", "noise_0", "noise_1", "noise_2"].iter().map(|s| s.to_string()).collect();
    let matrix = FeatureMatrix::with_classes(values, names, labels, 2)?;
    let sets = vec![
        ObservationSet::new("base", ["base"]),
        ObservationSet::new("refining", ["refining"]),
        ObservationSet::new("lagged", ["lagged"]),
        ObservationSet::new("noise", ["noise_0", "noise_1", "noise_2"]),
    ];
    Ok((matrix, sets))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Each close change keeps the sign of the previous one with probability
    /// `persistence`.
    PersistentTrend,
    /// Independent fair-coin signs.
    WhiteNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    pub generator: Generator,
    pub bars: usize,
    #[serde(default = "default_persistence")]
    pub persistence: f64,
    #[serde(default = "default_start")]
    pub start_price: f64,
}

fn default_persistence() -> f64 {
    0.9
}

fn default_start() -> f64 {
    10_000.0
}

impl SyntheticSource {
    pub fn generate(&self, seed: u64) -> Result<CandleSeries> {
        let p = match self.generator {
            Generator::PersistentTrend => self.persistence,
            Generator::WhiteNoise => 0.5,
        };
        sign_persistent_candles(self.bars, p, self.start_price, seed)
    }
}

/// Minute bars whose close changes have magnitude uniform in `[0.5, 1.5]` and
/// keep the previous change's sign with probability `persistence`.
pub fn sign_persistent_candles(bars: usize, persistence: f64, start_price: f64, seed: u64) -> Result<CandleSeries> {
    if !(0.0..=1.0).contains(&persistence) {
        return Err(Error::InvalidArgument(format!("persistence must be in [0, 1], got {persistence}")));
    }
    if bars < 2 || !(start_price > 0.0) {
        return Err(Error::InvalidArgument("need at least 2 bars and a positive start price".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let mut close = start_price;
    let mut out = Vec::with_capacity(bars);
    for t in 0..bars {
        let open = close;
        if t > 0 {
            if !rng.gen_bool(persistence) {
                sign = -sign;
            }
            close = (open + sign * rng.gen_range(0.5..1.5)).max(1.0);
        }
        let high = open.max(close) + rng.gen_range(0.0..0.3);
        let low = (open.min(close) - rng.gen_range(0.0..0.3)).max(0.5);
        out.push(Candle {
            timestamp: SYNTH_START_MS + t as i64 * MINUTE_MS,
            open,
            high,
            low,
            close,
            volume: rng.gen_range(1.0..10.0),
        });
    }
    Ok(CandleSeries::from_bars(out))
}

pub fn persistent_trend(bars: usize, persistence: f64, seed: u64) -> Result<CandleSeries> {
    sign_persistent_candles(bars, persistence, default_start(), seed)
}

pub fn white_noise(bars: usize, seed: u64) -> Result<CandleSeries> {
    sign_persistent_candles(bars, 0.5, default_start(), seed)
}
