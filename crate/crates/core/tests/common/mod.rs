#![allow(dead_code)]

pub mod indicator_checks;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sepindex::features::candles::{Candle, CandleSeries};
use sepindex::FeatureMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform values in [0, 1); with `grid > 0` they are rounded to multiples of
/// `1 / grid` so that duplicate points and equal distances occur.
pub fn random_matrix(r: &mut ChaCha8Rng, m: usize, n: usize, classes: u32, grid: u32) -> FeatureMatrix {
    let values = (0..m * n)
        .map(|_| {
            let v: f64 = r.gen();
            if grid > 0 {
                (v * grid as f64).floor() / grid as f64
            } else {
                v
            }
        })
        .collect();
    let mut labels: Vec<u32> = (0..m).map(|_| r.gen_range(0..classes)).collect();
    // at least two classes present
    labels[0] = 0;
    labels[m - 1] = 1;
    let names = (0..n).map(|j| format!("x{j}")).collect();
    FeatureMatrix::with_classes(values, names, labels, classes).unwrap()
}

pub fn naive_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        let d = a[k] - b[k];
        s += d * d;
    }
    s
}

/// Leave-one-out 1-NN by exhaustive scan; ties go to the lower index.
pub fn loo_nearest(m: &FeatureMatrix) -> Vec<usize> {
    (0..m.rows())
        .map(|i| {
            let mut best = (f64::INFINITY, usize::MAX);
            for j in 0..m.rows() {
                if j != i {
                    let d = naive_distance(m.row(i), m.row(j));
                    if d < best.0 {
                        best = (d, j);
                    }
                }
            }
            best.1
        })
        .collect()
}

pub fn loo_accuracy(m: &FeatureMatrix) -> (usize, f64) {
    let nn = loo_nearest(m);
    let hits = nn.iter().enumerate().filter(|&(i, &j)| m.labels()[i] == m.labels()[j]).count();
    (hits, hits as f64 / m.rows() as f64)
}

/// Gaussian random walk of one-minute bars with noisy ranges and volumes.
pub fn random_walk(r: &mut ChaCha8Rng, bars: usize) -> CandleSeries {
    let mut price = 1000.0;
    let mut out = Vec::with_capacity(bars);
    for i in 0..bars {
        let open = price;
        let u: f64 = r.gen::<f64>() + r.gen::<f64>() + r.gen::<f64>() - 1.5;
        let close = (open + 2.0 * u).max(1.0);
        let high = open.max(close) + r.gen::<f64>();
        let low = (open.min(close) - r.gen::<f64>()).max(0.5);
        let volume = if r.gen::<f64>() < 0.02 { 0.0 } else { r.gen::<f64>() * 50.0 };
        out.push(Candle {
            timestamp: sepindex::synth::SYNTH_START_MS + 60_000 * i as i64,
            open,
            high,
            low,
            close,
            volume,
        });
        price = close;
    }
    CandleSeries::from_bars(out)
}

pub fn schema_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas")
}

/// Validates `instance` against `docs/schemas/<name>`; sibling schemas are
/// available to `$ref`.
pub fn validate_schema(name: &str, instance: &serde_json::Value) -> Result<(), Vec<String>> {
    let load = |file: &str| -> serde_json::Value {
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(schema_dir().join(file)).unwrap()).unwrap();
        // the shipped ids are relative; anchor them so `$ref` can resolve
        v["$id"] = format!("json-schema:///{file}").into();
        v
    };
    let mut options = jsonschema::JSONSchema::options();
    for entry in std::fs::read_dir(schema_dir()).unwrap() {
        let file = entry.unwrap().file_name().into_string().unwrap();
        options.with_document(format!("json-schema:///{file}"), load(&file));
    }
    let schema = load(name);
    let compiled = options.compile(&schema).map_err(|e| vec![e.to_string()])?;
    let result =
        compiled.validate(instance).map_err(|errs| errs.map(|e| format!("{} at {}", e, e.instance_path)).collect());
    result
}
