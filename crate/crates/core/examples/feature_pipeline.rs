//! Bars from CSV through gap repair, indicators, lags and labels.
//!
//!     cargo run --release --example feature_pipeline [candles.csv]
//!
//! Without an argument a synthetic series with a few missing minutes is used.

use sepindex::features::pipeline::{build_frame, FeatureConfig, IndicatorConfig};
use sepindex::features::{ingest_csv, repair_gaps, CandleSeries};
use sepindex::Error;

fn main() -> sepindex::Result<()> {
    let raw = match std::env::args().nth(1) {
        Some(path) => ingest_csv(path)?,
        None => {
            let mut s = sepindex::synth::white_noise(3_000, 9)?;
            s.bars.drain(1_000..1_003);
            let path = std::env::temp_dir().join("sepindex_feature_pipeline.csv");
            let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            s.write_csv(file)?;
            ingest_csv(&path)?
        }
    };
    let (bars, repair): (CandleSeries, _) = repair_gaps(&raw, 120)?;
    println!("{} bars read, {} inserted", raw.len(), repair.inserted_total);
    for r in &repair.filled {
        println!("  filled {} minute(s) between {} and {}", r.inserted, r.after, r.before);
    }

    let mut config = FeatureConfig::new(IndicatorConfig::with_threshold(0.05));
    for lags in [vec![1], vec![1, 2, 3]] {
        config.lags = lags.clone();
        let (frame, report) = build_frame(&bars, &config, 0.7)?;
        println!(
            "lags {lags:?}: {} base columns -> {} columns, {} rows ({} dropped during warm-up)",
            report.base_columns.len(),
            report.columns,
            report.rows,
            report.dropped_undefined
        );
        if lags.len() == 1 {
            let t = frame.thresholds;
            println!("  magnitude thresholds: mean fall {:.4}, mean rise {:.4}", t.mean_neg, t.mean_pos);
            println!("  bin edges {:?}", report.bin_edges.map(|e| (e * 1e4).round() / 1e4));
            let mut counts = [0usize; 10];
            frame.magnitude.iter().for_each(|&c| counts[c as usize] += 1);
            println!("  magnitude class counts {counts:?}");
        }
    }
    Ok(())
}
