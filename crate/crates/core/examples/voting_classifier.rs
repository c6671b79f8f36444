//! k-NN direction and magnitude models joined by the sign-agreement vote.
//!
//!     cargo run --release --example voting_classifier

use sepindex::features::pipeline::{build_frame, FeatureConfig, IndicatorConfig};
use sepindex::models::{evaluate_frame, knn_fit, vote, Target};
use sepindex::synth::persistent_trend;
use sepindex::Normalization;

fn main() -> sepindex::Result<()> {
    let bars = persistent_trend(12_000, 0.9, 21)?;
    let mut config = FeatureConfig::new(IndicatorConfig::with_threshold(0.05));
    config.columns = Some(vec!["roc".into(), "rsi".into()]);
    let (frame, _) = build_frame(&bars, &config, 0.7)?;
    let split = (frame.rows() as f64 * 0.7) as usize;
    let (train, test) = (frame.slice(0..split), frame.slice(split..frame.rows()));
    let train = train.select_columns_by_name(&["roc"])?;
    let test = test.select_columns_by_name(&["roc"])?;

    for k in [1, 5, 25] {
        let direction = knn_fit(&train, k, Target::Direction, Normalization::MinMax)?;
        let magnitude = knn_fit(&train, k, Target::Magnitude, Normalization::MinMax)?;
        let voted = vote(&direction.predict(&test.features)?, &magnitude.predict(&test.features)?)?;
        let report = evaluate_frame(&voted, &test)?;
        println!("k = {k}\n{}", report.to_table());
    }
    Ok(())
}
