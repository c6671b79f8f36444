//! The full select-then-predict experiment from a JSON config, repeated over
//! seeds.
//!
//!     cargo run --release --example experiment [config.json] [seeds]

use sepindex::config::PipelineConfig;
use sepindex::models::run_experiments;

fn main() -> sepindex::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/persistent_trend.json").into());
    let mut config = PipelineConfig::load(&path)?;
    config.model.seeds = args.next().map_or(3, |s| s.parse().expect("seeds must be an integer"));
    let summary = run_experiments(&config)?;
    for run in &summary.runs {
        let trace = run.selection.as_ref();
        println!(
            "seed {:>3}: sets {:?}  train SI {:.4}  test direction {:.4}",
            run.seed,
            trace.map(|t| t.accepted_sets.clone()).unwrap_or_default(),
            run.train_si.value,
            run.test.accuracy_direction
        );
    }
    print!("{}", summary.to_table());
    Ok(())
}
