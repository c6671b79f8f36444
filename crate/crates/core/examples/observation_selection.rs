//! Greedy observation-set selection on a fixture with three informative sets
//! and one noise set. Writes the trace and the SI staircase to `target/`.
//!
//!     cargo run --release --example observation_selection

use sepindex::selection::{rank_observations, SelectionConfig, SelectionMode};
use sepindex::synth::selection_fixture;
use sepindex::Error;

fn main() -> sepindex::Result<()> {
    let (data, sets) = selection_fixture(2_000, 42)?;
    for mode in [SelectionMode::Ordered, SelectionMode::BestFirst] {
        let config = SelectionConfig { mode, ..SelectionConfig::default() };
        let trace = rank_observations(&data, &sets, &config)?;
        println!("{mode:?}: seed `{}` at SI {:.4}", trace.seed_set, trace.si_val[0]);
        for step in &trace.steps {
            let verdict = if step.accepted { "accept" } else { "reject" };
            println!("  {:<9} {:.4} -> {:.4}  {verdict}", step.candidate, step.si_before, step.si_candidate);
        }
        println!("  accepted {:?}, final SI {:.4}", trace.accepted_sets, trace.final_si);
        if mode == SelectionMode::Ordered {
            std::fs::create_dir_all("target").map_err(|e| Error::io("target", e))?;
            trace.write_json("target/selection_trace.json")?;
            let csv = std::fs::File::create("target/si_val.csv").map_err(|e| Error::io("target/si_val.csv", e))?;
            trace.write_si_val_csv(csv).map_err(|e| Error::io("target/si_val.csv", e))?;
        }
    }
    Ok(())
}
