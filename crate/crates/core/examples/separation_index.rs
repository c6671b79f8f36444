//! Separation Index of labelled Gaussian blobs with the exact, tiled and
//! sampled estimators, and the leave-one-out 1-NN identity.
//!
//!     cargo run --release --example separation_index

use sepindex::models::KnnModel;
use sepindex::synth::two_gaussians;
use sepindex::{normalize, separation_index, separation_index_sampled, separation_index_tiled, Normalization};

fn main() -> sepindex::Result<()> {
    for separation in [0.0, 1.0, 2.0, 4.0] {
        let data = two_gaussians(4_000, 4, separation, 7)?;
        let (scaled, _) = normalize(&data, Normalization::MinMax)?;
        let exact = separation_index(&scaled)?;
        let tiled = separation_index_tiled(&scaled, 256)?;
        let sampled = separation_index_sampled(&scaled, 500, 11)?;
        println!(
            "separation {separation:>3}: exact {:.4}  tiled {:.4}  sampled {:.4} ± {:.4}",
            exact.value, tiled.value, sampled.value, sampled.standard_error
        );
        assert_eq!(exact, tiled);
    }

    let data = two_gaussians(1_000, 3, 1.5, 3)?;
    let (scaled, _) = normalize(&data, Normalization::MinMax)?;
    let si = separation_index(&scaled)?;
    let model = KnnModel::fit(&data, 1, Normalization::MinMax)?;
    let hits = model.predict_leave_one_out().iter().zip(data.labels()).filter(|(p, l)| p == l).count();
    println!("SI {} of {} rows; leave-one-out 1-NN gets {hits} right", si.matched_count, si.m);
    Ok(())
}
