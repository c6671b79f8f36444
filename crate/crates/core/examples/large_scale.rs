//! Exact SI on 50,000 x 44 through the tiled kernel, and the sampled estimate.
//!
//!     cargo run --release --example large_scale [rows]

use std::time::Instant;

use sepindex::synth::two_gaussians;
use sepindex::{normalize, separation_index_sampled, separation_index_tiled, Normalization};

fn main() -> sepindex::Result<()> {
    let m = std::env::args().nth(1).map_or(50_000, |s| s.parse().expect("rows must be an integer"));
    let (data, _) = normalize(&two_gaussians(m, 44, 0.3, 1)?, Normalization::MinMax)?;
    println!("{} rows x {} columns on {} threads", data.rows(), data.cols(), rayon::current_num_threads());

    let t = Instant::now();
    let exact = separation_index_tiled(&data, 256)?;
    println!("tiled exact   SI {:.5}  in {:.2?}", exact.value, t.elapsed());

    let t = Instant::now();
    let sampled = separation_index_sampled(&data, 5_000, 1)?;
    println!("sampled 5000  SI {:.5} ± {:.5}  in {:.2?}", sampled.value, sampled.standard_error, t.elapsed());
    Ok(())
}
