//! Pairwise distances, nearest neighbors, tiled search and the memory budget.
//!
//!     cargo run --release --example distance_kernel

use sepindex::si::distance_matrix_with_budget;
use sepindex::{distance_matrix, nearest_neighbors, nearest_neighbors_tiled, Error, FeatureMatrix};

fn main() -> sepindex::Result<()> {
    let x =
        FeatureMatrix::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0], vec![0.0, 1.0], vec![3.0, 4.0]], vec![0, 1, 0, 1])?;
    let d = distance_matrix(&x)?;
    for i in 0..d.m() {
        println!("{:?}", d.row(i));
    }
    let nn = nearest_neighbors(&d)?;
    println!("nearest {:?} at {:?}", nn.nearest_index, nn.nearest_distance);

    for tile in [1, 2, 3, 4] {
        assert_eq!(nearest_neighbors_tiled(&x, tile)?, nn);
    }
    println!("tiled search agrees for every tile size");

    let big = sepindex::synth::two_gaussians(5_000, 8, 1.0, 1)?;
    match distance_matrix_with_budget(&big, 64 << 20) {
        Err(e @ Error::MemoryBudget { .. }) => println!("{e}"),
        other => println!("unexpected: {other:?}"),
    }
    let tiled = nearest_neighbors_tiled(&big, 512)?;
    println!("tiled search over {} rows finished; row 0 -> {}", big.rows(), tiled.nearest_index[0]);
    Ok(())
}
