//! Nearest-neighbor class separability (the Separation Index), greedy
//! observation-set selection driven by it, a minute-bar OHLCV feature
//! pipeline, and k-NN baselines combined by a sign-agreement vote.

pub mod cache;
pub mod cli;
pub mod config;
pub mod error;
pub mod features;
pub mod kernel;
pub mod matrix;
pub mod models;
pub mod selection;
pub mod si;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::{normalize, FeatureMatrix, Normalization, Scaling};
pub use si::{
    distance_matrix, nearest_neighbors, nearest_neighbors_tiled, separation_index, separation_index_sampled,
    separation_index_tiled, DistanceMatrix, Estimator, NeighborAssignment, SiResult,
};
