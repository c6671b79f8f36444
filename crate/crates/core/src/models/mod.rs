//! k-NN baselines for the direction and magnitude targets, the sign-agreement
//! vote, evaluation metrics and the repeated experiment driver.

pub mod evaluate;
pub mod experiment;
pub mod knn;
pub mod vote;

pub use evaluate::{evaluate, evaluate_frame, EvalReport};
pub use experiment::{run_experiment, run_experiments, ExperimentSummary, RunOutcome};
pub use knn::{knn_fit, knn_predict, KnnModel, Target};
pub use vote::{signs_agree, vote, VotedPrediction};
