//! Sign-agreement vote between a direction and a magnitude classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether a direction and a magnitude class point the same way: 0 with
/// classes 0..=4, or 1 with classes 5..=9.
#[inline]
pub fn signs_agree(direction: u32, magnitude: u32) -> bool {
    (direction == 0 && magnitude <= 4) || (direction == 1 && magnitude >= 5)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VotedPrediction {
    pub direction: Vec<u32>,
    pub magnitude: Vec<u32>,
    pub matched: Vec<bool>,
    /// The direction when both classifiers agree, otherwise `None` (abstain).
    pub retained: Vec<Option<u32>>,
}

impl VotedPrediction {
    pub fn len(&self) -> usize {
        self.direction.len()
    }

    pub fn is_empty(&self) -> bool {
        self.direction.is_empty()
    }

    pub fn matched_count(&self) -> usize {
        self.matched.iter().filter(|&&m| m).count()
    }
}

pub fn vote(direction: &[u32], magnitude: &[u32]) -> Result<VotedPrediction> {
    if direction.len() != magnitude.len() {
        return Err(Error::Shape(format!(
            "{} direction predictions vs {} magnitude predictions",
            direction.len(),
            magnitude.len()
        )));
    }
    if let Some(i) = direction.iter().position(|&d| d > 1) {
        return Err(Error::LabelOutOfRange { row: i, label: direction[i], n_classes: 2 });
    }
    if let Some(i) = magnitude.iter().position(|&c| c > 9) {
        return Err(Error::LabelOutOfRange { row: i, label: magnitude[i], n_classes: 10 });
    }
    let matched: Vec<bool> = direction.iter().zip(magnitude).map(|(&d, &c)| signs_agree(d, c)).collect();
    let retained = direction.iter().zip(&matched).map(|(&d, &ok)| ok.then_some(d)).collect();
    Ok(VotedPrediction { direction: direction.to_vec(), magnitude: magnitude.to_vec(), matched, retained })
}
