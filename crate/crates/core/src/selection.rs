//! Greedy forward selection over named groups of columns.
//!
//! The best single group seeds the input. Each remaining group is then tried
//! as an extension, and it is merged only when the separation index of the
//! extended input strictly beats the current one (by more than the configured
//! margin). Accepted groups are never removed.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{normalize, FeatureMatrix, Normalization};
use crate::si::{Estimator, SiResult};

/// A named group of columns that is accepted or rejected as a unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub name: String,
    pub columns: Vec<String>,
}

impl ObservationSet {
    pub fn new<S: Into<String>>(name: impl Into<String>, columns: impl IntoIterator<Item = S>) -> Self {
        ObservationSet { name: name.into(), columns: columns.into_iter().map(Into::into).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Try candidates in declaration order.
    #[default]
    Ordered,
    /// Each round, merge the candidate with the largest SI.
    BestFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub mode: SelectionMode,
    /// Required improvement. Plain SI units for exact estimators; multiples of
    /// the candidate's standard error for the sampled one. `None` picks 0 for
    /// exact and 2 for sampled.
    pub margin: Option<f64>,
    pub estimator: Estimator,
    /// Ordered mode only: how many sweeps over still-rejected candidates.
    pub passes: usize,
    /// Applied to every projection before SI is computed.
    pub normalization: Normalization,
    pub allow_overlap: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            mode: SelectionMode::Ordered,
            margin: None,
            estimator: Estimator::default(),
            passes: 1,
            normalization: Normalization::MinMax,
            allow_overlap: false,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(m) = self.margin {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::Config(format!("margin must be a finite value >= 0, got {m}")));
            }
        }
        if self.passes < 1 {
            return Err(Error::Config("passes must be >= 1".into()));
        }
        Ok(())
    }

    fn threshold(&self, candidate: &SiResult) -> f64 {
        if self.estimator.is_sampled() {
            self.margin.unwrap_or(2.0) * candidate.standard_error
        } else {
            self.margin.unwrap_or(0.0)
        }
    }
}

/// Observation sets plus selection options, as read from a JSON document such
/// as `{"sets":[{"name":"ohlcv","columns":[...]}], "mode":"ordered"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSpec {
    pub sets: Vec<ObservationSet>,
    #[serde(flatten)]
    pub config: SelectionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub candidate: String,
    pub si_before: f64,
    pub si_candidate: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub seed_set: String,
    pub steps: Vec<SelectionStep>,
    /// SI of the accepted input after the seed and after every acceptance.
    pub si_val: Vec<f64>,
    pub final_si: f64,
    /// Accepted sets in acceptance order, seed first.
    pub accepted_sets: Vec<String>,
}

impl SelectionTrace {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// `step,set,si` rows, one per accepted state.
    pub fn write_si_val_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,set,si")?;
        for (k, (name, si)) in self.accepted_sets.iter().zip(&self.si_val).enumerate() {
            writeln!(out, "{k},{name},{si}")?;
        }
        Ok(())
    }
}

/// Checks every set against `full`: non-empty, known columns, unique names,
/// and disjoint unless `allow_overlap`.
pub fn validate_sets(full: &FeatureMatrix, sets: &[ObservationSet], allow_overlap: bool) -> Result<()> {
    if sets.is_empty() {
        return Err(Error::Empty("no observation sets".into()));
    }
    let mut names = HashSet::new();
    let mut owner: HashMap<&str, &str> = HashMap::new();
    for set in sets {
        if !names.insert(set.name.as_str()) {
            return Err(Error::Config(format!("observation set `{}` declared twice", set.name)));
        }
        if set.columns.is_empty() {
            return Err(Error::Empty(format!("observation set `{}` has no columns", set.name)));
        }
        for c in &set.columns {
            if full.column_index(c).is_none() {
                return Err(Error::UnknownColumn(c.clone()));
            }
            if let Some(prev) = owner.insert(c, &set.name) {
                if !allow_overlap && prev != set.name {
                    return Err(Error::Config(format!("column `{c}` appears in both `{prev}` and `{}`", set.name)));
                }
            }
        }
    }
    Ok(())
}

/// The union of the sets' columns in first-appearance order, rows and labels
/// unchanged.
pub fn project(full: &FeatureMatrix, sets: &[&ObservationSet]) -> Result<FeatureMatrix> {
    if sets.is_empty() {
        return Err(Error::Empty("projection onto no observation sets".into()));
    }
    let mut seen = HashSet::new();
    let mut idx = Vec::new();
    for set in sets {
        for c in &set.columns {
            let j = full.column_index(c).ok_or_else(|| Error::UnknownColumn(c.clone()))?;
            if seen.insert(j) {
                idx.push(j);
            }
        }
    }
    full.select_columns(&idx)
}

fn evaluate_family(full: &FeatureMatrix, sets: &[&ObservationSet], config: &SelectionConfig) -> Result<SiResult> {
    let projected = project(full, sets)?;
    let (scaled, _) = normalize(&projected, config.normalization)?;
    config.estimator.evaluate(&scaled)
}

/// The single set with the highest SI; ties keep declaration order.
pub fn seed_selection(
    full: &FeatureMatrix,
    sets: &[ObservationSet],
    config: &SelectionConfig,
) -> Result<(ObservationSet, SiResult)> {
    config.validate()?;
    validate_sets(full, sets, config.allow_overlap)?;
    let (idx, si) = seed_index(full, sets, config)?;
    Ok((sets[idx].clone(), si))
}

fn seed_index(full: &FeatureMatrix, sets: &[ObservationSet], config: &SelectionConfig) -> Result<(usize, SiResult)> {
    let scores = sets.par_iter().map(|s| evaluate_family(full, &[s], config)).collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, s) in scores.iter().enumerate() {
        if s.value > scores[best].value {
            best = k;
        }
    }
    Ok((best, scores.into_iter().nth(best).unwrap()))
}

/// Greedy forward selection; returns every evaluation made after seeding.
pub fn rank_observations(
    full: &FeatureMatrix,
    sets: &[ObservationSet],
    config: &SelectionConfig,
) -> Result<SelectionTrace> {
    config.validate()?;
    validate_sets(full, sets, config.allow_overlap)?;
    let (seed, seed_si) = seed_index(full, sets, config)?;

    let mut family: Vec<usize> = vec![seed];
    let mut current = seed_si.value;
    let mut si_val = vec![current];
    let mut steps = Vec::new();
    let mut remaining: Vec<usize> = (0..sets.len()).filter(|&k| k != seed).collect();

    let with = |family: &[usize], c: usize| -> Result<SiResult> {
        let members: Vec<&ObservationSet> = family.iter().chain(std::iter::once(&c)).map(|&k| &sets[k]).collect();
        evaluate_family(full, &members, config)
    };

    match config.mode {
        SelectionMode::Ordered => {
            for _ in 0..config.passes {
                let mut grew = false;
                let mut rejected = Vec::new();
                for &c in &remaining {
                    let si = with(&family, c)?;
                    let accepted = si.value > current + config.threshold(&si);
                    steps.push(SelectionStep {
                        candidate: sets[c].name.clone(),
                        si_before: current,
                        si_candidate: si.value,
                        accepted,
                    });
                    if accepted {
                        family.push(c);
                        current = si.value;
                        si_val.push(current);
                        grew = true;
                    } else {
                        rejected.push(c);
                    }
                }
                remaining = rejected;
                if !grew || remaining.is_empty() {
                    break;
                }
            }
        }
        SelectionMode::BestFirst => {
            while !remaining.is_empty() {
                let scores = remaining.par_iter().map(|&c| with(&family, c)).collect::<Result<Vec<_>>>()?;
                let mut winner: Option<usize> = None;
                for (k, si) in scores.iter().enumerate() {
                    let passes = si.value > current + config.threshold(si);
                    if passes && winner.is_none_or(|w| si.value > scores[w].value) {
                        winner = Some(k);
                    }
                }
                match winner {
                    Some(k) => {
                        let c = remaining.remove(k);
                        steps.push(SelectionStep {
                            candidate: sets[c].name.clone(),
                            si_before: current,
                            si_candidate: scores[k].value,
                            accepted: true,
                        });
                        family.push(c);
                        current = scores[k].value;
                        si_val.push(current);
                    }
                    None => {
                        for (&c, si) in remaining.iter().zip(&scores) {
                            steps.push(SelectionStep {
                                candidate: sets[c].name.clone(),
                                si_before: current,
                                si_candidate: si.value,
                                accepted: false,
                            });
                        }
                        break;
                    }
                }
            }
        }
    }

    Ok(SelectionTrace {
        seed_set: sets[seed].name.clone(),
        steps,
        final_si: current,
        si_val,
        accepted_sets: family.iter().map(|&k| sets[k].name.clone()).collect(),
    })
}
