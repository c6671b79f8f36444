//! Features, selection on the training rows, k-NN for both targets, vote,
//! evaluation, repeated over seeds.

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::features::candles::{ingest_csv, repair_gaps, CandleSeries};
use crate::features::labels::LabeledFrame;
use crate::features::pipeline::{build_frame, FrameReport};
use crate::matrix::normalize;
use crate::models::evaluate::{evaluate_frame, EvalReport};
use crate::models::knn::{knn_fit, Target};
use crate::models::vote::vote;
use crate::selection::{project, rank_observations, SelectionConfig, SelectionTrace};
use crate::si::{Estimator, SiResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub seed: u64,
    pub selected_columns: Vec<String>,
    pub selection: Option<SelectionTrace>,
    /// SI of the selected, scaled training rows under the direction labels.
    pub train_si: SiResult,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub test_rows: usize,
    pub train_end_timestamp: i64,
    pub test_start_timestamp: i64,
    pub validation: Option<EvalReport>,
    pub test: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub accuracy_direction: f64,
    pub accuracy_magnitude: f64,
    /// Over runs where some row was retained.
    pub accuracy_retained: Option<f64>,
    pub coverage: f64,
    pub train_si: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config_hash: String,
    pub runs: Vec<RunOutcome>,
    pub mean: Aggregate,
    pub max: Aggregate,
    /// True when every run produced the same test report, as happens with an
    /// exact estimator on fixed input.
    pub identical_runs: bool,
}

fn seeded_selection(cfg: &SelectionConfig, seed: u64) -> SelectionConfig {
    let mut out = cfg.clone();
    if let Estimator::Sampled { sample_size, .. } = out.estimator {
        out.estimator = Estimator::Sampled { sample_size, seed };
    }
    out
}

/// One run on an already built frame. Rows are split in time order; nothing
/// from the validation or test rows reaches selection or fitting.
pub fn run_on_frame(frame: &LabeledFrame, cfg: &PipelineConfig, seed: u64) -> Result<RunOutcome> {
    let rows = frame.rows();
    let (train_end, val_end) = cfg.split.bounds(rows);
    if val_end >= rows {
        return Err(Error::InvalidArgument(format!("{rows} rows leave no test rows after the split")));
    }
    let train = frame.slice(0..train_end);
    let validation = frame.slice(train_end..val_end);
    let test = frame.slice(val_end..rows);

    let selection_cfg = seeded_selection(&cfg.selection, seed);
    let (columns, trace) = if cfg.sets.is_empty() {
        (frame.features.column_names().to_vec(), None)
    } else {
        let trace = rank_observations(&train.features, &cfg.sets, &selection_cfg)?;
        let chosen: Vec<_> =
            trace.accepted_sets.iter().map(|n| cfg.sets.iter().find(|s| &s.name == n).unwrap()).collect();
        let cols = project(&train.features, &chosen)?.column_names().to_vec();
        (cols, Some(trace))
    };
    let train = train.select_columns_by_name(&columns)?;
    let validation = validation.select_columns_by_name(&columns)?;
    let test = test.select_columns_by_name(&columns)?;

    let (scaled, _) = normalize(&train.features, cfg.model.normalization)?;
    let train_si = selection_cfg.estimator.evaluate(&scaled)?;

    let dir = knn_fit(&train, cfg.model.k_direction, Target::Direction, cfg.model.normalization)?;
    let mag = knn_fit(&train, cfg.model.k_magnitude, Target::Magnitude, cfg.model.normalization)?;
    let score = |part: &LabeledFrame| -> Result<EvalReport> {
        let v = vote(&dir.predict(&part.features)?, &mag.predict(&part.features)?)?;
        evaluate_frame(&v, part)
    };
    let validation_report = if validation.rows() > 0 { Some(score(&validation)?) } else { None };
    Ok(RunOutcome {
        seed,
        selected_columns: columns,
        selection: trace,
        train_si,
        train_rows: train.rows(),
        validation_rows: validation.rows(),
        test_rows: test.rows(),
        train_end_timestamp: *train.timestamps.last().unwrap(),
        test_start_timestamp: test.timestamps[0],
        validation: validation_report,
        test: score(&test)?,
    })
}

/// Bars for one run: the CSV (gap-repaired) or the generator seeded with `seed`.
pub fn load_series(cfg: &PipelineConfig, seed: u64) -> Result<CandleSeries> {
    match (&cfg.input.candles, &cfg.input.synthetic) {
        (Some(path), None) => {
            let raw = ingest_csv(path)?;
            Ok(repair_gaps(&raw, cfg.features.max_gap_minutes)?.0)
        }
        (None, Some(src)) => src.generate(seed),
        _ => Err(Error::Config("exactly one of input.candles or input.synthetic is required".into())),
    }
}

pub fn run_experiment(series: &CandleSeries, cfg: &PipelineConfig, seed: u64) -> Result<(RunOutcome, FrameReport)> {
    let (frame, report) = build_frame(series, &cfg.features, cfg.split.train)?;
    Ok((run_on_frame(&frame, cfg, seed)?, report))
}

/// `cfg.model.seeds` runs with seeds `cfg.seed, cfg.seed + 1, ...`. Synthetic
/// input is regenerated per seed; file input is built once.
pub fn run_experiments(cfg: &PipelineConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let seeds: Vec<u64> = (0..cfg.model.seeds as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let runs = if cfg.input.synthetic.is_some() {
        seeds.iter().map(|&s| run_experiment(&load_series(cfg, s)?, cfg, s).map(|r| r.0)).collect::<Result<Vec<_>>>()?
    } else {
        let (frame, _) = build_frame(&load_series(cfg, cfg.seed)?, &cfg.features, cfg.split.train)?;
        seeds.iter().map(|&s| run_on_frame(&frame, cfg, s)).collect::<Result<Vec<_>>>()?
    };
    Ok(summarize(cfg.hash(), runs))
}

/// Reuses a frame built earlier (for example from a cache).
pub fn run_experiments_on_frame(frame: &LabeledFrame, cfg: &PipelineConfig) -> Result<ExperimentSummary> {
    cfg.validate_values()?;
    let runs = (0..cfg.model.seeds as u64)
        .map(|i| run_on_frame(frame, cfg, cfg.seed.wrapping_add(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(cfg.hash(), runs))
}

pub fn summarize(config_hash: String, runs: Vec<RunOutcome>) -> ExperimentSummary {
    let field = |f: &dyn Fn(&RunOutcome) -> f64| runs.iter().map(f).collect::<Vec<f64>>();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dir = field(&|r| r.test.accuracy_direction);
    let mag = field(&|r| r.test.accuracy_magnitude);
    let cov = field(&|r| r.test.coverage);
    let si = field(&|r| r.train_si.value);
    let ret: Vec<f64> = runs.iter().filter_map(|r| r.test.accuracy_retained).collect();
    let identical_runs = runs.windows(2).all(|w| w[0].test == w[1].test);
    ExperimentSummary {
        config_hash,
        mean: Aggregate {
            accuracy_direction: mean(&dir),
            accuracy_magnitude: mean(&mag),
            accuracy_retained: (!ret.is_empty()).then(|| mean(&ret)),
            coverage: mean(&cov),
            train_si: mean(&si),
        },
        max: Aggregate {
            accuracy_direction: max(&dir),
            accuracy_magnitude: max(&mag),
            accuracy_retained: (!ret.is_empty()).then(|| max(&ret)),
            coverage: max(&cov),
            train_si: max(&si),
        },
        runs,
        identical_runs,
    }
}

impl ExperimentSummary {
    pub fn to_table(&self) -> String {
        let pct = |v: f64| format!("{:.2}", 100.0 * v);
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), pct);
        let mut s = format!(
            "{:<24}{:>10}{:>10}{:>10}{:>10}{:>10}\n",
            "", "direction", "magnitude", "retained", "coverage", "train SI"
        );
        let n = self.runs.len();
        for (label, a) in [(format!("Ave. in {n} runs"), &self.mean), (format!("Max. in {n} runs"), &self.max)] {
            s.push_str(&format!(
                "{label:<24}{:>10}{:>10}{:>10}{:>10}{:>10}\n",
                pct(a.accuracy_direction),
                pct(a.accuracy_magnitude),
                opt(a.accuracy_retained),
                pct(a.coverage),
                pct(a.train_si)
            ));
        }
        if self.identical_runs && n > 1 {
            s.push_str("all runs identical (deterministic estimator and fixed input)\n");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::ObservationSet;
    use crate::synth::{Generator, SyntheticSource};

    fn cfg(generator: Generator) -> PipelineConfig {
        let mut c = PipelineConfig::from_json(r#"{"features":{"indicators":{"safe_dump_threshold":0.05}}}"#).unwrap();
        c.input.synthetic = Some(SyntheticSource { generator, bars: 3000, persistence: 0.9, start_price: 10_000.0 });
        c.features.columns = Some(vec!["close".into(), "roc".into(), "rsi".into()]);
        c.sets = vec![
            ObservationSet::new("momentum", ["roc"]),
            ObservationSet::new("price", ["close"]),
            ObservationSet::new("oscillator", ["rsi"]),
        ];
        c.model.seeds = 2;
        c
    }

    #[test]
    fn chronological_and_deterministic() {
        let c = cfg(Generator::PersistentTrend);
        let a = run_experiments(&c).unwrap();
        let b = run_experiments(&c).unwrap();
        assert_eq!(a, b);
        for r in &a.runs {
            assert!(r.train_end_timestamp < r.test_start_timestamp);
            assert_eq!(r.selection.as_ref().unwrap().seed_set, "momentum");
        }
        assert!(a.mean.accuracy_retained.unwrap() > 0.7);
        assert!(!a.identical_runs);
    }

    #[test]
    fn fixed_frame_runs_coincide() {
        let c = cfg(Generator::PersistentTrend);
        let series = load_series(&c, 5).unwrap();
        let (frame, _) = build_frame(&series, &c.features, c.split.train).unwrap();
        let s = run_experiments_on_frame(&frame, &c).unwrap();
        assert!(s.identical_runs);
        assert!(s.to_table().contains("Ave. in 2 runs"));
    }
}
