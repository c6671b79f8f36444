//! Command-line front end. Every subcommand writes deterministic JSON into
//! `--out` and tags it with the relevant config hash.
//!
//! Exit codes: 0 success, 2 input or config error, 3 memory budget exceeded,
//! 4 stale or inconsistent artifact.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cache::{read_cache, write_cache, FeatureArtifact};
use crate::config::{canonical_hash, PipelineConfig};
use crate::error::{Error, Result};
use crate::features::candles::{ingest_csv, repair_gaps, CandleSeries};
use crate::features::labels::LabeledFrame;
use crate::features::pipeline::{build_frame, write_frame_csv};
use crate::matrix::{normalize, CsvLayout, FeatureMatrix, Normalization, Scaling};
use crate::models::experiment::{load_series, run_experiments, run_experiments_on_frame};
use crate::selection::{rank_observations, ObservationSet, SelectionConfig, SelectionMode, SelectionSpec};
use crate::si::{separation_index_with_budget, Estimator, DEFAULT_MEMORY_BUDGET, DEFAULT_TILE_ROWS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_STALE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "sepindex", version, about = "Separation Index, observation-set selection and a minute-bar pipeline")]
pub struct Cli {
    /// Pipeline config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the config's global seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a candle CSV, repair gaps, write a binary cache and a repair report.
    Ingest(IngestArgs),
    /// Compute indicators, lags and labels; write CSV, metadata and a cache.
    Features(FeaturesArgs),
    /// Separation Index of a labelled matrix.
    Si(SiArgs),
    /// Greedy observation-set selection.
    Select(SelectArgs),
    /// k-NN direction and magnitude models combined by vote, over several seeds.
    Evaluate(EvaluateArgs),
    /// Summarize the artifacts found in the output directory.
    Report,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Candle CSV (overrides `input.candles`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub max_gap: Option<i64>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Candle cache written by `ingest`; otherwise the config input is read.
    #[arg(long)]
    pub candles: Option<PathBuf>,
    /// Comma-separated lags (overrides `features.lags`).
    #[arg(long, value_delimiter = ',')]
    pub lags: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Exact,
    Tiled,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Direction,
    Magnitude,
}

/// Where a labelled matrix comes from.
#[derive(Debug, Args)]
pub struct MatrixSource {
    /// CSV with a `label` column (a `features` CSV also works).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Feature cache written by `features`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "direction")]
    pub target: TargetArg,
}

#[derive(Debug, Args)]
pub struct SiArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[arg(long, value_enum, default_value = "tiled")]
    pub estimator: EstimatorArg,
    /// Sample size for the sampled estimator.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TILE_ROWS)]
    pub tile: usize,
    #[arg(long, default_value = "minmax")]
    pub normalization: String,
    /// Memory budget for the exact estimator, in bytes.
    #[arg(long)]
    pub budget_bytes: Option<u128>,
    /// Restrict to these columns (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    /// Selection document (`{"sets": [...], "mode": ..., ...}`); otherwise the
    /// config's `sets` and `selection` are used.
    #[arg(long)]
    pub sets: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub passes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Feature cache written by `features`; must match the config.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub seeds: Option<usize>,
    /// k for both models.
    #[arg(long)]
    pub k: Option<usize>,
}

/// Maps an error to its process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::MemoryBudget { .. } => EXIT_BUDGET,
        Error::Stale { .. } | Error::Cache(_) => EXIT_STALE,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::MemoryBudget { .. }) {
                eprintln!("hint: pass --estimator tiled or --estimator sampled --sample <n>");
            }
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidArgument("--threads must be >= 1".into()));
        }
        // A second initialization in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let ctx = Context::new(cli)?;
    match &cli.command {
        Command::Ingest(a) => ctx.ingest(a),
        Command::Features(a) => ctx.features(a),
        Command::Si(a) => ctx.si(a),
        Command::Select(a) => ctx.select(a),
        Command::Evaluate(a) => ctx.evaluate(a),
        Command::Report => ctx.report(),
    }
}

struct Context {
    config: Option<PipelineConfig>,
    out: PathBuf,
    seed: Option<u64>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn with_hash<T: Serialize>(value: &T, hash: &str) -> Result<Value> {
    let mut v = serde_json::to_value(value)?;
    if let Value::Object(map) = &mut v {
        map.insert("config_hash".into(), Value::String(hash.to_owned()));
    }
    Ok(v)
}

impl Context {
    fn new(cli: &Cli) -> Result<Self> {
        let mut config = match &cli.config {
            Some(p) => Some(PipelineConfig::load(p)?),
            None => None,
        };
        if let (Some(cfg), Some(seed)) = (config.as_mut(), cli.seed) {
            cfg.seed = seed;
        }
        let out = match (&config, cli.out.as_path()) {
            (Some(PipelineConfig { output_dir: Some(dir), .. }), p) if p == Path::new("out") => dir.clone(),
            _ => cli.out.clone(),
        };
        std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        Ok(Context { config, out, seed: cli.seed })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn require_config(&self, what: &str) -> Result<&PipelineConfig> {
        self.config.as_ref().ok_or_else(|| Error::Config(format!("`{what}` needs --config")))
    }

    fn ingest(&self, args: &IngestArgs) -> Result<()> {
        let mut cfg = self.config.clone();
        let input = args
            .input
            .clone()
            .or_else(|| cfg.as_ref().and_then(|c| c.input.candles.clone()))
            .ok_or_else(|| Error::Config("no candle CSV: pass --input or set input.candles".into()))?;
        let max_gap = args
            .max_gap
            .or(cfg.as_ref().map(|c| c.features.max_gap_minutes))
            .unwrap_or(crate::features::candles::DEFAULT_MAX_GAP_MINUTES);
        if let Some(c) = cfg.as_mut() {
            c.input.candles = Some(input.clone());
            c.input.synthetic = None;
            c.features.max_gap_minutes = max_gap;
        }
        let hash = match &cfg {
            Some(c) => c.ingest_hash(),
            None => canonical_hash(&json!({
                "input": {"candles": input, "synthetic": null},
                "max_gap_minutes": max_gap,
            })),
        };
        let raw = ingest_csv(&input)?;
        let (series, report) = repair_gaps(&raw, max_gap)?;
        write_cache(self.path("candles.bin"), &series, &hash)?;
        let summary = json!({
            "config_hash": hash,
            "input": input,
            "bars_read": raw.len(),
            "bars_written": series.len(),
            "repair": report,
        });
        write_json(&self.path("repair_report.json"), &summary)?;
        println!(
            "ingested {} bars ({} inserted by interpolation) -> {}",
            series.len(),
            report.inserted_total,
            self.path("candles.bin").display()
        );
        Ok(())
    }

    fn features(&self, args: &FeaturesArgs) -> Result<()> {
        let mut cfg = self.require_config("features")?.clone();
        if let Some(lags) = &args.lags {
            cfg.features.lags = lags.clone();
        }
        cfg.validate_values()?;
        let series: CandleSeries = match &args.candles {
            Some(p) => read_cache(p, Some(&cfg.ingest_hash()))?.0,
            None => {
                cfg.validate()?;
                load_series(&cfg, cfg.seed)?
            }
        };
        let (frame, report) = build_frame(&series, &cfg.features, cfg.split.train)?;
        let hash = cfg.features_hash();
        let csv_path = self.path("features.csv");
        let file = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        write_frame_csv(&frame, std::io::BufWriter::new(file))?;
        let train = frame.features.slice_rows(0..report.train_rows);
        let scaling = Scaling::fit(&train, cfg.model.normalization)?;
        let meta = json!({
            "config_hash": hash,
            "report": report,
            "bin_edges": report.bin_edges,
            "normalization": scaling,
        });
        write_json(&self.path("features.meta.json"), &meta)?;
        write_cache(self.path("features.bin"), &FeatureArtifact { frame, report: report.clone() }, &hash)?;
        println!(
            "{} rows x {} columns ({} rows dropped for undefined values) -> {}",
            report.rows,
            report.columns,
            report.dropped_undefined,
            csv_path.display()
        );
        Ok(())
    }

    /// The labelled matrix for `si` and `select`, plus the hash describing it.
    fn matrix(&self, src: &MatrixSource) -> Result<(FeatureMatrix, String)> {
        let pick = |frame: &LabeledFrame| match src.target {
            TargetArg::Direction => Ok(frame.features.clone()),
            TargetArg::Magnitude => frame.magnitude_matrix(),
        };
        match (&src.input, &src.features) {
            (Some(_), Some(_)) => Err(Error::Config("pass either --input or --features, not both".into())),
            (Some(path), None) => {
                let (label, other) = match src.target {
                    TargetArg::Direction => ("label", "magnitude_class"),
                    TargetArg::Magnitude => ("magnitude_class", "label"),
                };
                let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
                let header =
                    String::from_utf8_lossy(text.split(|&b| b == b'\n').next().unwrap_or_default()).to_string();
                let has = |c: &str| header.trim_end().split(',').any(|h| h == c);
                let exclude = ["timestamp", other].iter().filter(|c| has(c)).map(|c| c.to_string()).collect();
                let layout = CsvLayout { label_column: label.into(), exclude };
                let m = FeatureMatrix::from_csv_reader(text.as_slice(), &layout)?;
                let hash = match &self.config {
                    Some(c) => c.features_hash(),
                    None => canonical_hash(&json!({ "input": path, "target": label })),
                };
                Ok((m, hash))
            }
            (None, Some(path)) => {
                let expected = self.config.as_ref().map(|c| c.features_hash());
                let (art, hash): (FeatureArtifact, String) = read_cache(path, expected.as_deref())?;
                Ok((pick(&art.frame)?, hash))
            }
            (None, None) => {
                let cfg = self.require_config("matrix input")?;
                cfg.validate()?;
                let series = load_series(cfg, cfg.seed)?;
                let (frame, report) = build_frame(&series, &cfg.features, cfg.split.train)?;
                let train = frame.slice(0..report.train_rows);
                Ok((pick(&train)?, cfg.features_hash()))
            }
        }
    }

    fn si(&self, args: &SiArgs) -> Result<()> {
        let (matrix, hash) = self.matrix(&args.source)?;
        let matrix = match &args.columns {
            Some(cols) => matrix.select_columns_by_name(cols)?,
            None => matrix,
        };
        let normalization: Normalization = args.normalization.parse()?;
        let (scaled, scaling) = normalize(&matrix, normalization)?;
        let m = scaled.rows();
        let seed = self.seed.or(self.config.as_ref().map(|c| c.seed)).unwrap_or(0);
        let result = match args.estimator {
            EstimatorArg::Exact => {
                separation_index_with_budget(&scaled, args.budget_bytes.unwrap_or(DEFAULT_MEMORY_BUDGET))?
            }
            EstimatorArg::Tiled => Estimator::Tiled { tile_rows: args.tile }.evaluate(&scaled)?,
            EstimatorArg::Sampled => {
                let sample_size = args
                    .sample
                    .ok_or_else(|| Error::InvalidArgument("--estimator sampled needs --sample <n>".into()))?;
                if sample_size > m {
                    return Err(Error::InvalidArgument(format!("--sample {sample_size} exceeds {m} rows")));
                }
                Estimator::Sampled { sample_size, seed }.evaluate(&scaled)?
            }
        };
        let out = json!({
            "config_hash": hash,
            "rows": m,
            "columns": scaled.column_names(),
            "normalization": normalization,
            "constant_columns": scaling.warnings,
            "value": result.value,
            "matched_count": result.matched_count,
            "m": result.m,
            "estimator": result.estimator,
            "standard_error": result.standard_error,
            "sample_size": result.sample_size,
            "seed": result.seed,
        });
        write_json(&self.path("si.json"), &out)?;
        println!("{}", serde_json::to_string(&out)?);
        Ok(())
    }

    fn select(&self, args: &SelectArgs) -> Result<()> {
        let (matrix, hash) = self.matrix(&args.source)?;
        let (sets, mut config): (Vec<ObservationSet>, SelectionConfig) = match &args.sets {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                let spec: SelectionSpec = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
                (spec.sets, spec.config)
            }
            None => {
                let cfg = self.require_config("select without --sets")?;
                (cfg.sets.clone(), cfg.selection.clone())
            }
        };
        if sets.is_empty() {
            return Err(Error::Config("no observation sets declared".into()));
        }
        if let Some(m) = &args.mode {
            config.mode = match m.as_str() {
                "ordered" => SelectionMode::Ordered,
                "best_first" => SelectionMode::BestFirst,
                other => return Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
            };
        }
        if args.margin.is_some() {
            config.margin = args.margin;
        }
        if let Some(p) = args.passes {
            config.passes = p;
        }
        if let (Some(seed), Estimator::Sampled { sample_size, .. }) = (self.seed, config.estimator) {
            config.estimator = Estimator::Sampled { sample_size, seed };
        }
        let trace = rank_observations(&matrix, &sets, &config)?;
        let spec_hash = canonical_hash(&json!({ "data": hash, "sets": sets, "selection": config }));
        write_json(&self.path("selection_trace.json"), &with_hash(&trace, &spec_hash)?)?;
        let csv_path = self.path("si_val.csv");
        let file = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        trace.write_si_val_csv(std::io::BufWriter::new(file)).map_err(|e| Error::io(&csv_path, e))?;
        println!("seed set: {} (SI {:.4})", trace.seed_set, trace.si_val[0]);
        for s in &trace.steps {
            let verdict = if s.accepted { "accepted" } else { "rejected" };
            println!("  {:<24} {:.4} -> {:.4}  {verdict}", s.candidate, s.si_before, s.si_candidate);
        }
        println!("final SI {:.4} with {:?}", trace.final_si, trace.accepted_sets);
        Ok(())
    }

    fn evaluate(&self, args: &EvaluateArgs) -> Result<()> {
        let mut cfg = self.require_config("evaluate")?.clone();
        if let Some(s) = args.seeds {
            cfg.model.seeds = s;
        }
        if let Some(k) = args.k {
            cfg.model.k_direction = k;
            cfg.model.k_magnitude = k;
        }
        cfg.validate_values()?;
        let summary = match &args.features {
            Some(p) => {
                let (art, _): (FeatureArtifact, _) = read_cache(p, Some(&cfg.features_hash()))?;
                run_experiments_on_frame(&art.frame, &cfg)?
            }
            None => run_experiments(&cfg)?,
        };
        write_json(&self.path("eval_report.json"), &summary)?;
        let table = summary.to_table();
        std::fs::write(self.path("eval_report.txt"), &table).map_err(|e| Error::io(self.path("eval_report.txt"), e))?;
        print!("{table}");
        Ok(())
    }

    fn report(&self) -> Result<()> {
        let read = |name: &str| -> Result<Option<Value>> {
            let p = self.path(name);
            if !p.is_file() {
                return Ok(None);
            }
            let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            Ok(Some(serde_json::from_str(&text)?))
        };
        let mut md = String::from("# sepindex report\n");
        let mut found = false;
        if let Some(v) = read("repair_report.json")? {
            found = true;
            md.push_str(&format!(
                "\n## Ingest\n\n- bars read: {}\n- bars after repair: {}\n- inserted by interpolation: {}\n",
                v["bars_read"], v["bars_written"], v["repair"]["inserted_total"]
            ));
        }
        if let Some(v) = read("features.meta.json")? {
            found = true;
            let r = &v["report"];
            md.push_str(&format!(
                "\n## Features\n\n- rows: {}\n- columns: {}\n- dropped (undefined values): {}\n- training rows: {}\n- bin edges: {}\n",
                r["rows"], r["columns"], r["dropped_undefined"], r["train_rows"], v["bin_edges"]
            ));
        }
        if let Some(v) = read("si.json")? {
            found = true;
            md.push_str(&format!(
                "\n## Separation Index\n\n- value: {}\n- estimator: {}\n- rows: {}\n- standard error: {}\n",
                v["value"], v["estimator"], v["rows"], v["standard_error"]
            ));
        }
        if let Some(v) = read("selection_trace.json")? {
            found = true;
            md.push_str(&format!("\n## Selection\n\nseed set: {}\n\n", v["seed_set"]));
            md.push_str("| candidate | SI before | SI with candidate | accepted |\n|---|---|---|---|\n");
            for s in v["steps"].as_array().into_iter().flatten() {
                md.push_str(&format!(
                    "| {} | {:.4} | {:.4} | {} |\n",
                    s["candidate"].as_str().unwrap_or_default(),
                    s["si_before"].as_f64().unwrap_or(f64::NAN),
                    s["si_candidate"].as_f64().unwrap_or(f64::NAN),
                    s["accepted"]
                ));
            }
            md.push_str(&format!("\nfinal SI: {}\n", v["final_si"]));
        }
        if self.path("eval_report.txt").is_file() {
            found = true;
            let table = std::fs::read_to_string(self.path("eval_report.txt"))
                .map_err(|e| Error::io(self.path("eval_report.txt"), e))?;
            md.push_str(&format!("\n## Evaluation (test split, %)\n\n```\n{table}```\n"));
        }
        if !found {
            return Err(Error::Empty(format!("no artifacts in {}", self.out.display())));
        }
        std::fs::write(self.path("report.md"), &md).map_err(|e| Error::io(self.path("report.md"), e))?;
        print!("{md}");
        Ok(())
    }
}
