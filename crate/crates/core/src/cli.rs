//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 on validation or processing errors, 2 on usage
//! errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baseline::{BaselineConfig, BaselineKind};
use crate::error::{Error, Result};
use crate::gridgeom::{coverage_fraction, GridSpec, ScalingPolicy, DEFAULT_RESOLUTION};
use crate::io::predictions::{PredictionEntry, PredictionFile};
use crate::io::synth::MotionMix;
use crate::io::{self, hgrd};
use crate::losses::{grid_loss, LossConfig, LossKind};
use crate::metrics::{self, EvaluateOptions, GroundTruth, Horizon, PredictionSet};
use crate::pipeline::{self, PipelineConfig};
use crate::sampler::sample_pipeline;
use crate::scenario::Scenario;

/// Sample budgets swept by `evaluate --n-sweep`.
const SWEEP_SAMPLE_COUNTS: [usize; 11] = [1, 2, 3, 4, 5, 6, 10, 15, 20, 25, 30];

#[derive(Parser)]
#[command(
    name = "gridcast",
    version,
    about = "Heatmap-based motion forecasting toolkit: rasterize scenes, sample coordinates, evaluate predictions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate deterministic synthetic scenarios.
    Gen(GenArgs),
    /// Render a scenario into the 27-channel top-view raster (HGRD).
    Rasterize(RasterizeArgs),
    /// Predict an analytic baseline heatmap for one target (HGRD).
    PredictCv(PredictArgs),
    /// Sample coordinates with confidences from a heatmap.
    Sample(SampleArgs),
    /// Evaluate predictions (or the built-in baseline) against ground truth.
    Evaluate(EvaluateArgs),
    /// Ground-truth coverage fractions over a grid-scale sweep (CSV).
    SweepGrid(SweepGridArgs),
    /// Grid loss between a predicted and a target heatmap.
    Loss(LossArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    /// Number of scenarios.
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Motion class weights, e.g. `straight=0.5,left=0.25,right=0.25`.
    #[arg(long)]
    mix: Option<String>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PolicyKind {
    Static,
    Time,
    Velocity,
}

#[derive(Args)]
struct GridArgs {
    /// Grid scaling policy.
    #[arg(long = "ppm-policy", value_enum, default_value_t = PolicyKind::Static)]
    ppm_policy: PolicyKind,
    /// Pixels per meter for the static policy.
    #[arg(long, default_value_t = 1.0)]
    ppm: f64,
    /// Interpolate the time-based policy between the defined horizons.
    #[arg(long, default_value_t = false)]
    interpolate: bool,
    /// Grid resolution (pixels per side).
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: u32,
}

impl GridArgs {
    fn policy(&self) -> ScalingPolicy {
        match self.ppm_policy {
            PolicyKind::Static => ScalingPolicy::Static(self.ppm),
            PolicyKind::Time => ScalingPolicy::TimeBased {
                interpolate: self.interpolate,
            },
            PolicyKind::Velocity => ScalingPolicy::VelocityBased,
        }
    }
}

#[derive(Args)]
struct RasterizeArgs {
    /// Scenario JSON (single object or array).
    #[arg(long)]
    scenario: PathBuf,
    /// Index into a scenario array.
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Target track id; defaults to the scenario's first target.
    #[arg(long)]
    target: Option<i64>,
    /// Prediction horizon in seconds (needed by the time policy).
    #[arg(long)]
    horizon: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BaselineKindArg {
    Cv,
    Chr,
}

impl From<BaselineKindArg> for BaselineKind {
    fn from(kind: BaselineKindArg) -> Self {
        match kind {
            BaselineKindArg::Cv => BaselineKind::ConstantVelocity,
            BaselineKindArg::Chr => BaselineKind::ConstantHeadingRate,
        }
    }
}

#[derive(Args)]
struct BaselineArgs {
    /// Baseline motion model.
    #[arg(long = "kind", value_enum, default_value_t = BaselineKindArg::Cv)]
    kind: BaselineKindArg,
    /// Uncertainty floor, meters.
    #[arg(long, default_value_t = 1.0)]
    base_sigma: f64,
    /// Uncertainty growth per second of horizon, meters.
    #[arg(long, default_value_t = 0.5)]
    sigma_growth: f64,
    /// Multiply both sigma parameters (e.g. 3 for a miscalibrated baseline).
    #[arg(long, default_value_t = 1.0)]
    sigma_scale: f64,
}

impl BaselineArgs {
    fn config(&self) -> BaselineConfig {
        BaselineConfig {
            kind: self.kind.into(),
            base_sigma: self.base_sigma * self.sigma_scale,
            sigma_growth: self.sigma_growth * self.sigma_scale,
        }
    }
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[arg(long)]
    target: Option<i64>,
    /// Prediction horizon in seconds (3, 5 or 8).
    #[arg(long)]
    horizon: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    baseline: BaselineArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    /// Single-channel HGRD heatmap.
    #[arg(long)]
    heatmap: PathBuf,
    /// Target speed at t0, m/s (sizes the kernel).
    #[arg(long)]
    speed: f64,
    /// Prediction horizon in seconds (3, 5 or 8).
    #[arg(long)]
    horizon: f64,
    /// Number of coordinates to sample.
    #[arg(long, default_value_t = 6)]
    n: usize,
    /// Rescale confidences to sum to one.
    #[arg(long, default_value_t = false)]
    normalize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Scenario JSON (single object or array).
    #[arg(long)]
    scenarios: PathBuf,
    /// Prediction file to evaluate; without it the built-in baseline runs.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Horizons to evaluate, e.g. `3,5,8`.
    #[arg(long, default_value = "3,5,8")]
    horizons: String,
    /// Sample budget per horizon (1..=30).
    #[arg(long, default_value_t = 6)]
    n: usize,
    /// Emit a `n,horizon_s,miss_rate` CSV over the standard budget sweep
    /// instead of a metric report.
    #[arg(long, default_value_t = false)]
    n_sweep: bool,
    /// Add per-bucket breakdowns to the report.
    #[arg(long, default_value_t = false)]
    per_bucket: bool,
    /// Keep raw convolved confidences instead of normalizing them per target.
    #[arg(long, default_value_t = false)]
    raw_confidences: bool,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    baseline: BaselineArgs,
    /// Also write the baseline predictions as a prediction file (needs n <= 6).
    #[arg(long)]
    emit_predictions: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepGridArgs {
    #[arg(long)]
    scenarios: PathBuf,
    /// Comma-separated pixels-per-meter values.
    #[arg(long, default_value = "1,2,3")]
    ppm: String,
    #[arg(long, default_value = "3,5,8")]
    horizons: String,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LossKindArg {
    Focal,
    Ce,
}

#[derive(Args)]
struct LossArgs {
    /// Predicted heatmap (single-channel HGRD).
    #[arg(long)]
    pred: PathBuf,
    /// Target heatmap (single-channel HGRD).
    #[arg(long)]
    target: PathBuf,
    #[arg(long, value_enum, default_value_t = LossKindArg::Focal)]
    kind: LossKindArg,
    /// Focal modulating exponent.
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    /// Focal negative-weighting exponent.
    #[arg(long, default_value_t = 4.0)]
    beta: f64,
}

/// Parse and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version print to stdout and exit 0; real usage
            // errors go to stderr with exit 2.
            let is_usage_error = err.use_stderr();
            let _ = err.print();
            return if is_usage_error { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Gen(args) => cmd_gen(args),
        Command::Rasterize(args) => cmd_rasterize(args),
        Command::PredictCv(args) => cmd_predict(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::SweepGrid(args) => cmd_sweep_grid(args),
        Command::Loss(args) => cmd_loss(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let mix = match &args.mix {
        Some(s) => MotionMix::parse(s)?,
        None => MotionMix::default(),
    };
    let scenarios = io::generate_synthetic(args.seed, args.count, &mix)?;
    match &args.out {
        Some(path) => io::save_scenarios(path, &scenarios)?,
        None => emit_json(&scenarios, None)?,
    }
    Ok(())
}

fn pick_scenario(path: &Path, index: usize) -> Result<Scenario> {
    let mut scenarios = io::load_scenarios(path)?;
    if index >= scenarios.len() {
        return Err(Error::InvalidArgument(format!(
            "scenario index {index} out of range ({} scenarios)",
            scenarios.len()
        )));
    }
    Ok(scenarios.swap_remove(index))
}

fn pick_target(scenario: &Scenario, requested: Option<i64>) -> Result<i64> {
    match requested {
        Some(id) => {
            if scenario.track(id).is_none() {
                return Err(Error::TargetNotFound(id));
            }
            Ok(id)
        }
        None => scenario
            .targets
            .first()
            .copied()
            .ok_or_else(|| Error::InvalidArgument("scenario has no targets".into())),
    }
}

fn target_grid(
    scenario: &Scenario,
    target_id: i64,
    horizon: Option<f64>,
    grid: &GridArgs,
) -> Result<GridSpec> {
    let track = scenario
        .track(target_id)
        .ok_or(Error::TargetNotFound(target_id))?;
    let current = track.current();
    // The velocity policy ignores the horizon; default it so `rasterize`
    // works without one.
    let t = horizon.unwrap_or(8.0);
    let ppm = grid.policy().pixels_per_meter(current.speed, t)?;
    GridSpec::agent_centered(
        grid.resolution,
        grid.resolution,
        ppm,
        current.position(),
        current.yaw,
    )
}

fn cmd_rasterize(args: RasterizeArgs) -> Result<()> {
    let scenario = pick_scenario(&args.scenario, args.index)?;
    let target = pick_target(&scenario, args.target)?;
    let spec = target_grid(&scenario, target, args.horizon, &args.grid)?;
    let top_view = crate::raster::build_top_view(&scenario, target, &spec)?;
    hgrd::write_hgrd(&args.out, &top_view.raster)
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let scenario = pick_scenario(&args.scenario, args.index)?;
    let target = pick_target(&scenario, args.target)?;
    let horizon = Horizon::from_seconds(args.horizon)?;
    let cfg = PipelineConfig {
        policy: args.grid.policy(),
        baseline: args.baseline.config(),
        resolution: args.grid.resolution,
        ..PipelineConfig::default()
    };
    let heatmap = pipeline::predict_target_heatmap(&scenario, target, horizon, &cfg)?;
    hgrd::write_hgrd(&args.out, &heatmap.into())
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    let heatmap = hgrd::read_heatmap(&args.heatmap)?;
    let horizon = Horizon::from_seconds(args.horizon)?;
    let samples = sample_pipeline(&heatmap, args.speed, horizon, args.n, args.normalize)?;
    emit_json(&samples, args.out.as_deref())
}

fn parse_horizons(s: &str) -> Result<Vec<Horizon>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let t: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad horizon '{p}'")))?;
            Horizon::from_seconds(t)
        })
        .collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad number '{p}'")))
        })
        .collect()
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let scenarios = io::load_scenarios(&args.scenarios)?;
    let horizons = parse_horizons(&args.horizons)?;
    if args.n == 0 || args.n > 30 {
        return Err(Error::InvalidArgument(format!(
            "sample budget {} outside 1..=30",
            args.n
        )));
    }
    let cfg = PipelineConfig {
        policy: args.grid.policy(),
        baseline: args.baseline.config(),
        num_samples: args.n,
        normalize_confidences: !args.raw_confidences,
        resolution: args.grid.resolution,
        horizons: horizons.clone(),
    };

    if args.n_sweep {
        if args.predictions.is_some() {
            return Err(Error::InvalidArgument(
                "--n-sweep regenerates predictions and cannot be combined with --predictions"
                    .into(),
            ));
        }
        let rows = pipeline::miss_rate_vs_samples(&scenarios, &cfg, &SWEEP_SAMPLE_COUNTS)?;
        let mut csv = String::from("n,horizon_s,miss_rate\n");
        for (n, horizon, mr) in rows {
            csv.push_str(&format!("{n},{},{mr:.6}\n", horizon.label()));
        }
        return emit_text(&csv, args.out.as_deref());
    }

    let (preds, gts) = match &args.predictions {
        Some(path) => aligned_from_file(&scenarios, path, args.n)?,
        None => pipeline::run_baseline(&scenarios, &cfg)?,
    };
    if let Some(path) = &args.emit_predictions {
        let file = prediction_file_from_sets(&scenarios, &cfg)?;
        io::save_predictions(path, &file)?;
    }
    let report = metrics::evaluate(
        &preds,
        &gts,
        &EvaluateOptions {
            horizons,
            per_bucket: args.per_bucket,
            bucket_config: Default::default(),
        },
    )?;
    emit_json(&report, args.out.as_deref())
}

/// Align a prediction file against the scenario set's targets; targets with
/// no file entry get an empty prediction set (counted as misses).
fn aligned_from_file(
    scenarios: &[Scenario],
    path: &Path,
    n: usize,
) -> Result<(Vec<PredictionSet>, Vec<GroundTruth>)> {
    let file = io::load_predictions(path)?;
    let by_target = file.by_target();
    let mut preds = Vec::new();
    let mut gts = Vec::new();
    for (i, scenario) in scenarios.iter().enumerate() {
        for &target_id in &scenario.targets {
            let track = scenario
                .track(target_id)
                .ok_or(Error::TargetNotFound(target_id))?;
            if !track.current().valid {
                continue;
            }
            let set = match by_target.get(&(i, target_id)) {
                Some(entry) => entry.to_prediction_set()?.truncated(n),
                None => PredictionSet::new(target_id),
            };
            preds.push(set);
            gts.push(GroundTruth::from_track(track, scenario.timestep_s)?);
        }
    }
    Ok((preds, gts))
}

fn prediction_file_from_sets(
    scenarios: &[Scenario],
    cfg: &PipelineConfig,
) -> Result<PredictionFile> {
    let mut entries = Vec::new();
    for (i, scenario) in scenarios.iter().enumerate() {
        for &target_id in &scenario.targets {
            let track = scenario
                .track(target_id)
                .ok_or(Error::TargetNotFound(target_id))?;
            if !track.current().valid {
                continue;
            }
            let samples = pipeline::sample_target(scenario, target_id, cfg)?;
            entries.push(PredictionEntry::from_samples(i, target_id, &samples)?);
        }
    }
    Ok(PredictionFile {
        predictions: entries,
    })
}

fn cmd_sweep_grid(args: SweepGridArgs) -> Result<()> {
    let scenarios = io::load_scenarios(&args.scenarios)?;
    let horizons = parse_horizons(&args.horizons)?;
    let ppms = parse_f64_list(&args.ppm)?;
    let mut csv = String::from("ppm,horizon_s,coverage_fraction\n");
    for &ppm in &ppms {
        for &horizon in &horizons {
            let mut dataset = Vec::new();
            for scenario in &scenarios {
                for &target_id in &scenario.targets {
                    let track = scenario
                        .track(target_id)
                        .ok_or(Error::TargetNotFound(target_id))?;
                    let current = track.current();
                    if !current.valid {
                        continue;
                    }
                    let Some(gt) = track.future_at(horizon.seconds(), scenario.timestep_s) else {
                        continue;
                    };
                    let spec = GridSpec::agent_centered(
                        args.resolution,
                        args.resolution,
                        ppm,
                        current.position(),
                        current.yaw,
                    )?;
                    dataset.push((gt.position(), spec));
                }
            }
            let coverage = coverage_fraction(&dataset)?;
            csv.push_str(&format!("{ppm},{},{coverage:.6}\n", horizon.label()));
        }
    }
    emit_text(&csv, args.out.as_deref())
}

fn cmd_loss(args: LossArgs) -> Result<()> {
    let pred = hgrd::read_heatmap(&args.pred)?;
    let target = hgrd::read_heatmap(&args.target)?;
    let cfg = LossConfig {
        kind: match args.kind {
            LossKindArg::Focal => LossKind::Focal,
            LossKindArg::Ce => LossKind::CrossEntropy,
        },
        focal_alpha: args.alpha,
        focal_beta: args.beta,
        ..LossConfig::default()
    };
    let value = grid_loss(&pred, &target, &cfg)?;
    println!("{value}");
    Ok(())
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            let mut writer = std::io::BufWriter::new(file);
            serde_json::to_writer_pretty(&mut writer, value)?;
            writer.write_all(b"\n")?;
            writer.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, value)?;
            lock.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn emit_text(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
