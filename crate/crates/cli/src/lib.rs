//! Subcommands of the `stair-radar` tool.
//!
//! Run directory layout:
//!
//! ```text
//! <out>/cubes/frame_NNNN.cube   simulate
//! <out>/truth.json              simulate (corners, true dimensions, per-frame pose)
//! <out>/targets.jsonl           process
//! <out>/report.json             process
//! <out>/dataset.csv             sweep
//! <out>/model.json              train
//! <out>/eval/                   evaluate
//! <out>/manifest-<cmd>.json     every command
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stair_radar::chirp_sim::{read_cube_file, write_cube_file, NoiseConfig, CUBE_MAGIC};
use stair_radar::dimension::{aggregate_median, StairStandards};
use stair_radar::dsp::{write_jsonl, CfarThreshold, ProcessingConfig};
use stair_radar::enhancer::{
    assemble_dataset, read_dataset_csv, split_dataset, train, write_dataset_csv, EnhancerModel,
    EpochLoss,
};
use stair_radar::eval::{compare_estimators, evaluate_enhancer, Improvement};
use stair_radar::experiment::ExperimentConfig;
use stair_radar::pipeline::{
    analyse_cube, render_frame, run_acquisition, scene_scatterers, with_worker_pool, FrameOutput,
    PipelineConfig,
};
use stair_radar::rf_params::RadarConfig;
use stair_radar::scene::{
    corners_of, generate_walk, ClutterConfig, Point2, StaircaseSpec, Trajectory, WalkConfig,
};
use stair_radar::{derive_attributes, pipeline::frame_seed};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] stair_radar::Error),
    #[error("{0}")]
    Usage(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    /// 2 for filesystem failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_io() => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// One simulated acquisition and how to process it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub radar: RadarConfig,
    pub staircase: StaircaseSpec,
    /// The walk's own seed is replaced by the scenario seed.
    pub walk: WalkConfig,
    pub noise: NoiseConfig,
    pub clutter: ClutterConfig,
    pub processing: ProcessingConfig,
    pub standards: StairStandards,
    pub seed: u64,
}

impl ScenarioFile {
    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            radar: self.radar,
            noise: self.noise,
            clutter: self.clutter,
            processing: self.processing,
            standards: self.standards,
        }
    }

    pub fn effective_walk(&self) -> WalkConfig {
        WalkConfig {
            seed: self.seed,
            ..self.walk
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.pipeline().validate()?;
        self.staircase.validate()?;
        self.walk.validate()?;
        Ok(())
    }
}

/// Options shared by the processing commands.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProcessingFlags {
    pub exhaustive_aoa: bool,
    pub peak_interp: bool,
    pub cfar_pfa: Option<f64>,
}

impl ProcessingFlags {
    pub fn apply(&self, p: &mut ProcessingConfig) {
        p.exhaustive_aoa |= self.exhaustive_aoa;
        p.peak_interp |= self.peak_interp;
        if let Some(pfa) = self.cfar_pfa {
            p.range_cfar.threshold = CfarThreshold::FalseAlarmRate(pfa);
        }
    }
}

/// Reads a JSON config, or the defaults when no path is given.
pub fn load_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> CliResult<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    /// SHA-256 of the resolved configuration as compact JSON.
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub tool_version: String,
    pub cube_format: String,
    pub outputs: Vec<String>,
}

fn write_manifest<T: Serialize>(
    out: &Path,
    command: &str,
    seed: u64,
    config: &T,
    outputs: &[&str],
) -> CliResult<()> {
    let value = serde_json::to_value(config)?;
    let compact = serde_json::to_vec(&value)?;
    let manifest = Manifest {
        command: command.to_string(),
        seed,
        config_sha256: hex::encode(Sha256::digest(&compact)),
        config: value,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        cube_format: String::from_utf8_lossy(CUBE_MAGIC).into_owned(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    };
    write_json(&out.join(format!("manifest-{command}.json")), &manifest)
}

/// Ground-truth sidecar of a simulated acquisition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub depth_m: f64,
    pub height_m: f64,
    pub staircase: StaircaseSpec,
    pub corners: Vec<Point2>,
    pub trajectory: Trajectory,
}

pub fn cube_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("frame_{index:04}.cube"))
}

#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub cube_files: Vec<PathBuf>,
    pub truth_file: PathBuf,
}

/// Writes one cube per frame plus `truth.json`.
pub fn cmd_simulate(scenario: &ScenarioFile, out: &Path) -> CliResult<SimulateSummary> {
    scenario.validate()?;
    let attrs = derive_attributes(&scenario.radar)?;
    let walk = scenario.effective_walk();
    let trajectory = generate_walk(&scenario.staircase, &walk, &attrs)?;
    let scatterers = scene_scatterers(&scenario.staircase, &scenario.clutter, scenario.seed)?;
    let cubes_dir = out.join("cubes");
    fs::create_dir_all(&cubes_dir)?;

    let cube_files = with_worker_pool(|| {
        use rayon::prelude::*;
        trajectory
            .frames
            .par_iter()
            .enumerate()
            .map(|(k, frame)| {
                let cube = render_frame(
                    &scenario.radar,
                    frame,
                    &scatterers,
                    &scenario.noise,
                    frame_seed(scenario.seed, k),
                )?;
                let path = cube_path(&cubes_dir, k);
                write_cube_file(&path, &cube)?;
                Ok(path)
            })
            .collect::<stair_radar::Result<Vec<_>>>()
    })??;

    let truth = TruthFile {
        depth_m: scenario.staircase.depth_m,
        height_m: scenario.staircase.height_m,
        staircase: scenario.staircase,
        corners: corners_of(&scenario.staircase)?.0,
        trajectory,
    };
    let truth_file = out.join("truth.json");
    write_json(&truth_file, &truth)?;
    write_json(&out.join("scenario.json"), scenario)?;
    write_manifest(
        out,
        "simulate",
        scenario.seed,
        scenario,
        &["cubes/", "truth.json", "scenario.json"],
    )?;
    Ok(SimulateSummary {
        cube_files,
        truth_file,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub frame_index: usize,
    pub timestamp_s: f64,
    /// `None` when the frame produced no acceptable corner pair.
    pub depth_m: Option<f64>,
    pub height_m: Option<f64>,
    pub radar_height_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateEstimate {
    pub depth_m: f64,
    pub height_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessReport {
    pub frame_count: usize,
    pub frames_with_estimate: usize,
    /// Median over frames; `None` when no frame produced an estimate.
    pub aggregate: Option<AggregateEstimate>,
    pub frames: Vec<FrameReport>,
}

impl ProcessReport {
    pub fn from_frames(frames: &[FrameOutput]) -> Self {
        let estimates: Vec<_> = frames.iter().filter_map(|f| f.estimate).collect();
        ProcessReport {
            frame_count: frames.len(),
            frames_with_estimate: estimates.len(),
            aggregate: aggregate_median(&estimates)
                .map(|(depth_m, height_m)| AggregateEstimate { depth_m, height_m }),
            frames: frames
                .iter()
                .map(|f| FrameReport {
                    frame_index: f.frame_index,
                    timestamp_s: f.targets.timestamp_s,
                    depth_m: f.estimate.map(|e| e.depth_m),
                    height_m: f.estimate.map(|e| e.height_m),
                    radar_height_m: f.estimate.and_then(|e| e.radar_height_m),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProcessSummary {
    pub frames: Vec<FrameOutput>,
    pub report: ProcessReport,
}

/// Target lists and per-acquisition report, from cube files when `cubes` is
/// given and from in-memory synthesis of the scenario otherwise.
pub fn cmd_process(
    scenario: &ScenarioFile,
    cubes: Option<&Path>,
    flags: ProcessingFlags,
    out: &Path,
) -> CliResult<ProcessSummary> {
    let mut scenario = *scenario;
    flags.apply(&mut scenario.processing);
    scenario.validate()?;
    let cfg = scenario.pipeline();
    fs::create_dir_all(out)?;

    let frames = match cubes {
        Some(dir) => {
            let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "cube"))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(CliError::Usage(format!(
                    "no .cube files in {}",
                    dir.display()
                )));
            }
            with_worker_pool(|| {
                use rayon::prelude::*;
                paths
                    .par_iter()
                    .enumerate()
                    .map(|(k, p)| {
                        let cube = read_cube_file(p, &cfg.radar)?;
                        analyse_cube(&cube, &cfg, scenario.walk.mount_height_m, k)
                    })
                    .collect::<stair_radar::Result<Vec<_>>>()
            })??
        }
        None => {
            with_worker_pool(|| {
                run_acquisition(
                    &cfg,
                    &scenario.staircase,
                    &scenario.effective_walk(),
                    scenario.seed,
                )
            })??
            .frames
        }
    };

    let lists: Vec<_> = frames.iter().map(|f| f.targets.clone()).collect();
    let file = fs::File::create(out.join("targets.jsonl"))?;
    write_jsonl(std::io::BufWriter::new(file), &lists)?;
    let report = ProcessReport::from_frames(&frames);
    write_json(&out.join("report.json"), &report)?;
    write_manifest(
        out,
        "process",
        scenario.seed,
        &scenario,
        &["targets.jsonl", "report.json"],
    )?;
    Ok(ProcessSummary { frames, report })
}

/// Builds `dataset.csv` over the sweep grid; coverage goes to `sweep.json`.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path) -> CliResult<stair_radar::enhancer::Dataset> {
    fs::create_dir_all(out)?;
    let dataset = with_worker_pool(|| assemble_dataset(&cfg.sweep, &cfg.pipeline))??;
    let file = fs::File::create(out.join("dataset.csv"))?;
    write_dataset_csv(std::io::BufWriter::new(file), &dataset.samples)?;
    #[derive(Serialize)]
    struct SweepReport<'a> {
        sample_count: usize,
        coverage: &'a [stair_radar::enhancer::ComboCoverage],
        warnings: &'a [String],
    }
    write_json(
        &out.join("sweep.json"),
        &SweepReport {
            sample_count: dataset.samples.len(),
            coverage: &dataset.coverage,
            warnings: &dataset.warnings,
        },
    )?;
    write_manifest(
        out,
        "sweep",
        cfg.sweep.seed,
        cfg,
        &["dataset.csv", "sweep.json"],
    )?;
    Ok(dataset)
}

fn read_dataset(path: &Path) -> CliResult<Vec<stair_radar::enhancer::EnhancerSample>> {
    let file = fs::File::open(path)?;
    Ok(read_dataset_csv(std::io::BufReader::new(file))?)
}

/// Trains on the training split of `dataset` and writes `model.json` plus
/// `training.json` (the loss curve).
pub fn cmd_train(
    cfg: &ExperimentConfig,
    dataset: &Path,
    out: &Path,
) -> CliResult<(EnhancerModel, Vec<EpochLoss>)> {
    fs::create_dir_all(out)?;
    let samples = read_dataset(dataset)?;
    let (train_set, _) = split_dataset(&samples, &cfg.split);
    let outcome = train(&train_set, &cfg.train)?;
    outcome.model.save(&out.join("model.json"))?;
    write_json(&out.join("training.json"), &outcome.history)?;
    write_manifest(
        out,
        "train",
        cfg.train.seed,
        cfg,
        &["model.json", "training.json"],
    )?;
    Ok((outcome.model, outcome.history))
}

/// Scores `model` against the initial estimator on the test split; writes
/// `eval/report.json`, `eval/improvement.json` and the histogram CSVs.
pub fn cmd_evaluate(
    cfg: &ExperimentConfig,
    dataset: &Path,
    model: &Path,
    out: &Path,
) -> CliResult<Improvement> {
    let samples = read_dataset(dataset)?;
    let (_, test_set) = split_dataset(&samples, &cfg.split);
    if test_set.is_empty() {
        return Err(CliError::Usage("the split leaves no test samples".into()));
    }
    let model = EnhancerModel::load(model)?;
    let report = evaluate_enhancer(&model, &test_set)?;
    let improvement = compare_estimators(&report);
    let dir = out.join("eval");
    report.write_dir(&dir)?;
    write_json(&dir.join("improvement.json"), &improvement)?;
    write_manifest(out, "evaluate", cfg.split.seed, cfg, &["eval/"])?;
    Ok(improvement)
}
