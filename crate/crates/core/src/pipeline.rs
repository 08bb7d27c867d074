//! Frame-level composition: synthesis, processing and initial dimensioning.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chirp_sim::{synthesize_frame, ChirpCube, NoiseConfig, Scatterer};
use crate::dimension::{aggregate_median, estimate_initial, DimensionEstimate, StairStandards};
use crate::dsp::{process_frame, ProcessingConfig, TargetList};
use crate::enhancer::radar_height;
use crate::error::{Error, Result};
use crate::numerics::derive_seed;
use crate::rf_params::{derive_attributes, RadarConfig};
use crate::scene::{
    generate_walk, staircase_scatterers, ClutterConfig, GaitFrame, StaircaseSpec, Trajectory,
    WalkConfig,
};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "DIMRAD_THREADS";

/// Everything between a staircase and its target lists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub radar: RadarConfig,
    pub noise: NoiseConfig,
    pub clutter: ClutterConfig,
    pub processing: ProcessingConfig,
    pub standards: StairStandards,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        self.processing.range_cfar.validate()?;
        self.processing.aoa_cfar.validate()?;
        self.standards.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameOutput {
    pub frame_index: usize,
    pub targets: TargetList,
    pub estimate: Option<DimensionEstimate>,
}

#[derive(Debug, Clone)]
pub struct Acquisition {
    pub trajectory: Trajectory,
    pub frames: Vec<FrameOutput>,
}

impl Acquisition {
    pub fn estimates(&self) -> Vec<DimensionEstimate> {
        self.frames.iter().filter_map(|f| f.estimate).collect()
    }

    /// Median depth and height over frames with an estimate.
    pub fn aggregate(&self) -> Option<(f64, f64)> {
        aggregate_median(&self.estimates())
    }
}

/// Noise seed of frame `index` in an acquisition seeded with `seed`.
pub fn frame_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, 0x1000 + index as u64)
}

/// Synthesizes a frame and rounds it to the on-disk sample precision, so that
/// in-memory and file-based processing see identical data.
pub fn render_frame(
    radar: &RadarConfig,
    frame: &GaitFrame,
    scatterers: &[Scatterer],
    noise: &NoiseConfig,
    seed: u64,
) -> Result<ChirpCube> {
    let mut cube = synthesize_frame(radar, frame, scatterers, noise, seed)?;
    cube.quantize_to_f32();
    Ok(cube)
}

/// Target list plus initial estimate for one cube, using the inclination
/// recorded in the cube.
pub fn analyse_cube(
    cube: &ChirpCube,
    cfg: &PipelineConfig,
    mount_height_m: f64,
    frame_index: usize,
) -> Result<FrameOutput> {
    let targets = process_frame(cube, &cfg.processing)?;
    let gamma = cube.meta.inclination_rad;
    let estimate = estimate_initial(&targets, gamma, &cfg.standards).map(|mut e| {
        e.radar_height_m = Some(radar_height(mount_height_m, gamma));
        e
    });
    Ok(FrameOutput {
        frame_index,
        targets,
        estimate,
    })
}

/// Scatterers of the staircase (plus seeded clutter) for an acquisition.
pub fn scene_scatterers(
    spec: &StaircaseSpec,
    clutter: &ClutterConfig,
    seed: u64,
) -> Result<Vec<Scatterer>> {
    staircase_scatterers(spec, clutter, derive_seed(seed, 0xC0))
}

/// Walks toward `spec` and processes every frame; frames run in parallel and
/// results are returned in frame order.
pub fn run_acquisition(
    cfg: &PipelineConfig,
    spec: &StaircaseSpec,
    walk: &WalkConfig,
    seed: u64,
) -> Result<Acquisition> {
    cfg.validate()?;
    let attrs = derive_attributes(&cfg.radar)?;
    let trajectory = generate_walk(spec, walk, &attrs)?;
    let scatterers = scene_scatterers(spec, &cfg.clutter, seed)?;
    let frames = trajectory
        .frames
        .par_iter()
        .enumerate()
        .map(|(k, frame)| {
            let cube = render_frame(
                &cfg.radar,
                frame,
                &scatterers,
                &cfg.noise,
                frame_seed(seed, k),
            )?;
            analyse_cube(&cube, cfg, trajectory.mount_height_m, k)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Acquisition { trajectory, frames })
}

/// Worker count from `DIMRAD_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs `f` on a pool capped by `DIMRAD_THREADS` (the global pool otherwise).
pub fn with_worker_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    match thread_cap() {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}
