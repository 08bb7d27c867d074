//! Dataset assembly over the stair grid, the train/test split and CSV I/O.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{radar_height, INPUT_DIM, MOUNT_ANGLE_RAD, OUTPUT_DIM};
use crate::dimension::DimensionEstimate;
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, seeded_rng};
use crate::pipeline::{run_acquisition, PipelineConfig};
use crate::scene::{StaircaseSpec, WalkConfig};

/// One training example.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhancerSample {
    /// `(r1, theta1, r2, theta2, h_r, gamma)` with `r1 <= r2`.
    pub inputs: [f64; INPUT_DIM],
    /// True `(depth, height)`.
    pub labels: [f64; OUTPUT_DIM],
    pub scenario_id: String,
    pub frame_id: usize,
}

impl EnhancerSample {
    /// The initial estimator's `(depth, height)` for the same corner pair.
    pub fn initial_estimate(&self) -> [f64; 2] {
        let [r1, t1, r2, t2, ..] = self.inputs;
        let a = (r1 * t1.cos(), r1 * t1.sin());
        let b = (r2 * t2.cos(), r2 * t2.sin());
        let (lo, hi) = if a.0 <= b.0 { (a, b) } else { (b, a) };
        [hi.0 - lo.0, hi.1 - lo.1]
    }

    /// Mount height implied by `h_r` and `gamma`.
    pub fn mount_height(&self) -> f64 {
        self.inputs[4] / (self.inputs[5] + MOUNT_ANGLE_RAD).cos()
    }
}

/// Builds a sample from a frame's corner pair.
pub fn sample_from_estimate(
    est: &DimensionEstimate,
    mount_height_m: f64,
    labels: [f64; 2],
    scenario_id: &str,
    frame_id: usize,
) -> EnhancerSample {
    let mut corners = est.pair;
    corners.sort_by(|a, b| a.range_m.total_cmp(&b.range_m));
    EnhancerSample {
        inputs: [
            corners[0].range_m,
            corners[0].true_angle_rad,
            corners[1].range_m,
            corners[1].true_angle_rad,
            radar_height(mount_height_m, est.inclination_rad),
            est.inclination_rad,
        ],
        labels,
        scenario_id: scenario_id.to_string(),
        frame_id,
    }
}

fn centimetre_grid(lo: u32, hi: u32, step: u32) -> Vec<f64> {
    (lo..=hi)
        .step_by(step as usize)
        .map(|c| c as f64 / 100.0)
        .collect()
}

/// Stair grid and walks used to build the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub depths_m: Vec<f64>,
    pub heights_m: Vec<f64>,
    /// Mount heights `h_i` drawn per walk.
    pub mount_heights_m: Vec<f64>,
    pub walks_per_combination: usize,
    pub step_count: usize,
    pub foot_x_m: f64,
    /// Template for every walk; its seed and mount height are replaced per walk.
    pub walk: WalkConfig,
    pub seed: u64,
}

impl Default for SweepConfig {
    /// Depths 26-38 cm and heights 10-18 cm in 2 cm steps, `h_i` in 0.40-0.50 m.
    fn default() -> Self {
        Self {
            depths_m: centimetre_grid(26, 38, 2),
            heights_m: centimetre_grid(10, 18, 2),
            mount_heights_m: centimetre_grid(40, 50, 1),
            walks_per_combination: 10,
            step_count: 4,
            foot_x_m: 4.0,
            walk: WalkConfig::default(),
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn combinations(&self) -> Vec<(f64, f64)> {
        self.depths_m
            .iter()
            .flat_map(|&d| self.heights_m.iter().map(move |&h| (d, h)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.combinations().is_empty()
            || self.mount_heights_m.is_empty()
            || self.walks_per_combination == 0
        {
            return Err(Error::InvalidConfig(
                "sweep needs depths, heights, mount heights and at least one walk".into(),
            ));
        }
        if self.mount_heights_m.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::InvalidConfig("mount heights must be > 0".into()));
        }
        self.walk.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboCoverage {
    pub depth_m: f64,
    pub height_m: f64,
    pub walks: usize,
    pub frames: usize,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<EnhancerSample>,
    pub coverage: Vec<ComboCoverage>,
    pub warnings: Vec<String>,
}

/// `d30_h14_m45_w02`: depth, height and mount height in cm, walk index.
fn scenario_id(d: f64, h: f64, hi: f64, walk: usize) -> String {
    format!(
        "d{:02}_h{:02}_m{:02}_w{walk:02}",
        (d * 100.0).round(),
        (h * 100.0).round(),
        (hi * 100.0).round()
    )
}

/// Runs every walk of the sweep and keeps one sample per frame with a corner pair.
///
/// Walks run in parallel; the output order (combination, walk, frame) does not
/// depend on scheduling. Combinations without any corner pair produce a warning.
pub fn assemble_dataset(sweep: &SweepConfig, cfg: &PipelineConfig) -> Result<Dataset> {
    sweep.validate()?;
    cfg.validate()?;
    let combos = sweep.combinations();
    let jobs: Vec<(usize, usize)> = (0..combos.len())
        .flat_map(|c| (0..sweep.walks_per_combination).map(move |w| (c, w)))
        .collect();

    let results = jobs
        .par_iter()
        .map(|&(c, w)| {
            let (d, h) = combos[c];
            let walk_seed = derive_seed(sweep.seed, (c * sweep.walks_per_combination + w) as u64);
            let mut rng = seeded_rng(walk_seed);
            let hi = sweep.mount_heights_m[rng.random_range(0..sweep.mount_heights_m.len())];
            let spec = StaircaseSpec {
                depth_m: d,
                height_m: h,
                step_count: sweep.step_count,
                foot_x_m: sweep.foot_x_m,
            };
            let walk = WalkConfig {
                mount_height_m: hi,
                seed: derive_seed(walk_seed, 1),
                ..sweep.walk
            };
            let acq = run_acquisition(cfg, &spec, &walk, derive_seed(walk_seed, 2))?;
            let id = scenario_id(d, h, hi, w);
            let samples: Vec<EnhancerSample> = acq
                .frames
                .iter()
                .filter_map(|f| {
                    f.estimate
                        .map(|e| sample_from_estimate(&e, hi, [d, h], &id, f.frame_index))
                })
                .collect();
            Ok((c, acq.frames.len(), samples))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut coverage: Vec<ComboCoverage> = combos
        .iter()
        .map(|&(d, h)| ComboCoverage {
            depth_m: d,
            height_m: h,
            walks: 0,
            frames: 0,
            samples: 0,
        })
        .collect();
    let mut samples = Vec::new();
    for (c, frames, s) in results {
        coverage[c].walks += 1;
        coverage[c].frames += frames;
        coverage[c].samples += s.len();
        samples.extend(s);
    }
    let warnings: Vec<String> = coverage
        .iter()
        .filter(|c| c.samples == 0)
        .map(|c| {
            format!(
                "no corner pair found for depth {:.2} m, height {:.2} m",
                c.depth_m, c.height_m
            )
        })
        .collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Dataset {
        samples,
        coverage,
        warnings,
    })
}

/// Which groups form the test set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub seed: u64,
    /// Number of (depth, height) combinations held out.
    pub held_out_combinations: usize,
    /// Number of mount heights held out.
    pub held_out_mount_heights: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            held_out_combinations: 7,
            held_out_mount_heights: 2,
        }
    }
}

fn combo_key(s: &EnhancerSample) -> (i64, i64) {
    (
        (s.labels[0] * 1e4).round() as i64,
        (s.labels[1] * 1e4).round() as i64,
    )
}

fn mount_key(s: &EnhancerSample) -> i64 {
    (s.mount_height() * 100.0).round() as i64
}

fn pick<T: Ord + Copy>(keys: BTreeSet<T>, count: usize, rng: &mut impl Rng) -> BTreeSet<T> {
    let mut keys: Vec<T> = keys.into_iter().collect();
    keys.shuffle(rng);
    keys.into_iter().take(count).collect()
}

/// `(train, test)`: a sample is a test sample when its combination or its
/// mount height (to the centimetre) was drawn as held out. Sample order is kept.
pub fn split_dataset(
    samples: &[EnhancerSample],
    cfg: &SplitConfig,
) -> (Vec<EnhancerSample>, Vec<EnhancerSample>) {
    let mut rng = seeded_rng(derive_seed(cfg.seed, 0x5B17));
    let combos = pick(
        samples.iter().map(combo_key).collect(),
        cfg.held_out_combinations,
        &mut rng,
    );
    let mounts = pick(
        samples.iter().map(mount_key).collect(),
        cfg.held_out_mount_heights,
        &mut rng,
    );
    samples
        .iter()
        .cloned()
        .partition(|s| !(combos.contains(&combo_key(s)) || mounts.contains(&mount_key(s))))
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    r1_m: f64,
    theta1_rad: f64,
    r2_m: f64,
    theta2_rad: f64,
    hr_m: f64,
    gamma_rad: f64,
    d_true_m: f64,
    h_true_m: f64,
    scenario_id: String,
    frame_id: usize,
}

pub fn write_dataset_csv<W: Write>(w: W, samples: &[EnhancerSample]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for s in samples {
        let [r1_m, theta1_rad, r2_m, theta2_rad, hr_m, gamma_rad] = s.inputs;
        out.serialize(CsvRow {
            r1_m,
            theta1_rad,
            r2_m,
            theta2_rad,
            hr_m,
            gamma_rad,
            d_true_m: s.labels[0],
            h_true_m: s.labels[1],
            scenario_id: s.scenario_id.clone(),
            frame_id: s.frame_id,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset_csv<R: Read>(r: R) -> Result<Vec<EnhancerSample>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        let s = EnhancerSample {
            inputs: [
                row.r1_m,
                row.theta1_rad,
                row.r2_m,
                row.theta2_rad,
                row.hr_m,
                row.gamma_rad,
            ],
            labels: [row.d_true_m, row.h_true_m],
            scenario_id: row.scenario_id,
            frame_id: row.frame_id,
        };
        if s.inputs.iter().chain(&s.labels).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset row"));
        }
        out.push(s);
    }
    Ok(out)
}

/// SHA-256 of the dataset's CSV serialization.
pub fn fingerprint(samples: &[EnhancerSample]) -> String {
    let mut buf = Vec::new();
    write_dataset_csv(&mut buf, samples).expect("writing to memory cannot fail");
    hex::encode(Sha256::digest(&buf))
}
