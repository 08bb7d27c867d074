//! Ground-truth staircase geometry and the walking approach that carries the radar.
//!
//! World frame: `x` horizontal toward the staircase, `y` vertical up, floor at
//! `y = 0`. Everything lives in the sagittal plane.
//!
//! Inclination `gamma` is the signed angle of the radar boresight above the
//! horizontal (negative when pointing below the horizon). The radar sits on the
//! tibia with a fixed tilt of -20 deg, so an upright tibia gives `gamma = -20 deg`
//! and the radar height is `h_i * cos(gamma + 20 deg)`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::chirp_sim::Scatterer;
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, seeded_rng};
use crate::rf_params::DerivedAttributes;
use crate::units::degrees;

/// Fixed offset between the tibia axis and the radar boresight.
pub const MOUNT_TILT_RAD: f64 = -20.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

/// A uniform staircase: every step has the same depth and height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaircaseSpec {
    pub depth_m: f64,
    pub height_m: f64,
    pub step_count: usize,
    /// Horizontal position of the first riser's base.
    pub foot_x_m: f64,
}

impl Default for StaircaseSpec {
    fn default() -> Self {
        Self {
            depth_m: 0.30,
            height_m: 0.15,
            step_count: 4,
            foot_x_m: 4.0,
        }
    }
}

impl StaircaseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.step_count < 2 {
            return Err(Error::InvalidConfig(
                "a staircase needs at least 2 steps".into(),
            ));
        }
        for (name, v) in [("depth_m", self.depth_m), ("height_m", self.height_m)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if !self.foot_x_m.is_finite() {
            return Err(Error::NonFinite("staircase foot position"));
        }
        Ok(())
    }
}

/// Convex step edges ordered by ascending `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerSet(pub Vec<Point2>);

impl CornerSet {
    pub fn points(&self) -> &[Point2] {
        &self.0
    }
}

/// Corner `k` sits at `(foot_x + k d, (k + 1) h)`.
pub fn corners_of(spec: &StaircaseSpec) -> Result<CornerSet> {
    spec.validate()?;
    Ok(CornerSet(
        (0..spec.step_count)
            .map(|k| {
                Point2::new(
                    spec.foot_x_m + k as f64 * spec.depth_m,
                    (k + 1) as f64 * spec.height_m,
                )
            })
            .collect(),
    ))
}

/// Extra weak scatterers scattered over treads and risers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClutterConfig {
    pub count: usize,
    pub reflectivity: f64,
}

impl Default for ClutterConfig {
    fn default() -> Self {
        Self {
            count: 0,
            reflectivity: 0.1,
        }
    }
}

/// Scatterers of a staircase: one unit-reflectivity point per corner plus
/// optional seeded clutter on the step surfaces.
pub fn staircase_scatterers(
    spec: &StaircaseSpec,
    clutter: &ClutterConfig,
    seed: u64,
) -> Result<Vec<Scatterer>> {
    let corners = corners_of(spec)?;
    let mut out: Vec<Scatterer> = corners
        .points()
        .iter()
        .map(|&p| Scatterer::stationary(p, 1.0))
        .collect();
    let mut rng = seeded_rng(derive_seed(seed, 0xC1u64));
    for _ in 0..clutter.count {
        let step = rng.random_range(0..spec.step_count) as f64;
        let u: f64 = rng.random_range(0.05..0.95);
        let p = if rng.random_bool(0.5) {
            // tread of step k
            Point2::new(
                spec.foot_x_m + (step - 1.0 + u) * spec.depth_m,
                step * spec.height_m,
            )
        } else {
            // riser of step k
            Point2::new(
                spec.foot_x_m + step * spec.depth_m,
                (step + u) * spec.height_m,
            )
        };
        out.push(Scatterer::stationary(p, clutter.reflectivity));
    }
    Ok(out)
}

/// Radar pose at one sampling instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitFrame {
    pub timestamp_s: f64,
    pub radar_origin: Point2,
    /// Inclination reported by the IMU (what the processing chain sees).
    #[serde(rename = "inclination_deg", with = "degrees")]
    pub inclination_rad: f64,
    /// Actual boresight inclination (what the simulator renders).
    #[serde(rename = "true_inclination_deg", with = "degrees")]
    pub true_inclination_rad: f64,
    pub host_velocity_mps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub frames: Vec<GaitFrame>,
    pub mount_height_m: f64,
    #[serde(rename = "mount_tilt_deg", with = "degrees")]
    pub mount_tilt_rad: f64,
}

/// Parameters of a straight constant-speed approach with sinusoidal tibia sway.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    pub start_standoff_m: f64,
    pub end_standoff_m: f64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub mount_height_m: f64,
    #[serde(rename = "sway_amplitude_deg", with = "degrees")]
    pub sway_amplitude_rad: f64,
    pub sway_frequency_hz: f64,
    /// Standard deviation of the seeded jitter on the true inclination.
    #[serde(rename = "sway_jitter_deg", with = "degrees")]
    pub sway_jitter_rad: f64,
    /// Standard deviation of the IMU measurement error.
    #[serde(rename = "imu_noise_deg", with = "degrees")]
    pub imu_noise_rad: f64,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            start_standoff_m: 4.0,
            end_standoff_m: 0.5,
            duration_s: 5.0,
            sample_rate_hz: 10.0,
            mount_height_m: 0.45,
            sway_amplitude_rad: 10f64.to_radians(),
            sway_frequency_hz: 1.0,
            sway_jitter_rad: 1f64.to_radians(),
            imu_noise_rad: 0.5f64.to_radians(),
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) || !self.sample_rate_hz.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "sample rate must be > 0, got {}",
                self.sample_rate_hz
            )));
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "duration must be > 0, got {}",
                self.duration_s
            )));
        }
        if !(self.mount_height_m > 0.0) || !self.mount_height_m.is_finite() {
            return Err(Error::InvalidConfig("mount height must be > 0".into()));
        }
        if !(self.end_standoff_m >= 0.0) || !(self.start_standoff_m >= self.end_standoff_m) {
            return Err(Error::InvalidConfig(format!(
                "standoffs must satisfy start >= end >= 0, got {} -> {}",
                self.start_standoff_m, self.end_standoff_m
            )));
        }
        for (name, v) in [
            ("sway amplitude", self.sway_amplitude_rad),
            ("sway frequency", self.sway_frequency_hz),
            ("sway jitter", self.sway_jitter_rad),
            ("IMU noise", self.imu_noise_rad),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        ((self.duration_s * self.sample_rate_hz).round() as usize).max(1)
    }
}

/// Samples the approach toward `spec` at the configured rate.
///
/// Fails when any corner would fall beyond the radar's maximum range or when the
/// walking speed breaks the stationary-slice assumption (`|v_host| < v_res`).
pub fn generate_walk(
    spec: &StaircaseSpec,
    cfg: &WalkConfig,
    attrs: &DerivedAttributes,
) -> Result<Trajectory> {
    spec.validate()?;
    cfg.validate()?;
    let corners = corners_of(spec)?;
    let n = cfg.frame_count();
    let period = 1.0 / cfg.sample_rate_hz;
    let x_start = spec.foot_x_m - cfg.start_standoff_m;
    let x_end = spec.foot_x_m - cfg.end_standoff_m;
    let xs: Vec<f64> = (0..n)
        .map(|k| {
            if n == 1 {
                x_start
            } else {
                x_start + (x_end - x_start) * k as f64 / (n - 1) as f64
            }
        })
        .collect();

    let mut rng = seeded_rng(derive_seed(cfg.seed, 0x5A11));
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let jitter =
        Normal::new(0.0, cfg.sway_jitter_rad).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let imu =
        Normal::new(0.0, cfg.imu_noise_rad).map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let mut frames = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * period;
        let sway = cfg.sway_amplitude_rad
            * (std::f64::consts::TAU * cfg.sway_frequency_hz * t + phase).sin();
        let true_gamma = MOUNT_TILT_RAD + sway + jitter.sample(&mut rng);
        let measured_gamma = true_gamma + imu.sample(&mut rng);
        let velocity = match (k, n) {
            (_, 1) => 0.0,
            (0, _) => (xs[1] - xs[0]) * cfg.sample_rate_hz,
            _ => (xs[k] - xs[k - 1]) * cfg.sample_rate_hz,
        };
        if velocity.abs() >= attrs.velocity_resolution_mps {
            return Err(Error::InvalidConfig(format!(
                "walking speed {velocity:.3} m/s is not below the velocity resolution {:.3} m/s",
                attrs.velocity_resolution_mps
            )));
        }
        let origin = Point2::new(
            xs[k],
            cfg.mount_height_m * (true_gamma - MOUNT_TILT_RAD).cos(),
        );
        for c in corners.points() {
            let r = origin.distance(c);
            if r > attrs.max_range_m {
                return Err(Error::RangeOverflow {
                    range_m: r,
                    max_range_m: attrs.max_range_m,
                });
            }
        }
        frames.push(GaitFrame {
            timestamp_s: t,
            radar_origin: origin,
            inclination_rad: measured_gamma,
            true_inclination_rad: true_gamma,
            host_velocity_mps: velocity,
        });
    }
    Ok(Trajectory {
        frames,
        mount_height_m: cfg.mount_height_m,
        mount_tilt_rad: MOUNT_TILT_RAD,
    })
}
