//! Point-scatterer synthesis of the complex baseband MIMO chirp cube.
//!
//! Each scatterer at range `r` and boresight angle `theta` contributes, on
//! fast-time sample `s`, chirp `p`, and virtual channel `a`,
//!
//! ```text
//! A * exp(j 2 pi (f_beat s T_s + f_dopp p T_ch)) * exp(j pi a sin(theta))
//! ```
//!
//! with `f_beat = 2 B r / (c T_ch)`, `T_s = T_ch / N_S`, and
//! `f_dopp = 2 v_r f_o / c` where `v_r` is the range rate (host motion plus the
//! scatterer's own radial velocity). Ranges are frozen within a frame
//! (stop-and-hop). TDM scheduling is not modelled: samples are written
//! straight into the virtual array at half-wavelength spacing.

mod cube_file;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::numerics::{complex_gaussian, seeded_rng};
use crate::rf_params::{derive_attributes, RadarConfig, SPEED_OF_LIGHT};
use crate::scene::{GaitFrame, Point2};

pub use cube_file::{
    read_cube, read_cube_file, write_cube, write_cube_file, CUBE_HEADER_LEN, CUBE_MAGIC,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub position: Point2,
    /// Linear amplitude, `>= 0`.
    pub reflectivity: f64,
    /// Own range rate in m/s (positive when receding); zero for the stairs.
    pub radial_velocity_mps: f64,
}

impl Scatterer {
    pub fn stationary(position: Point2, reflectivity: f64) -> Self {
        Self {
            position,
            reflectivity,
            radial_velocity_mps: 0.0,
        }
    }
}

/// Per-frame metadata carried with a cube (and stored in its file header).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct FrameMeta {
    pub timestamp_s: f64,
    /// IMU-reported inclination in radians.
    pub inclination_rad: f64,
    pub host_velocity_mps: f64,
}

impl From<&GaitFrame> for FrameMeta {
    fn from(f: &GaitFrame) -> Self {
        Self {
            timestamp_s: f.timestamp_s,
            inclination_rad: f.inclination_rad,
            host_velocity_mps: f.host_velocity_mps,
        }
    }
}

/// Complex samples laid out `s` fastest, then chirp `p`, then channel `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpCube {
    pub config: RadarConfig,
    pub meta: FrameMeta,
    samples: Vec<Complex64>,
}

impl ChirpCube {
    pub fn zeros(config: RadarConfig, meta: FrameMeta) -> Self {
        let n = config.samples_per_chirp * config.chirps_per_frame * config.virtual_antennas();
        Self {
            config,
            meta,
            samples: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_samples(
        config: RadarConfig,
        meta: FrameMeta,
        samples: Vec<Complex64>,
    ) -> Result<Self> {
        let (ns, np, na) = (
            config.samples_per_chirp,
            config.chirps_per_frame,
            config.virtual_antennas(),
        );
        if samples.len() != ns * np * na {
            return Err(Error::Shape(format!(
                "{} samples for a {ns}x{np}x{na} cube",
                samples.len()
            )));
        }
        Ok(Self {
            config,
            meta,
            samples,
        })
    }

    /// `(N_S, N_P, N_A)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (
            self.config.samples_per_chirp,
            self.config.chirps_per_frame,
            self.config.virtual_antennas(),
        )
    }

    #[inline]
    pub fn index(&self, s: usize, p: usize, a: usize) -> usize {
        let (ns, np, _) = self.shape();
        s + ns * (p + np * a)
    }

    pub fn get(&self, s: usize, p: usize, a: usize) -> Complex64 {
        self.samples[self.index(s, p, a)]
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    /// Fast-time samples of chirp `p` on channel `a`.
    pub fn chirp(&self, p: usize, a: usize) -> &[Complex64] {
        let start = self.index(0, p, a);
        &self.samples[start..start + self.config.samples_per_chirp]
    }

    pub fn is_finite(&self) -> bool {
        self.samples
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Rounds every sample to single precision, the resolution of the cube file.
    pub fn quantize_to_f32(&mut self) {
        for c in &mut self.samples {
            *c = Complex64::new(c.re as f32 as f64, c.im as f32 as f64);
        }
    }
}

/// Additive receiver noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseConfig {
    Noiseless,
    /// Per-sample SNR of the nearest scatterer in the frame.
    SnrAtNearest {
        snr_db: f64,
    },
    /// Absolute noise power per complex sample.
    FixedPower {
        power: f64,
    },
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::SnrAtNearest { snr_db: 20.0 }
    }
}

/// Range and boresight angle of `position` seen from the radar pose of `frame`.
pub fn polar_from_pose(frame: &GaitFrame, position: &Point2) -> (f64, f64) {
    let dx = position.x - frame.radar_origin.x;
    let dy = position.y - frame.radar_origin.y;
    let range = dx.hypot(dy);
    let mut theta = dy.atan2(dx) - frame.true_inclination_rad;
    if theta > std::f64::consts::PI {
        theta -= std::f64::consts::TAU;
    } else if theta < -std::f64::consts::PI {
        theta += std::f64::consts::TAU;
    }
    (range, theta)
}

/// Amplitude model: reflectivity over range, floored at one range cell.
pub fn echo_amplitude(reflectivity: f64, range_m: f64, range_resolution_m: f64) -> f64 {
    reflectivity / range_m.max(range_resolution_m)
}

/// Renders one frame of the chirp cube for `scatterers` seen from `frame`.
pub fn synthesize_frame(
    cfg: &RadarConfig,
    frame: &GaitFrame,
    scatterers: &[Scatterer],
    noise: &NoiseConfig,
    seed: u64,
) -> Result<ChirpCube> {
    let attrs = derive_attributes(cfg)?;
    for v in [
        frame.timestamp_s,
        frame.radar_origin.x,
        frame.radar_origin.y,
        frame.true_inclination_rad,
    ] {
        ensure_finite(v, "gait frame")?;
    }
    ensure_finite(frame.host_velocity_mps, "gait frame")?;

    let (ns, np, na) = (
        cfg.samples_per_chirp,
        cfg.chirps_per_frame,
        cfg.virtual_antennas(),
    );
    let mut cube = ChirpCube::zeros(*cfg, FrameMeta::from(frame));
    let sample_period = cfg.chirp_duration_s / ns as f64;
    let mut nearest_amplitude: f64 = 0.0;

    let mut fast = vec![Complex64::new(0.0, 0.0); ns];
    let mut slow = vec![Complex64::new(0.0, 0.0); np];
    let mut spatial = vec![Complex64::new(0.0, 0.0); na];

    for sc in scatterers {
        for v in [
            sc.position.x,
            sc.position.y,
            sc.reflectivity,
            sc.radial_velocity_mps,
        ] {
            ensure_finite(v, "scatterer")?;
        }
        if sc.reflectivity < 0.0 {
            return Err(Error::InvalidConfig(
                "scatterer reflectivity must be >= 0".into(),
            ));
        }
        let (range, theta) = polar_from_pose(frame, &sc.position);
        if range > attrs.max_range_m {
            return Err(Error::RangeOverflow {
                range_m: range,
                max_range_m: attrs.max_range_m,
            });
        }
        let amplitude = echo_amplitude(sc.reflectivity, range, attrs.range_resolution_m);
        if range <= attrs.max_range_m && amplitude > nearest_amplitude {
            nearest_amplitude = amplitude;
        }

        let line_of_sight =
            (sc.position.y - frame.radar_origin.y).atan2(sc.position.x - frame.radar_origin.x);
        let host_range_rate = -frame.host_velocity_mps * line_of_sight.cos();
        let range_rate = host_range_rate + sc.radial_velocity_mps;
        let f_beat = 2.0 * cfg.bandwidth_hz * range / (SPEED_OF_LIGHT * cfg.chirp_duration_s);
        let f_dopp = 2.0 * range_rate * cfg.carrier_frequency_hz / SPEED_OF_LIGHT;
        let spatial_step = std::f64::consts::PI * theta.sin();

        let tau = std::f64::consts::TAU;
        for (s, v) in fast.iter_mut().enumerate() {
            *v = Complex64::from_polar(amplitude, tau * f_beat * s as f64 * sample_period);
        }
        for (p, v) in slow.iter_mut().enumerate() {
            *v = Complex64::from_polar(1.0, tau * f_dopp * p as f64 * cfg.chirp_duration_s);
        }
        for (a, v) in spatial.iter_mut().enumerate() {
            *v = Complex64::from_polar(1.0, spatial_step * a as f64);
        }

        let data = cube.samples_mut();
        for (a, sa) in spatial.iter().enumerate() {
            for (p, sp) in slow.iter().enumerate() {
                let w = sa * sp;
                let base = ns * (p + np * a);
                for (s, f) in fast.iter().enumerate() {
                    data[base + s] += f * w;
                }
            }
        }
    }

    let noise_power = match *noise {
        NoiseConfig::Noiseless => 0.0,
        NoiseConfig::FixedPower { power } => {
            if !power.is_finite() || power < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "noise power must be >= 0, got {power}"
                )));
            }
            power
        }
        NoiseConfig::SnrAtNearest { snr_db } => {
            ensure_finite(snr_db, "noise SNR")?;
            if nearest_amplitude > 0.0 {
                nearest_amplitude * nearest_amplitude / 10f64.powf(snr_db / 10.0)
            } else {
                0.0
            }
        }
    };
    if noise_power > 0.0 {
        let mut rng = seeded_rng(seed);
        for c in cube.samples_mut() {
            *c += complex_gaussian(&mut rng, noise_power);
        }
    }

    if !cube.is_finite() {
        return Err(Error::NonFinite("synthesized cube"));
    }
    Ok(cube)
}
