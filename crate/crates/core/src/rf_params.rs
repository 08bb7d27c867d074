//! Radar parametrization and the resolution attributes derived from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Numerator of the 3 dB beamwidth rule `alpha_res = 1.78 / N_A`.
pub const BEAMWIDTH_FACTOR: f64 = 1.78;

/// Transmit-side parameters of the FMCW/MIMO front end.
///
/// Defaults are the 77 GHz, 3.6 GHz bandwidth, 2 TX x 4 RX configuration
/// (64 us chirps, 144 samples per chirp, 8 chirps per frame).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarConfig {
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub chirp_duration_s: f64,
    pub samples_per_chirp: usize,
    pub chirps_per_frame: usize,
    pub tx_count: usize,
    pub rx_count: usize,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 77e9,
            bandwidth_hz: 3.6e9,
            chirp_duration_s: 64e-6,
            samples_per_chirp: 144,
            chirps_per_frame: 8,
            tx_count: 2,
            rx_count: 4,
        }
    }
}

impl RadarConfig {
    /// Number of virtual channels of the MIMO array (TX x RX).
    pub fn virtual_antennas(&self) -> usize {
        self.tx_count * self.rx_count
    }

    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("chirp_duration_s", self.chirp_duration_s),
        ];
        for (name, v) in reals {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        let counts = [
            ("samples_per_chirp", self.samples_per_chirp),
            ("chirps_per_frame", self.chirps_per_frame),
            ("tx_count", self.tx_count),
            ("rx_count", self.rx_count),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }
}

/// Resolution attributes computed from a [`RadarConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedAttributes {
    pub range_resolution_m: f64,
    pub max_range_m: f64,
    pub velocity_resolution_mps: f64,
    /// 3 dB angular resolution in radians.
    pub angular_resolution_rad: f64,
    pub wavelength_m: f64,
    pub virtual_antennas: usize,
}

/// Computes range, velocity and angular resolution for `cfg`.
pub fn derive_attributes(cfg: &RadarConfig) -> Result<DerivedAttributes> {
    cfg.validate()?;
    let range_resolution_m = SPEED_OF_LIGHT / (2.0 * cfg.bandwidth_hz);
    let n_a = cfg.virtual_antennas();
    Ok(DerivedAttributes {
        range_resolution_m,
        max_range_m: SPEED_OF_LIGHT * cfg.samples_per_chirp as f64 / (2.0 * cfg.bandwidth_hz),
        velocity_resolution_mps: SPEED_OF_LIGHT
            / (2.0 * cfg.carrier_frequency_hz * cfg.chirp_duration_s * cfg.chirps_per_frame as f64),
        angular_resolution_rad: BEAMWIDTH_FACTOR / n_a as f64,
        wavelength_m: cfg.wavelength_m(),
        virtual_antennas: n_a,
    })
}
