//! Target-list extraction from a chirp cube.
//!
//! The chain per frame:
//!
//! 1. range FFT along fast time (Hann window, zero-padded to a power of two)
//!    and Doppler FFT along the chirps, for every virtual channel;
//! 2. the zero-Doppler plane is kept as the stationary range/channel slice;
//! 3. channel magnitudes are summed into one range profile;
//! 4. CA-CFAR on that profile selects range bins;
//! 5. only at those bins, a zero-padded FFT across channels gives the angle
//!    spectrum, which goes through a second CFAR;
//! 6. surviving (range, angle) pairs form the [`TargetList`].
//!
//! Doppler bins use natural FFT order: bin 0 is zero velocity, bins
//! `1..L/2` are positive range rates, the upper half negative.
//! Range bin `k` is `k * r_res * N_S / L` meters, `L` being the padded length.

pub mod cfar;
mod target_list;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chirp_sim::{ChirpCube, FrameMeta};
use crate::error::{Error, Result};
use crate::numerics::{fft, fft_in_place, padded_len, Window};
use crate::rf_params::derive_attributes;

pub use cfar::{
    ca_cfar_scale, cfar_detect, cfar_detect_with, cfar_thresholds, local_peaks, parabolic_offset,
    CfarConfig, CfarThreshold, EdgeMode,
};
pub use target_list::{read_jsonl, write_jsonl, TargetEntry, TargetList};

/// Range-Doppler-channel cube, indexed `r + L_r (p + L_d a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerCube {
    pub range_bins: usize,
    pub doppler_bins: usize,
    pub channels: usize,
    pub range_bin_m: f64,
    pub velocity_bin_mps: f64,
    pub meta: FrameMeta,
    data: Vec<Complex64>,
}

impl RangeDopplerCube {
    #[inline]
    pub fn get(&self, r: usize, p: usize, a: usize) -> Complex64 {
        self.data[r + self.range_bins * (p + self.doppler_bins * a)]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Signed range rate of Doppler bin `p`.
    pub fn bin_velocity(&self, p: usize) -> f64 {
        let signed = if p < self.doppler_bins.div_ceil(2) {
            p as f64
        } else {
            p as f64 - self.doppler_bins as f64
        };
        signed * self.velocity_bin_mps
    }
}

/// Zero-Doppler plane, indexed `r + L_r a`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarySlice {
    pub range_bins: usize,
    pub channels: usize,
    pub range_bin_m: f64,
    pub meta: FrameMeta,
    data: Vec<Complex64>,
}

impl StationarySlice {
    pub fn from_data(
        range_bins: usize,
        channels: usize,
        range_bin_m: f64,
        meta: FrameMeta,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if data.len() != range_bins * channels {
            return Err(Error::Shape(format!(
                "{} values for a {range_bins}x{channels} slice",
                data.len()
            )));
        }
        Ok(Self {
            range_bins,
            channels,
            range_bin_m,
            meta,
            data,
        })
    }

    #[inline]
    pub fn get(&self, r: usize, a: usize) -> Complex64 {
        self.data[r + self.range_bins * a]
    }

    /// Samples of every channel at range bin `r`.
    pub fn channel_vector(&self, r: usize) -> Vec<Complex64> {
        (0..self.channels).map(|a| self.get(r, a)).collect()
    }
}

/// Processing options for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessingConfig {
    pub range_window: Window,
    pub doppler_window: Window,
    pub range_cfar: CfarConfig,
    pub aoa_cfar: CfarConfig,
    pub aoa_fft_len: usize,
    /// Keep only local maxima among CFAR detections (range and angle).
    pub peak_grouping: bool,
    /// Three-point parabolic refinement of range and angle peaks.
    pub peak_interp: bool,
    /// Compute the angle FFT at every range bin, then keep the detected ones.
    pub exhaustive_aoa: bool,
}

impl Default for ProcessingConfig {
    fn default() -> Self {
        Self {
            range_window: Window::Hann,
            doppler_window: Window::Rectangular,
            range_cfar: CfarConfig::range_profile_default(),
            aoa_cfar: CfarConfig::aoa_default(),
            aoa_fft_len: 64,
            peak_grouping: true,
            peak_interp: false,
            exhaustive_aoa: false,
        }
    }
}

/// Angle-stage options passed to [`aoa_on_targets`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoaConfig {
    pub cfar: CfarConfig,
    pub fft_len: usize,
    pub peak_grouping: bool,
    pub peak_interp: bool,
}

impl From<&ProcessingConfig> for AoaConfig {
    fn from(p: &ProcessingConfig) -> Self {
        Self {
            cfar: p.aoa_cfar,
            fft_len: p.aoa_fft_len,
            peak_grouping: p.peak_grouping,
            peak_interp: p.peak_interp,
        }
    }
}

/// Fast-time then slow-time FFT on every channel.
pub fn range_doppler_transform(
    cube: &ChirpCube,
    range_window: Window,
    doppler_window: Window,
) -> Result<RangeDopplerCube> {
    if !cube.is_finite() {
        return Err(Error::NonFinite("chirp cube"));
    }
    let attrs = derive_attributes(&cube.config)?;
    let (ns, np, na) = cube.shape();
    let lr = padded_len(ns);
    let ld = padded_len(np);
    let wr = range_window.coefficients(ns);
    let wd = doppler_window.coefficients(np);

    let mut data = vec![Complex64::new(0.0, 0.0); lr * ld * na];
    let mut buf = vec![Complex64::new(0.0, 0.0); lr];
    for a in 0..na {
        for p in 0..np {
            for (dst, (x, w)) in buf.iter_mut().zip(cube.chirp(p, a).iter().zip(&wr)) {
                *dst = x * w;
            }
            buf[ns..].fill(Complex64::new(0.0, 0.0));
            fft_in_place(&mut buf)?;
            let base = lr * (p + ld * a);
            data[base..base + lr].copy_from_slice(&buf);
        }
    }
    let mut slow = vec![Complex64::new(0.0, 0.0); ld];
    for a in 0..na {
        for r in 0..lr {
            for p in 0..ld {
                slow[p] = if p < np {
                    data[r + lr * (p + ld * a)] * wd[p]
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
            fft_in_place(&mut slow)?;
            for p in 0..ld {
                data[r + lr * (p + ld * a)] = slow[p];
            }
        }
    }
    Ok(RangeDopplerCube {
        range_bins: lr,
        doppler_bins: ld,
        channels: na,
        range_bin_m: attrs.range_resolution_m * ns as f64 / lr as f64,
        velocity_bin_mps: attrs.velocity_resolution_mps * np as f64 / ld as f64,
        meta: cube.meta,
        data,
    })
}

/// The Doppler-bin-0 plane. Targets moving by at least one velocity bin fall elsewhere.
pub fn extract_stationary_slice(rd: &RangeDopplerCube) -> StationarySlice {
    let mut data = Vec::with_capacity(rd.range_bins * rd.channels);
    for a in 0..rd.channels {
        for r in 0..rd.range_bins {
            data.push(rd.get(r, 0, a));
        }
    }
    StationarySlice {
        range_bins: rd.range_bins,
        channels: rd.channels,
        range_bin_m: rd.range_bin_m,
        meta: rd.meta,
        data,
    }
}

/// Non-coherent accumulation: sum of channel magnitudes per range bin.
pub fn accumulate_range_profile(slice: &StationarySlice) -> Vec<f64> {
    (0..slice.range_bins)
        .map(|r| (0..slice.channels).map(|a| slice.get(r, a).norm()).sum())
        .collect()
}

/// Angle spectrum magnitude at one range bin.
pub fn aoa_profile(slice: &StationarySlice, range_bin: usize, fft_len: usize) -> Result<Vec<f64>> {
    Ok(fft(&slice.channel_vector(range_bin), fft_len)?
        .iter()
        .map(|c| c.norm())
        .collect())
}

/// Maps a (possibly fractional) angle-FFT bin to radians from boresight.
pub fn aoa_bin_to_angle(bin: f64, fft_len: usize) -> f64 {
    let l = fft_len as f64;
    let centred = if bin >= l / 2.0 { bin - l } else { bin };
    (2.0 * centred / l).clamp(-1.0, 1.0).asin()
}

fn angles_at(slice: &StationarySlice, range_bin: usize, cfg: &AoaConfig) -> Result<Vec<f64>> {
    let profile = aoa_profile(slice, range_bin, cfg.fft_len)?;
    let mut hits = cfar_detect_with(&profile, &cfg.cfar, EdgeMode::Circular)?;
    if cfg.peak_grouping {
        hits = local_peaks(&profile, &hits, true);
    }
    let n = profile.len();
    let mut angles: Vec<f64> = hits
        .into_iter()
        .map(|b| {
            let offset = if cfg.peak_interp {
                parabolic_offset(profile[(b + n - 1) % n], profile[b], profile[(b + 1) % n])
            } else {
                0.0
            };
            aoa_bin_to_angle((b as f64 + offset).rem_euclid(n as f64), cfg.fft_len)
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

fn assemble(
    slice: &StationarySlice,
    range_indices: &[usize],
    angles: impl Fn(usize) -> Result<Vec<f64>>,
) -> Result<TargetList> {
    let profile = accumulate_range_profile(slice);
    let mut bins: Vec<usize> = range_indices.to_vec();
    bins.sort_unstable();
    bins.dedup();
    let mut list = TargetList::empty(slice.meta.timestamp_s, slice.meta.inclination_rad);
    for bin in bins {
        if bin >= slice.range_bins {
            return Err(Error::Shape(format!(
                "range bin {bin} beyond {} bins",
                slice.range_bins
            )));
        }
        let angles_rad = angles(bin)?;
        if angles_rad.is_empty() {
            continue;
        }
        list.entries.push(TargetEntry {
            range_m: bin as f64 * slice.range_bin_m,
            angles_rad,
            magnitude: profile[bin],
        });
    }
    Ok(list)
}

/// Angle estimation restricted to the detected range bins.
///
/// Range bins whose angle spectrum yields no CFAR survivor are dropped.
pub fn aoa_on_targets(
    slice: &StationarySlice,
    range_indices: &[usize],
    cfg: &AoaConfig,
) -> Result<TargetList> {
    assemble(slice, range_indices, |bin| angles_at(slice, bin, cfg))
}

/// Reference path: angle spectra at every range bin, then restricted to the
/// detected ones. Produces the same list as [`aoa_on_targets`].
pub fn aoa_exhaustive(
    slice: &StationarySlice,
    range_indices: &[usize],
    cfg: &AoaConfig,
) -> Result<TargetList> {
    let all: Vec<Vec<f64>> = (0..slice.range_bins)
        .map(|bin| angles_at(slice, bin, cfg))
        .collect::<Result<_>>()?;
    assemble(slice, range_indices, |bin| Ok(all[bin].clone()))
}

/// Range bins selected by the first CFAR (and peak grouping when enabled).
pub fn detect_ranges(profile: &[f64], cfg: &ProcessingConfig) -> Result<Vec<usize>> {
    let hits = cfar_detect(profile, &cfg.range_cfar)?;
    Ok(if cfg.peak_grouping {
        local_peaks(profile, &hits, false)
    } else {
        hits
    })
}

/// Full chain from chirp cube to target list.
pub fn process_frame(cube: &ChirpCube, cfg: &ProcessingConfig) -> Result<TargetList> {
    let rd = range_doppler_transform(cube, cfg.range_window, cfg.doppler_window)?;
    let slice = extract_stationary_slice(&rd);
    let profile = accumulate_range_profile(&slice);
    let bins = detect_ranges(&profile, cfg)?;
    let aoa = AoaConfig::from(cfg);
    let mut list = if cfg.exhaustive_aoa {
        aoa_exhaustive(&slice, &bins, &aoa)?
    } else {
        aoa_on_targets(&slice, &bins, &aoa)?
    };
    if cfg.peak_interp {
        for e in &mut list.entries {
            let bin = (e.range_m / slice.range_bin_m).round() as usize;
            if bin > 0 && bin + 1 < profile.len() {
                let off = parabolic_offset(profile[bin - 1], profile[bin], profile[bin + 1]);
                e.range_m = (bin as f64 + off) * slice.range_bin_m;
            }
        }
        list.entries.sort_by(|a, b| a.range_m.total_cmp(&b.range_m));
    }
    Ok(list)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chirp_sim::{synthesize_frame, NoiseConfig, Scatterer};
    use crate::rf_params::RadarConfig;
    use crate::scene::{GaitFrame, Point2};

    fn level_frame() -> GaitFrame {
        GaitFrame {
            timestamp_s: 0.0,
            radar_origin: Point2::new(0.0, 0.0),
            inclination_rad: 0.0,
            true_inclination_rad: 0.0,
            host_velocity_mps: 0.0,
        }
    }

    fn zero_cube() -> ChirpCube {
        ChirpCube::zeros(RadarConfig::default(), FrameMeta::default())
    }

    #[test]
    fn zero_cube_gives_zero_everything() {
        let rd = range_doppler_transform(&zero_cube(), Window::Hann, Window::Rectangular).unwrap();
        assert!(rd.data().iter().all(|c| c.norm() == 0.0));
        let slice = extract_stationary_slice(&rd);
        assert_eq!((slice.range_bins, slice.channels), (256, 8));
        let profile = accumulate_range_profile(&slice);
        assert!(profile.iter().all(|&v| v == 0.0));
        assert!(process_frame(&zero_cube(), &ProcessingConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn non_finite_cube_is_rejected() {
        let mut cube = zero_cube();
        cube.samples_mut()[7] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            range_doppler_transform(&cube, Window::Hann, Window::Rectangular),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn bin_scales_follow_padding() {
        let rd = range_doppler_transform(&zero_cube(), Window::Hann, Window::Rectangular).unwrap();
        let attrs = derive_attributes(&RadarConfig::default()).unwrap();
        assert!((rd.range_bin_m - attrs.range_resolution_m * 144.0 / 256.0).abs() < 1e-15);
        assert_eq!(rd.velocity_bin_mps, attrs.velocity_resolution_mps);
        assert_eq!(rd.bin_velocity(1), attrs.velocity_resolution_mps);
        assert_eq!(rd.bin_velocity(7), -attrs.velocity_resolution_mps);
    }

    #[test]
    fn accumulation_of_identical_channels() {
        let m = 2.5;
        let data: Vec<Complex64> = (0..8)
            .flat_map(|a| {
                (0..16).map(move |r| {
                    if r == 5 {
                        Complex64::from_polar(m, a as f64)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        let slice = StationarySlice::from_data(16, 8, 0.1, FrameMeta::default(), data).unwrap();
        let p = accumulate_range_profile(&slice);
        assert!((p[5] - 8.0 * m).abs() < 1e-12);
        assert_eq!(p.iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn angle_bins_map_through_arcsine() {
        assert_eq!(aoa_bin_to_angle(0.0, 64), 0.0);
        assert!((aoa_bin_to_angle(16.0, 64) - (0.5f64).asin()).abs() < 1e-15);
        assert!((aoa_bin_to_angle(48.0, 64) + (0.5f64).asin()).abs() < 1e-15);
        assert!((aoa_bin_to_angle(32.0, 64) + std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn empty_range_indices_give_empty_list() {
        let sc = Scatterer::stationary(Point2::new(2.0, 0.0), 1.0);
        let cube = synthesize_frame(
            &RadarConfig::default(),
            &level_frame(),
            &[sc],
            &NoiseConfig::Noiseless,
            0,
        )
        .unwrap();
        let rd = range_doppler_transform(&cube, Window::Hann, Window::Rectangular).unwrap();
        let slice = extract_stationary_slice(&rd);
        let cfg = AoaConfig::from(&ProcessingConfig::default());
        assert!(aoa_on_targets(&slice, &[], &cfg).unwrap().is_empty());
        assert!(matches!(
            aoa_on_targets(&slice, &[999], &cfg),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn single_corner_end_to_end() {
        let attrs = derive_attributes(&RadarConfig::default()).unwrap();
        let theta: f64 = -0.2;
        let sc = Scatterer::stationary(Point2::new(2.0 * theta.cos(), 2.0 * theta.sin()), 1.0);
        let cube = synthesize_frame(
            &RadarConfig::default(),
            &level_frame(),
            &[sc],
            &NoiseConfig::Noiseless,
            0,
        )
        .unwrap();
        let list = process_frame(&cube, &ProcessingConfig::default()).unwrap();
        assert_eq!(list.entries.len(), 1, "{list:?}");
        let e = &list.entries[0];
        assert!((e.range_m - 2.0).abs() <= attrs.range_resolution_m / 2.0);
        assert_eq!(e.angles_rad.len(), 1);
        assert!((e.angles_rad[0] - theta).abs() <= attrs.angular_resolution_rad / 2.0);
        list.check(attrs.max_range_m).unwrap();
    }

    #[test]
    fn peak_interpolation_tightens_range() {
        let attrs = derive_attributes(&RadarConfig::default()).unwrap();
        let sc = Scatterer::stationary(Point2::new(1.8123, 0.0), 1.0);
        let cube = synthesize_frame(
            &RadarConfig::default(),
            &level_frame(),
            &[sc],
            &NoiseConfig::Noiseless,
            0,
        )
        .unwrap();
        let coarse = process_frame(&cube, &ProcessingConfig::default()).unwrap();
        let fine = process_frame(
            &cube,
            &ProcessingConfig {
                peak_interp: true,
                ..Default::default()
            },
        )
        .unwrap();
        let e0 = (coarse.entries[0].range_m - 1.8123).abs();
        let e1 = (fine.entries[0].range_m - 1.8123).abs();
        assert!(e1 < e0 || e0 < 1e-3, "coarse {e0} fine {e1}");
        assert!(e1 < attrs.range_resolution_m / 4.0);
    }
}
