//! Cell-averaging CFAR and peak grouping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the detection threshold multiplier is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfarThreshold {
    /// Fixed multiplier on the training-cell mean.
    Scale(f64),
    /// Target false-alarm probability for exponentially distributed cells;
    /// the multiplier is derived per window size.
    FalseAlarmRate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfarConfig {
    /// Training cells on each side of the cell under test.
    pub training_cells: usize,
    /// Guard cells on each side of the cell under test.
    pub guard_cells: usize,
    pub threshold: CfarThreshold,
}

impl Default for CfarConfig {
    fn default() -> Self {
        Self::range_default()
    }
}

impl CfarConfig {
    /// 8 training and 2 guard cells per side at `P_fa = 1e-3`.
    pub fn range_default() -> Self {
        Self {
            training_cells: 8,
            guard_cells: 2,
            threshold: CfarThreshold::FalseAlarmRate(1e-3),
        }
    }

    /// Pipeline defaults for the zero-padded range profile: 4 training and 2
    /// guard cells per side at `P_fa = 1e-3`. Padding makes a Hann-windowed peak
    /// about 7 bins wide, so with 8 training cells the neighbouring corner of a
    /// 26 cm step sits inside the window and masks the cell under test.
    pub fn range_profile_default() -> Self {
        Self {
            training_cells: 4,
            ..Self::range_default()
        }
    }

    /// Defaults for the zero-padded angle spectrum. An 8-channel array padded to
    /// 64 bins has a main lobe 16 bins wide, so the range defaults would put the
    /// lobe itself into the training window and never fire.
    pub fn aoa_default() -> Self {
        Self {
            training_cells: 4,
            guard_cells: 4,
            threshold: CfarThreshold::Scale(2.5),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.training_cells == 0 {
            return Err(Error::InvalidConfig(
                "CFAR needs at least one training cell per side".into(),
            ));
        }
        match self.threshold {
            CfarThreshold::Scale(a) if !(a > 0.0 && a.is_finite()) => Err(Error::InvalidConfig(
                format!("CFAR scale must be > 0, got {a}"),
            )),
            CfarThreshold::FalseAlarmRate(p) if !(p > 0.0 && p < 1.0) => Err(Error::InvalidConfig(
                format!("CFAR false-alarm rate must lie in (0, 1), got {p}"),
            )),
            _ => Ok(()),
        }
    }

    /// Smallest profile length the detector accepts.
    pub fn min_profile_len(&self) -> usize {
        2 * (self.training_cells + self.guard_cells) + 2
    }

    fn scale_for(&self, cells: usize) -> f64 {
        match self.threshold {
            CfarThreshold::Scale(a) => a,
            CfarThreshold::FalseAlarmRate(p) => ca_cfar_scale(p, cells),
        }
    }
}

/// Threshold multiplier of a CA-CFAR averaging `cells` exponential cells:
/// `N (P_fa^(-1/N) - 1)`.
pub fn ca_cfar_scale(pfa: f64, cells: usize) -> f64 {
    let n = cells as f64;
    n * (pfa.powf(-1.0 / n) - 1.0)
}

/// Treatment of cells whose training window runs off the profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeMode {
    /// Use only the side whose window fits entirely.
    OneSided,
    /// Wrap around (periodic spectra such as the angle FFT).
    Circular,
}

/// Per-cell detection thresholds.
pub fn cfar_thresholds(profile: &[f64], cfg: &CfarConfig, edge: EdgeMode) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = profile.len();
    if n < cfg.min_profile_len() {
        return Err(Error::InvalidConfig(format!(
            "profile of length {n} is too short for {} training and {} guard cells per side",
            cfg.training_cells, cfg.guard_cells
        )));
    }
    let (t, g) = (cfg.training_cells, cfg.guard_cells);
    let reach = t + g;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (sum, cells) = match edge {
            EdgeMode::Circular => {
                let mut s = 0.0;
                for k in g + 1..=reach {
                    s += profile[(i + k) % n] + profile[(i + n - k) % n];
                }
                (s, 2 * t)
            }
            EdgeMode::OneSided => {
                let left = i >= reach;
                let right = i + reach < n;
                let mut s = 0.0;
                let mut cells = 0;
                if left {
                    s += profile[i - reach..i - g].iter().sum::<f64>();
                    cells += t;
                }
                if right {
                    s += profile[i + g + 1..=i + reach].iter().sum::<f64>();
                    cells += t;
                }
                (s, cells)
            }
        };
        out.push(cfg.scale_for(cells) * sum / cells as f64);
    }
    Ok(out)
}

/// Indices whose value strictly exceeds the CA-CFAR threshold (one-sided at edges).
pub fn cfar_detect(profile: &[f64], cfg: &CfarConfig) -> Result<Vec<usize>> {
    cfar_detect_with(profile, cfg, EdgeMode::OneSided)
}

pub fn cfar_detect_with(profile: &[f64], cfg: &CfarConfig, edge: EdgeMode) -> Result<Vec<usize>> {
    let thresholds = cfar_thresholds(profile, cfg, edge)?;
    Ok(profile
        .iter()
        .zip(&thresholds)
        .enumerate()
        .filter(|(_, (v, t))| v > t)
        .map(|(i, _)| i)
        .collect())
}

/// Keeps only detections that are local maxima of `profile`
/// (strictly above the left neighbour, not below the right one).
pub fn local_peaks(profile: &[f64], detections: &[usize], circular: bool) -> Vec<usize> {
    let n = profile.len();
    detections
        .iter()
        .copied()
        .filter(|&i| {
            let left = if i > 0 {
                Some(profile[i - 1])
            } else if circular {
                Some(profile[n - 1])
            } else {
                None
            };
            let right = if i + 1 < n {
                Some(profile[i + 1])
            } else if circular {
                Some(profile[0])
            } else {
                None
            };
            left.is_none_or(|l| profile[i] > l) && right.is_none_or(|r| profile[i] >= r)
        })
        .collect()
}

/// Sub-bin offset of a peak from a three-point parabola, clamped to +-0.5.
pub fn parabolic_offset(left: f64, centre: f64, right: f64) -> f64 {
    let denom = left - 2.0 * centre + right;
    if denom.abs() < f64::EPSILON * centre.abs().max(1.0) {
        return 0.0;
    }
    (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
}
