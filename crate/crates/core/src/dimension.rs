//! Coordinate correction and initial stair dimensioning.
//!
//! Angles from the array are measured counterclockwise from boresight and the
//! IMU inclination is the boresight's signed angle above horizontal, so the
//! corrected elevation is always `gamma + theta`. Corrected coordinates are
//! radar-centred with `x` horizontal toward the stairs and `y` up.
//!
//! Depth and height are the axis-aligned differences between two corners that
//! satisfy the stair standards.

use serde::{Deserialize, Serialize};

use crate::dsp::TargetList;
use crate::error::{Error, Result};

/// A detection rotated into the level, radar-centred frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedTarget {
    pub true_angle_rad: f64,
    pub x_m: f64,
    pub y_m: f64,
    pub range_m: f64,
    pub source_angle_rad: f64,
    pub magnitude: f64,
}

pub const STANDARD_TOLERANCE_M: f64 = 1e-9;

/// Accepted ranges for one step's depth and height (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StairStandards {
    pub depth_min_m: f64,
    pub depth_max_m: f64,
    pub height_min_m: f64,
    pub height_max_m: f64,
}

impl Default for StairStandards {
    /// Depth 22-38 cm, height 10-22 cm: the common residential standard with the
    /// depth ceiling raised to cover 38 cm steps.
    fn default() -> Self {
        Self {
            depth_min_m: 0.22,
            depth_max_m: 0.38,
            height_min_m: 0.10,
            height_max_m: 0.22,
        }
    }
}

impl StairStandards {
    /// The residential standard on its own (depth 22-35 cm, height 10-22 cm).
    pub fn residential() -> Self {
        Self {
            depth_max_m: 0.35,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.depth_min_m > 0.0
            && self.depth_min_m < self.depth_max_m
            && self.height_min_m > 0.0
            && self.height_min_m < self.height_max_m
            && self.depth_max_m.is_finite()
            && self.height_max_m.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "invalid stair standards {self:?}"
            )))
        }
    }

    /// Bounds are widened by [`STANDARD_TOLERANCE_M`] so that a step lying
    /// exactly on a bound survives rounding in the coordinate correction.
    pub fn accepts(&self, depth_m: f64, height_m: f64) -> bool {
        let t = STANDARD_TOLERANCE_M;
        (self.depth_min_m - t..=self.depth_max_m + t).contains(&depth_m)
            && (self.height_min_m - t..=self.height_max_m + t).contains(&height_m)
    }
}

/// Depth/height from one corner pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub depth_m: f64,
    pub height_m: f64,
    /// Lower corner first (smaller `x`).
    pub pair: [CorrectedTarget; 2],
    pub timestamp_s: f64,
    pub inclination_rad: f64,
    /// Current radar height when known.
    pub radar_height_m: Option<f64>,
}

/// Rotates every (range, angle) detection by the measured inclination.
pub fn correct_coordinates(list: &TargetList, inclination_rad: f64) -> Vec<CorrectedTarget> {
    list.entries
        .iter()
        .flat_map(|e| {
            e.angles_rad.iter().map(move |&theta| {
                let t = inclination_rad + theta;
                CorrectedTarget {
                    true_angle_rad: t,
                    x_m: e.range_m * t.cos(),
                    y_m: e.range_m * t.sin(),
                    range_m: e.range_m,
                    source_angle_rad: theta,
                    magnitude: e.magnitude,
                }
            })
        })
        .collect()
}

/// First corner pair, in a fixed scan order, whose differences meet `standards`.
///
/// Candidates `A` are visited by ascending `x` (ties: stronger first); for each,
/// partners `B` with `x_B > x_A` are tried by ascending distance from `A`
/// (ties: stronger first).
pub fn find_consecutive_corners(
    targets: &[CorrectedTarget],
    standards: &StairStandards,
) -> Option<DimensionEstimate> {
    let mut order: Vec<&CorrectedTarget> = targets.iter().collect();
    order.sort_by(|a, b| {
        a.x_m
            .total_cmp(&b.x_m)
            .then(b.magnitude.total_cmp(&a.magnitude))
    });

    for (i, a) in order.iter().enumerate() {
        let mut partners: Vec<&CorrectedTarget> = order[i + 1..]
            .iter()
            .copied()
            .filter(|b| b.x_m > a.x_m)
            .collect();
        let dist = |b: &CorrectedTarget| (b.x_m - a.x_m).hypot(b.y_m - a.y_m);
        partners.sort_by(|p, q| {
            dist(p)
                .total_cmp(&dist(q))
                .then(q.magnitude.total_cmp(&p.magnitude))
        });
        for b in partners {
            let depth = b.x_m - a.x_m;
            let height = b.y_m - a.y_m;
            if standards.accepts(depth, height) {
                return Some(DimensionEstimate {
                    depth_m: depth,
                    height_m: height,
                    pair: [**a, *b],
                    timestamp_s: 0.0,
                    inclination_rad: 0.0,
                    radar_height_m: None,
                });
            }
        }
    }
    None
}

/// Correction followed by the corner-pair search for one frame.
pub fn estimate_initial(
    list: &TargetList,
    inclination_rad: f64,
    standards: &StairStandards,
) -> Option<DimensionEstimate> {
    let corrected = correct_coordinates(list, inclination_rad);
    let mut est = find_consecutive_corners(&corrected, standards)?;
    debug_assert!(standards.accepts(est.depth_m, est.height_m));
    est.timestamp_s = list.timestamp_s;
    est.inclination_rad = inclination_rad;
    Some(est)
}

/// Acquisition-level `(depth, height)`: the per-dimension median over frames.
pub fn aggregate_median(estimates: &[DimensionEstimate]) -> Option<(f64, f64)> {
    if estimates.is_empty() {
        return None;
    }
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    };
    Some((
        median(estimates.iter().map(|e| e.depth_m).collect()),
        median(estimates.iter().map(|e| e.height_m).collect()),
    ))
}
