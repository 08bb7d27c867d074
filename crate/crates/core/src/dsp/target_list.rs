use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{degrees, degrees_vec};

/// One detected range with every angle of arrival found at it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEntry {
    #[serde(rename = "r_m")]
    pub range_m: f64,
    /// Angles from boresight in radians (positive counterclockwise).
    #[serde(rename = "theta_deg", with = "degrees_vec")]
    pub angles_rad: Vec<f64>,
    /// Accumulated range-profile magnitude at the detected bin.
    #[serde(rename = "mag")]
    pub magnitude: f64,
}

/// Stationary targets of one frame, sorted by ascending range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetList {
    #[serde(rename = "t")]
    pub timestamp_s: f64,
    #[serde(rename = "gamma_deg", with = "degrees")]
    pub inclination_rad: f64,
    #[serde(rename = "targets")]
    pub entries: Vec<TargetEntry>,
}

impl TargetList {
    pub fn empty(timestamp_s: f64, inclination_rad: f64) -> Self {
        Self {
            timestamp_s,
            inclination_rad,
            entries: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of (range, angle) detections.
    pub fn detection_count(&self) -> usize {
        self.entries.iter().map(|e| e.angles_rad.len()).sum()
    }

    /// Checks the ordering and bounds invariants.
    pub fn check(&self, max_range_m: f64) -> Result<()> {
        for e in &self.entries {
            if !(0.0..=max_range_m).contains(&e.range_m) {
                return Err(Error::Shape(format!(
                    "target range {} outside [0, {max_range_m}]",
                    e.range_m
                )));
            }
            if e.angles_rad
                .iter()
                .any(|t| t.abs() > std::f64::consts::FRAC_PI_2)
            {
                return Err(Error::Shape("target angle beyond +-90 deg".into()));
            }
        }
        if self.entries.windows(2).any(|w| w[0].range_m > w[1].range_m) {
            return Err(Error::Shape("target list not sorted by range".into()));
        }
        Ok(())
    }
}

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write>(mut w: W, lists: &[TargetList]) -> Result<()> {
    for list in lists {
        serde_json::to_writer(&mut w, list)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<TargetList>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
