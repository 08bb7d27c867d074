//! Error statistics for the initial and enhanced estimators.
//!
//! Errors are `estimate - truth`, stored in meters and reported in centimeters.
//! `sigma` is the population standard deviation of the signed error.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::enhancer::{EnhancerModel, EnhancerSample};
use crate::error::{Error, Result};

pub const HISTOGRAM_MIN_CM: f64 = -15.0;
pub const HISTOGRAM_MAX_CM: f64 = 15.0;
pub const HISTOGRAM_BIN_CM: f64 = 0.5;

/// Fixed-width histogram normalized to unit area. Values outside the span are
/// counted in the outermost bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges_cm: Vec<f64>,
    pub densities: Vec<f64>,
}

impl Histogram {
    pub fn from_errors(errors_cm: &[f64]) -> Self {
        let bins = ((HISTOGRAM_MAX_CM - HISTOGRAM_MIN_CM) / HISTOGRAM_BIN_CM).round() as usize;
        let edges_cm = (0..=bins)
            .map(|k| HISTOGRAM_MIN_CM + HISTOGRAM_BIN_CM * k as f64)
            .collect();
        let mut counts = vec![0usize; bins];
        for &e in errors_cm {
            let k = ((e - HISTOGRAM_MIN_CM) / HISTOGRAM_BIN_CM).floor();
            let k = if k < 0.0 {
                0
            } else {
                (k as usize).min(bins - 1)
            };
            counts[k] += 1;
        }
        let norm = errors_cm.len() as f64 * HISTOGRAM_BIN_CM;
        let densities = counts
            .iter()
            .map(|&c| if norm > 0.0 { c as f64 / norm } else { 0.0 })
            .collect();
        Self {
            edges_cm,
            densities,
        }
    }

    pub fn bin_centers_cm(&self) -> Vec<f64> {
        self.edges_cm
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    /// Integral of the density over the bins.
    pub fn mass(&self) -> f64 {
        self.edges_cm
            .windows(2)
            .zip(&self.densities)
            .map(|(w, d)| (w[1] - w[0]) * d)
            .sum()
    }

    /// `bin_center_cm,density` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["bin_center_cm", "density"])?;
        for (c, d) in self.bin_centers_cm().iter().zip(&self.densities) {
            out.write_record([c.to_string(), d.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Error statistics of one estimator on one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub count: usize,
    pub mae_cm: f64,
    pub rmse_cm: f64,
    pub sigma_cm: f64,
    /// Mean signed error.
    pub bias_cm: f64,
    pub error_samples_cm: Vec<f64>,
    pub histogram: Histogram,
}

impl ErrorStats {
    /// Relative gap between `rmse^2` and `sigma^2 + bias^2`.
    pub fn consistency_residual(&self) -> f64 {
        let lhs = self.rmse_cm * self.rmse_cm;
        let rhs = self.sigma_cm * self.sigma_cm + self.bias_cm * self.bias_cm;
        if lhs == 0.0 && rhs == 0.0 {
            0.0
        } else {
            (lhs - rhs).abs() / lhs.max(rhs)
        }
    }
}

/// MAE, RMSE and population sigma of `estimates - truths` (inputs in meters).
pub fn compute_metrics(estimates: &[f64], truths: &[f64]) -> Result<ErrorStats> {
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch {
            estimates: estimates.len(),
            truths: truths.len(),
        });
    }
    if estimates.is_empty() {
        return Err(Error::Empty("metric input"));
    }
    if estimates.iter().chain(truths).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("metric input"));
    }
    let errors: Vec<f64> = estimates
        .iter()
        .zip(truths)
        .map(|(e, t)| (e - t) * 100.0)
        .collect();
    let n = errors.len() as f64;
    let bias = errors.iter().sum::<f64>() / n;
    let mae = errors.iter().map(|e| e.abs()).sum::<f64>() / n;
    let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let sigma = (errors.iter().map(|e| (e - bias) * (e - bias)).sum::<f64>() / n).sqrt();
    Ok(ErrorStats {
        count: errors.len(),
        mae_cm: mae,
        rmse_cm: rmse,
        sigma_cm: sigma,
        bias_cm: bias,
        histogram: Histogram::from_errors(&errors),
        error_samples_cm: errors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorErrors {
    pub depth: ErrorStats,
    pub height: ErrorStats,
}

impl EstimatorErrors {
    /// `estimates` and `truths` hold `(depth, height)` pairs in meters.
    pub fn new(estimates: &[[f64; 2]], truths: &[[f64; 2]]) -> Result<Self> {
        let col = |v: &[[f64; 2]], k: usize| v.iter().map(|p| p[k]).collect::<Vec<_>>();
        Ok(Self {
            depth: compute_metrics(&col(estimates, 0), &col(truths, 0))?,
            height: compute_metrics(&col(estimates, 1), &col(truths, 1))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub initial: EstimatorErrors,
    pub enhanced: EstimatorErrors,
}

impl ErrorReport {
    pub fn new(initial: &[[f64; 2]], enhanced: &[[f64; 2]], truths: &[[f64; 2]]) -> Result<Self> {
        Ok(Self {
            initial: EstimatorErrors::new(initial, truths)?,
            enhanced: EstimatorErrors::new(enhanced, truths)?,
        })
    }

    fn all_stats(&self) -> [(&'static str, &'static str, &ErrorStats); 4] {
        [
            ("initial", "depth", &self.initial.depth),
            ("initial", "height", &self.initial.height),
            ("enhanced", "depth", &self.enhanced.depth),
            ("enhanced", "height", &self.enhanced.height),
        ]
    }

    /// Largest `rmse^2` vs `sigma^2 + bias^2` residual over the four series.
    pub fn max_consistency_residual(&self) -> f64 {
        self.all_stats()
            .iter()
            .map(|(_, _, s)| s.consistency_residual())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `report.json` plus `hist_<estimator>_<dimension>.csv` in `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        for (est, dim, stats) in self.all_stats() {
            let f = std::fs::File::create(dir.join(format!("hist_{est}_{dim}.csv")))?;
            stats.histogram.write_csv(std::io::BufWriter::new(f))?;
        }
        Ok(())
    }
}

/// `(initial - enhanced) / initial`; `None` when the initial value is zero.
pub fn relative_improvement(initial: f64, enhanced: f64) -> Option<f64> {
    (initial != 0.0).then(|| (initial - enhanced) / initial)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricImprovement {
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
    pub sigma: Option<f64>,
}

impl MetricImprovement {
    fn between(a: &ErrorStats, b: &ErrorStats) -> Self {
        Self {
            mae: relative_improvement(a.mae_cm, b.mae_cm),
            rmse: relative_improvement(a.rmse_cm, b.rmse_cm),
            sigma: relative_improvement(a.sigma_cm, b.sigma_cm),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub depth: MetricImprovement,
    pub height: MetricImprovement,
    /// Mean of the depth and height MAE improvements.
    pub overall_mae: Option<f64>,
    /// Enhanced is strictly lower on every metric of both dimensions.
    pub enhanced_better_everywhere: bool,
}

pub fn compare_estimators(report: &ErrorReport) -> Improvement {
    let depth = MetricImprovement::between(&report.initial.depth, &report.enhanced.depth);
    let height = MetricImprovement::between(&report.initial.height, &report.enhanced.height);
    let overall_mae = depth.mae.zip(height.mae).map(|(d, h)| 0.5 * (d + h));
    let better = |a: &ErrorStats, b: &ErrorStats| {
        b.mae_cm < a.mae_cm && b.rmse_cm < a.rmse_cm && b.sigma_cm < a.sigma_cm
    };
    Improvement {
        depth,
        height,
        overall_mae,
        enhanced_better_everywhere: better(&report.initial.depth, &report.enhanced.depth)
            && better(&report.initial.height, &report.enhanced.height),
    }
}

/// Compares the model against the initial estimator on `samples`.
pub fn evaluate_enhancer(model: &EnhancerModel, samples: &[EnhancerSample]) -> Result<ErrorReport> {
    let initial: Vec<[f64; 2]> = samples
        .iter()
        .map(EnhancerSample::initial_estimate)
        .collect();
    let enhanced = samples
        .iter()
        .map(|s| model.forward(&s.inputs))
        .collect::<Result<Vec<_>>>()?;
    let truths: Vec<[f64; 2]> = samples.iter().map(|s| s.labels).collect();
    ErrorReport::new(&initial, &enhanced, &truths)
}
