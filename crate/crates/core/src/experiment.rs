//! Sweep, split, train and evaluate in one call.

use serde::{Deserialize, Serialize};

use crate::enhancer::{
    assemble_dataset, split_dataset, train, Dataset, EnhancerSample, SplitConfig, SweepConfig,
    TrainConfig, TrainOutcome,
};
use crate::error::{Error, Result};
use crate::eval::{compare_estimators, evaluate_enhancer, ErrorReport, Improvement};
use crate::pipeline::PipelineConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pipeline: PipelineConfig,
    pub sweep: SweepConfig,
    pub split: SplitConfig,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    /// Uses `seed` for the sweep, the split and training.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.sweep.seed = seed;
        self.split.seed = seed;
        self.train.seed = seed;
        self
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub dataset: Dataset,
    pub train_set: Vec<EnhancerSample>,
    pub test_set: Vec<EnhancerSample>,
    pub training: TrainOutcome,
    pub report: ErrorReport,
    pub improvement: Improvement,
}

/// Builds the dataset, trains on the training split and scores the held-out split.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let dataset = assemble_dataset(&cfg.sweep, &cfg.pipeline)?;
    let (train_set, test_set) = split_dataset(&dataset.samples, &cfg.split);
    if test_set.is_empty() {
        return Err(Error::Empty("test split"));
    }
    let training = train(&train_set, &cfg.train)?;
    let report = evaluate_enhancer(&training.model, &test_set)?;
    let improvement = compare_estimators(&report);
    Ok(ExperimentOutcome {
        dataset,
        train_set,
        test_set,
        training,
        report,
        improvement,
    })
}
