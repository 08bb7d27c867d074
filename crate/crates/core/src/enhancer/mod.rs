//! Shallow MLP that maps a corner pair, the radar height and the inclination to
//! the step's depth and height.
//!
//! Input vector: `(r1 [m], theta1 [rad], r2 [m], theta2 [rad], h_r [m], gamma [rad])`
//! with the corners' corrected polar coordinates ordered by range. Output:
//! `(depth [m], height [m])`. Inputs are standardized with statistics stored in
//! the model; hidden layers default to 16 and 8 units.

mod dataset;
mod train;

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::seeded_rng;

pub use dataset::{
    assemble_dataset, fingerprint, read_dataset_csv, sample_from_estimate, split_dataset,
    write_dataset_csv, ComboCoverage, Dataset, EnhancerSample, SplitConfig, SweepConfig,
};
pub use train::{
    gradient_check, loss_and_gradients, train, EpochLoss, Gradients, TrainConfig, TrainOutcome,
};

pub const INPUT_DIM: usize = 6;
pub const OUTPUT_DIM: usize = 2;

/// Tibia-to-boresight mount angle entering the radar-height relation.
pub const MOUNT_ANGLE_RAD: f64 = 20.0 * std::f64::consts::PI / 180.0;

/// Current radar height `h_i cos(gamma + 20 deg)`.
pub fn radar_height(initial_height_m: f64, inclination_rad: f64) -> f64 {
    initial_height_m * (inclination_rad + MOUNT_ANGLE_RAD).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the pre-activation value.
    #[inline]
    pub fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    #[inline]
    pub fn weight(&self, out: usize, inp: usize) -> f64 {
        self.weights[out * self.inputs + inp]
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.biases[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

/// Per-feature standardization `(x - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Mean and population standard deviation per feature; constant features get scale 1.
    pub fn fit(rows: &[[f64; INPUT_DIM]]) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; INPUT_DIM];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut scale = vec![0.0; INPUT_DIM];
        for r in rows {
            for ((s, v), m) in scale.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        for s in &mut scale {
            *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
        }
        Self { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// The enhancer network plus everything needed to reproduce its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhancerModel {
    pub layers: Vec<DenseLayer>,
    pub activation: Activation,
    pub normalization: Normalization,
    pub train_config: Option<TrainConfig>,
    pub dataset_fingerprint: Option<String>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone, Default)]
pub struct ForwardTrace {
    /// `activations[0]` is the normalized input; `activations[k]` the output of layer `k - 1`.
    pub activations: Vec<Vec<f64>>,
    /// Pre-activation values per layer.
    pub pre_activations: Vec<Vec<f64>>,
}

impl EnhancerModel {
    /// All-zero parameters with identity normalization.
    pub fn zeros(sizes: &[usize], activation: Activation) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| DenseLayer::zeros(w[0], w[1]))
            .collect();
        Self {
            layers,
            activation,
            normalization: Normalization::identity(sizes[0]),
            train_config: None,
            dataset_fingerprint: None,
        }
    }

    /// Uniform fan-in scaled initialization with zero biases.
    pub fn random(sizes: &[usize], activation: Activation, seed: u64) -> Self {
        let mut model = Self::zeros(sizes, activation);
        let mut rng = seeded_rng(seed);
        let gain = match activation {
            Activation::Relu => 6.0,
            _ => 3.0,
        };
        for layer in &mut model.layers {
            let limit = (gain / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..limit);
            }
        }
        model
    }

    /// `[6, 16, 8, 2]` for the default network.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidConfig("model has no layers".into()));
        }
        for w in self.layers.windows(2) {
            if w[0].outputs != w[1].inputs {
                return Err(Error::Shape("consecutive layer sizes do not chain".into()));
            }
        }
        for l in &self.layers {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(Error::Shape(
                    "layer parameter count does not match its size".into(),
                ));
            }
            if l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("model parameters"));
            }
        }
        let n = self.layers[0].inputs;
        if self.normalization.mean.len() != n || self.normalization.scale.len() != n {
            return Err(Error::Shape(
                "normalization statistics do not match the input size".into(),
            ));
        }
        if self
            .normalization
            .scale
            .iter()
            .any(|s| !(s.is_finite() && *s > 0.0))
        {
            return Err(Error::InvalidConfig(
                "normalization scale must be finite and > 0".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn trace(&self, input: &[f64]) -> ForwardTrace {
        let mut trace = ForwardTrace {
            activations: vec![self.normalization.apply(input)],
            pre_activations: Vec::with_capacity(self.layers.len()),
        };
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut pre = Vec::with_capacity(layer.outputs);
            layer.affine(&trace.activations[k], &mut pre);
            let act = if k == last {
                pre.clone()
            } else {
                pre.iter().map(|&v| self.activation.apply(v)).collect()
            };
            trace.pre_activations.push(pre);
            trace.activations.push(act);
        }
        trace
    }

    /// Raw network output for an arbitrary-length input (no finiteness checks).
    pub fn forward_raw(&self, input: &[f64]) -> Vec<f64> {
        self.trace(input).activations.pop().unwrap_or_default()
    }

    /// Depth and height in meters.
    pub fn forward(&self, input: &[f64; INPUT_DIM]) -> Result<[f64; OUTPUT_DIM]> {
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("enhancer input"));
        }
        if self.layers[0].inputs != INPUT_DIM
            || self.layers.last().map(|l| l.outputs) != Some(OUTPUT_DIM)
        {
            return Err(Error::Shape(format!(
                "model is {:?}, expected 6 inputs and 2 outputs",
                self.layer_sizes()
            )));
        }
        let out = self.forward_raw(input);
        Ok([out[0], out[1]])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        let model = EnhancerModel::try_from(file)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

/// On-disk model layout.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    layer_sizes: Vec<usize>,
    activation: Activation,
    layers: Vec<LayerFile>,
    normalization: Normalization,
    train_config: Option<TrainConfig>,
    dataset_fingerprint: Option<String>,
}

impl From<&EnhancerModel> for ModelFile {
    fn from(m: &EnhancerModel) -> Self {
        Self {
            layer_sizes: m.layer_sizes(),
            activation: m.activation,
            layers: m
                .layers
                .iter()
                .map(|l| LayerFile {
                    weights: l.weights.chunks(l.inputs).map(<[f64]>::to_vec).collect(),
                    biases: l.biases.clone(),
                })
                .collect(),
            normalization: m.normalization.clone(),
            train_config: m.train_config,
            dataset_fingerprint: m.dataset_fingerprint.clone(),
        }
    }
}

impl TryFrom<ModelFile> for EnhancerModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        if f.layer_sizes.len() != f.layers.len() + 1 {
            return Err(Error::Shape(
                "layer_sizes does not match the number of layers".into(),
            ));
        }
        let mut layers = Vec::with_capacity(f.layers.len());
        for (k, l) in f.layers.into_iter().enumerate() {
            let (inputs, outputs) = (f.layer_sizes[k], f.layer_sizes[k + 1]);
            if l.weights.len() != outputs || l.weights.iter().any(|r| r.len() != inputs) {
                return Err(Error::Shape(format!(
                    "layer {k} weights are not {outputs}x{inputs}"
                )));
            }
            layers.push(DenseLayer {
                inputs,
                outputs,
                weights: l.weights.concat(),
                biases: l.biases,
            });
        }
        Ok(Self {
            layers,
            activation: f.activation,
            normalization: f.normalization,
            train_config: f.train_config,
            dataset_fingerprint: f.dataset_fingerprint,
        })
    }
}
