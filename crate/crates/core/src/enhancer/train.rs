//! Backpropagation, Adam and the training loop.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{
    Activation, DenseLayer, EnhancerModel, EnhancerSample, Normalization, INPUT_DIM, OUTPUT_DIM,
};
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, seeded_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub hidden_layers: [usize; 2],
    pub activation: Activation,
    /// Share of the training set held back for the validation curve.
    pub validation_fraction: f64,
    /// Stop once validation loss has not improved for this many epochs.
    pub early_stopping_patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            hidden_layers: [16, 8],
            activation: Activation::Relu,
            validation_fraction: 0.1,
            early_stopping_patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.epochs == 0 {
            return fail("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return fail("batch size must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning rate must be > 0");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return fail("Adam moment coefficients must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return fail("Adam epsilon must be > 0");
        }
        if self.hidden_layers.contains(&0) {
            return fail("hidden layers need at least one unit");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return fail("validation fraction must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn layer_sizes(&self) -> [usize; 4] {
        [
            INPUT_DIM,
            self.hidden_layers[0],
            self.hidden_layers[1],
            OUTPUT_DIM,
        ]
    }
}

/// Parameter-shaped gradient (or optimizer moment) storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
}

impl Gradients {
    fn zeros_like(model: &EnhancerModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    /// Every entry in layer order, weights before biases.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }
}

fn params_mut(layers: &mut [DenseLayer]) -> impl Iterator<Item = &mut f64> {
    layers
        .iter_mut()
        .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
}

/// Squared error averaged over the outputs.
fn sample_loss(pred: &[f64], label: &[f64]) -> f64 {
    pred.iter()
        .zip(label)
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / pred.len() as f64
}

fn accumulate(
    model: &EnhancerModel,
    input: &[f64],
    label: &[f64],
    weight: f64,
    grads: &mut Gradients,
) -> f64 {
    let trace = model.trace(input);
    let pred = trace.activations.last().expect("model has layers");
    let n_out = pred.len() as f64;
    let mut delta: Vec<f64> = pred
        .iter()
        .zip(label)
        .map(|(p, y)| 2.0 * (p - y) / n_out * weight)
        .collect();

    for k in (0..model.layers.len()).rev() {
        let layer = &model.layers[k];
        let a = &trace.activations[k];
        let g = &mut grads.layers[k];
        for (o, d) in delta.iter().enumerate() {
            g.biases[o] += d;
            let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
            for (gw, ai) in row.iter_mut().zip(a) {
                *gw += d * ai;
            }
        }
        if k > 0 {
            let pre = &trace.pre_activations[k - 1];
            delta = (0..layer.inputs)
                .map(|i| {
                    let back: f64 = delta
                        .iter()
                        .enumerate()
                        .map(|(o, d)| layer.weight(o, i) * d)
                        .sum();
                    back * model.activation.derivative(pre[i])
                })
                .collect();
        }
    }
    sample_loss(pred, label) * weight
}

/// Mean loss over `samples` and its gradient with respect to every parameter.
pub fn loss_and_gradients(
    model: &EnhancerModel,
    samples: &[(Vec<f64>, Vec<f64>)],
) -> (f64, Gradients) {
    let mut grads = Gradients::zeros_like(model);
    let w = 1.0 / samples.len().max(1) as f64;
    let loss = samples
        .iter()
        .map(|(x, y)| accumulate(model, x, y, w, &mut grads))
        .sum();
    (loss, grads)
}

fn loss_only(model: &EnhancerModel, x: &[f64], y: &[f64]) -> f64 {
    sample_loss(&model.forward_raw(x), y)
}

/// Largest relative discrepancy between backpropagated gradients and central
/// finite differences (step 1e-5) over every parameter, for one sample.
///
/// Relative error is `|a - n| / max(|a|, |n|, 1e-6)` so that parameters with
/// vanishing gradients are compared absolutely.
pub fn gradient_check(model: &EnhancerModel, input: &[f64], label: &[f64]) -> f64 {
    const STEP: f64 = 1e-5;
    let (_, grads) = loss_and_gradients(model, &[(input.to_vec(), label.to_vec())]);
    let analytic = grads.flatten();
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (idx, &a) in analytic.iter().enumerate() {
        let original = {
            let p = params_mut(&mut probe.layers)
                .nth(idx)
                .expect("index within parameter count");
            let v = *p;
            *p = v + STEP;
            v
        };
        let up = loss_only(&probe, input, label);
        *params_mut(&mut probe.layers)
            .nth(idx)
            .expect("index within parameter count") = original - STEP;
        let down = loss_only(&probe, input, label);
        *params_mut(&mut probe.layers)
            .nth(idx)
            .expect("index within parameter count") = original;
        let numeric = (up - down) / (2.0 * STEP);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: EnhancerModel,
    pub history: Vec<EpochLoss>,
}

struct Adam {
    m: Gradients,
    v: Gradients,
    step: i32,
}

impl Adam {
    fn update(&mut self, model: &mut EnhancerModel, grads: &Gradients, cfg: &TrainConfig) {
        self.step += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.step);
        let c2 = 1.0 - cfg.beta2.powi(self.step);
        let g = grads.flatten();
        for (((p, m), v), g) in params_mut(&mut model.layers)
            .zip(params_mut(&mut self.m.layers))
            .zip(params_mut(&mut self.v.layers))
            .zip(g)
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + cfg.epsilon);
        }
    }
}

fn mean_loss(model: &EnhancerModel, set: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    set.iter().map(|(x, y)| loss_only(model, x, y)).sum::<f64>() / set.len() as f64
}

/// Mini-batch Adam on the mean squared error over depth and height.
///
/// A seeded `validation_fraction` share of `samples` is held back for the
/// validation curve. Single-threaded; the result depends only on `samples`
/// (including their order) and `cfg`.
pub fn train(samples: &[EnhancerSample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Empty("training set"));
    }
    for s in samples {
        if s.inputs.iter().chain(&s.labels).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training sample"));
        }
    }

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut seeded_rng(derive_seed(cfg.seed, 1)));
    let n_val = (samples.len() as f64 * cfg.validation_fraction).floor() as usize;
    let (val_idx, train_idx) = order.split_at(n_val.min(samples.len() - 1));

    let train_rows: Vec<[f64; INPUT_DIM]> = train_idx.iter().map(|&i| samples[i].inputs).collect();
    let mut model =
        EnhancerModel::random(&cfg.layer_sizes(), cfg.activation, derive_seed(cfg.seed, 2));
    model.normalization = Normalization::fit(&train_rows);
    let last = model.layers.len() - 1;
    for o in 0..OUTPUT_DIM {
        model.layers[last].biases[o] =
            train_idx.iter().map(|&i| samples[i].labels[o]).sum::<f64>() / train_idx.len() as f64;
    }
    model.train_config = Some(*cfg);
    model.dataset_fingerprint = Some(super::dataset::fingerprint(samples));

    let pairs = |idx: &[usize]| -> Vec<(Vec<f64>, Vec<f64>)> {
        idx.iter()
            .map(|&i| (samples[i].inputs.to_vec(), samples[i].labels.to_vec()))
            .collect()
    };
    let mut train_set = pairs(train_idx);
    let val_set = pairs(val_idx);

    let mut adam = Adam {
        m: Gradients::zeros_like(&model),
        v: Gradients::zeros_like(&model),
        step: 0,
    };
    let mut rng = seeded_rng(derive_seed(cfg.seed, 3));
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best_val = f64::INFINITY;
    let mut since_best = 0;

    for epoch in 0..cfg.epochs {
        train_set.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in train_set.chunks(cfg.batch_size) {
            let (loss, grads) = loss_and_gradients(&model, batch);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            epoch_loss += loss * batch.len() as f64;
            adam.update(&mut model, &grads, cfg);
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        let validation_loss = (!val_set.is_empty()).then(|| mean_loss(&model, &val_set));
        if !train_loss.is_finite()
            || model
                .layers
                .iter()
                .any(|l| l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()))
        {
            return Err(Error::Diverged {
                epoch,
                loss: train_loss,
            });
        }
        history.push(EpochLoss {
            epoch,
            train_loss,
            validation_loss,
        });
        log::debug!("epoch {epoch}: train {train_loss:.3e} validation {validation_loss:?}");

        if let (Some(patience), Some(v)) = (cfg.early_stopping_patience, validation_loss) {
            if v < best_val {
                best_val = v;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= patience {
                    break;
                }
            }
        }
    }
    Ok(TrainOutcome { model, history })
}
