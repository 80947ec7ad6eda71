use serde::{Deserialize, Serialize};

use super::train::sgd_epoch_from;
use super::{Activation, DenseNetwork, Loss};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderConfig {
    /// Layer widths from input to reconstruction, e.g. `[128, 20, 8, 8, 20, 128]`.
    pub layer_dims: Vec<usize>,
    /// Index of the layer trained during clustering.
    pub bottleneck_layer: usize,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            layer_dims: vec![128, 20, 8, 8, 20, 128],
            bottleneck_layer: 2,
        }
    }
}

impl AutoencoderConfig {
    /// Layout whose bottleneck layer holds 841 parameters (28 → 29).
    pub fn wide_bottleneck() -> Self {
        Self {
            layer_dims: vec![128, 20, 28, 29, 20, 128],
            bottleneck_layer: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 3 {
            return Err(Error::invalid("layer_dims", "an autoencoder needs at least two layers"));
        }
        if self.layer_dims.contains(&0) {
            return Err(Error::invalid("layer_dims", "zero-width layer"));
        }
        if self.layer_dims.first() != self.layer_dims.last() {
            return Err(Error::invalid("layer_dims", "input and output widths must match"));
        }
        if self.bottleneck_layer >= self.layer_dims.len() - 1 {
            return Err(Error::invalid("bottleneck_layer", "index out of range"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    fn activations(&self) -> Vec<Activation> {
        let n = self.layer_dims.len() - 1;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    Activation::Linear
                } else {
                    Activation::Relu
                }
            })
            .collect()
    }
}

/// Per-band standardisation applied to LMBE frames before the network.
/// Constants come from the pre-training corpus and stay fixed afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorm {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl FeatureNorm {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut it = rows.into_iter().peekable();
        let dim = it.peek().map(|r| r.len()).ok_or(Error::Empty("normalisation corpus"))?;
        let mut sum = vec![0.0; dim];
        let mut sq = vec![0.0; dim];
        let mut n = 0usize;
        for r in it {
            for (k, v) in r.iter().enumerate() {
                sum[k] += v;
                sq[k] += v * v;
            }
            n += 1;
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let scale = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let var = (q / n as f64 - m * m).max(0.0);
                let sd = var.sqrt();
                if sd > 1e-8 {
                    1.0 / sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) * s)
            .collect()
    }
}

/// Pre-trained autoencoder plus the metadata clustering needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Autoencoder {
    pub net: DenseNetwork,
    pub bottleneck_layer: usize,
    pub norm: FeatureNorm,
    pub final_loss: Option<f64>,
}

impl Autoencoder {
    /// Glorot-initialised, fully trainable network with identity normalisation.
    pub fn build(config: &AutoencoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let net = DenseNetwork::glorot(&config.layer_dims, &config.activations(), seed)?;
        Ok(Self {
            net,
            bottleneck_layer: config.bottleneck_layer,
            norm: FeatureNorm::identity(config.input_dim()),
            final_loss: None,
        })
    }

    /// Network with everything but the bottleneck frozen and the bottleneck
    /// re-drawn from `[-a, a]`, `a = sqrt(6 / (fan_in + fan_out))`.
    pub fn clustering_model(&self, seed: u64) -> DenseNetwork {
        let mut net = self.net.clone();
        net.freeze_all_except(self.bottleneck_layer);
        net.layer_mut(self.bottleneck_layer).reinitialize(seed);
        net
    }

    pub fn bottleneck_param_count(&self) -> usize {
        self.net.layers()[self.bottleneck_layer].param_count()
    }

    pub fn normalize(&self, row: &[f64]) -> Vec<f64> {
        self.norm.apply(row)
    }

    pub fn reconstruction_loss(&self, rows: &[Vec<f64>]) -> Result<f64> {
        if rows.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let mut total = 0.0;
        for r in rows {
            total += super::mse_loss(r, &self.net.forward(r)?)?;
        }
        Ok(total / rows.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainReport {
    /// Reconstruction loss over the whole dataset after each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Shuffled mini-batch SGD with MSE reconstruction loss over `epochs` passes
/// of the (already normalised) `dataset`. All layers are trained; afterwards
/// every layer but the bottleneck is frozen.
pub fn pretrain(
    model: &mut Autoencoder,
    dataset: &[Vec<f64>],
    epochs: usize,
    lr: f64,
    batch_size: usize,
    seed: u64,
) -> Result<PretrainReport> {
    if dataset.is_empty() {
        return Err(Error::Empty("pre-training dataset"));
    }
    if !(lr > 0.0) {
        return Err(Error::invalid("lr", "learning rate must be positive"));
    }
    let dim = model.net.input_dim();
    if let Some(bad) = dataset.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            context: "pre-training frame",
            expected: dim,
            actual: bad.len(),
        });
    }
    let mask = model.net.frozen_mask();
    for i in 0..mask.len() {
        model.net.set_frozen(i, false);
    }
    let targets: Vec<&[f64]> = dataset.iter().map(Vec::as_slice).collect();
    let mut r = rng::rng(seed);
    let mut epoch_losses = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        sgd_epoch_from(&mut model.net, 0, dataset, &targets, batch_size, lr, Loss::Mse, &mut r)?;
        epoch_losses.push(model.reconstruction_loss(dataset)?);
    }
    for (i, f) in mask.into_iter().enumerate() {
        model.net.set_frozen(i, f);
    }
    if epochs > 0 {
        model.final_loss = epoch_losses.last().copied();
        model.net.freeze_all_except(model.bottleneck_layer);
    }
    Ok(PretrainReport { epoch_losses })
}
