//! Client side of the federation. Feature data is private to [`LmbeClient`];
//! the only thing that leaves a client is the [`WeightDelta`] it returns.

use serde::{Deserialize, Serialize};

use super::WeightDelta;
use crate::dsp::LmbeMatrix;
use crate::error::{Error, Result};
use crate::nn::{DenseNetwork, FeatureNorm, Loss};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalTraining {
    pub lr: f64,
    pub batch_size: usize,
    /// Passes over the local data per communication round.
    pub epochs: usize,
}

impl Default for LocalTraining {
    fn default() -> Self {
        Self {
            lr: 0.01,
            batch_size: 32,
            epochs: 1,
        }
    }
}

/// A participant in the federation.
pub trait FederatedClient: Sync {
    fn id(&self) -> usize;

    /// Train a copy of `model` locally and return `θ_after − θ_before` over
    /// the trainable parameters.
    fn local_update(&self, model: &DenseNetwork, seed: u64) -> Result<WeightDelta>;
}

/// Node holding normalised LMBE frames and training the autoencoder on them.
pub struct LmbeClient {
    id: usize,
    frames: Vec<Vec<f64>>,
    training: LocalTraining,
}

impl std::fmt::Debug for LmbeClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LmbeClient")
            .field("id", &self.id)
            .field("frames", &self.frames.len())
            .finish()
    }
}

impl LmbeClient {
    pub fn new(id: usize, features: &LmbeMatrix, norm: &FeatureNorm, training: LocalTraining) -> Result<Self> {
        if features.frames() == 0 {
            return Err(Error::Empty("client features"));
        }
        if norm.mean.len() != features.band_count() {
            return Err(Error::DimensionMismatch {
                context: "feature normalisation",
                expected: norm.mean.len(),
                actual: features.band_count(),
            });
        }
        Ok(Self {
            id,
            frames: features.rows().map(|r| norm.apply(r)).collect(),
            training,
        })
    }
}

impl FederatedClient for LmbeClient {
    fn id(&self) -> usize {
        self.id
    }

    fn local_update(&self, model: &DenseNetwork, seed: u64) -> Result<WeightDelta> {
        let trainable = model.frozen_mask().iter().filter(|f| !**f).count();
        if trainable != 1 {
            return Err(Error::invalid(
                "cluster_model",
                format!("expected exactly one trainable layer, found {trainable}"),
            ));
        }
        let before = model.flatten_trainable();
        if self.training.epochs == 0 {
            return Ok(WeightDelta::new(self.id, vec![0.0; before.len()]));
        }
        let start = model.frozen_prefix_len();
        let inputs = self
            .frames
            .iter()
            .map(|f| model.forward_until(start, f))
            .collect::<Result<Vec<_>>>()?;
        let targets: Vec<&[f64]> = self.frames.iter().map(Vec::as_slice).collect();
        let mut net = model.clone();
        let mut r = rng::rng(rng::derive(seed, &[self.id as u64]));
        for _ in 0..self.training.epochs {
            crate::nn::train::sgd_epoch_from(
                &mut net,
                start,
                &inputs,
                &targets,
                self.training.batch_size,
                self.training.lr,
                Loss::Mse,
                &mut r,
            )?;
        }
        let after = net.flatten_trainable();
        Ok(WeightDelta::new(
            self.id,
            after.0.iter().zip(&before.0).map(|(a, b)| a - b).collect(),
        ))
    }
}
