//! Versioned JSON checkpoints. `serde_json` is built with `float_roundtrip`,
//! so every `f64` survives a save/load cycle bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Autoencoder;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub total_params: usize,
    pub trainable_params: usize,
    pub model: Autoencoder,
}

impl Checkpoint {
    pub fn new(model: Autoencoder) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            total_params: model.net.total_param_count(),
            trainable_params: model.net.trainable_param_count(),
            model,
        }
    }
}

pub fn save_checkpoint(path: impl AsRef<Path>, model: &Autoencoder) -> Result<()> {
    let json = serde_json::to_vec_pretty(&Checkpoint::new(model.clone()))?;
    crate::experiment::write_atomic(path.as_ref(), &json)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    let ck: Checkpoint = serde_json::from_slice(&bytes)?;
    if ck.version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion(ck.version));
    }
    Ok(ck)
}
