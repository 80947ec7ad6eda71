use serde::{Deserialize, Serialize};

use super::WeightDelta;
use crate::error::{Error, Result};

/// Symmetric matrix of pairwise cosine similarities, row-major over `node_ids`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    node_ids: Vec<usize>,
    entries: Vec<f64>,
}

impl SimilarityMatrix {
    /// Build from a full row-major matrix. Symmetry (within 1e-12) and the
    /// `[-1, 1]` range are checked.
    pub fn from_entries(node_ids: Vec<usize>, entries: Vec<f64>) -> Result<Self> {
        let m = node_ids.len();
        if entries.len() != m * m {
            return Err(Error::DimensionMismatch {
                context: "similarity entries",
                expected: m * m,
                actual: entries.len(),
            });
        }
        for i in 0..m {
            for j in 0..m {
                let a = entries[i * m + j];
                if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&a) {
                    return Err(Error::invalid(
                        "similarity",
                        format!("entry ({i},{j}) = {a} outside [-1, 1]"),
                    ));
                }
                if (a - entries[j * m + i]).abs() > 1e-12 {
                    return Err(Error::invalid("similarity", "matrix is not symmetric"));
                }
            }
        }
        Ok(Self { node_ids, entries })
    }

    pub fn size(&self) -> usize {
        self.node_ids.len()
    }

    pub fn node_ids(&self) -> &[usize] {
        &self.node_ids
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.size();
        &self.entries[i * m..(i + 1) * m]
    }

    /// Position of node id `id` in this matrix.
    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.node_ids.iter().position(|&n| n == id)
    }
}

/// `A[i][j] = ⟨dᵢ, dⱼ⟩ / (‖dᵢ‖ ‖dⱼ‖)`. A zero-norm update is an error naming
/// the client, since it means local training produced no signal.
pub fn cosine_similarity_matrix(deltas: &[WeightDelta]) -> Result<SimilarityMatrix> {
    if deltas.len() < 2 {
        return Err(Error::invalid("deltas", "need at least two weight updates"));
    }
    let dim = deltas[0].len();
    if let Some(d) = deltas.iter().find(|d| d.len() != dim) {
        return Err(Error::DimensionMismatch {
            context: "weight update length",
            expected: dim,
            actual: d.len(),
        });
    }
    let norms: Vec<f64> = deltas.iter().map(WeightDelta::norm).collect();
    if let Some(i) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::ZeroNormUpdate {
            client: deltas[i].client,
        });
    }
    let m = deltas.len();
    let mut entries = vec![0.0; m * m];
    for i in 0..m {
        entries[i * m + i] = 1.0;
        for j in i + 1..m {
            let dot: f64 = deltas[i].values.iter().zip(&deltas[j].values).map(|(a, b)| a * b).sum();
            let a = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            entries[i * m + j] = a;
            entries[j * m + i] = a;
        }
    }
    Ok(SimilarityMatrix {
        node_ids: deltas.iter().map(|d| d.client).collect(),
        entries,
    })
}
