use serde::{Deserialize, Serialize};

use super::WeightDelta;
use crate::error::{Error, Result};

/// Control parameters of the clustering rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CflParams {
    /// Upper bound on the mean/max norm ratio for a split.
    pub eps2: f64,
    /// Consecutive non-splitting checks tolerated before a cluster stops.
    pub eps3: usize,
    /// Weight of the mean norm in the round-0 threshold ε₁ = β·mean + (1−β)·max.
    pub beta: f64,
    /// Splits are only considered once τ > min_tau.
    pub min_tau: usize,
    /// Global round budget across the whole recursion.
    pub max_tau: usize,
}

impl Default for CflParams {
    fn default() -> Self {
        Self {
            eps2: 0.84,
            eps3: 2,
            beta: 0.5,
            min_tau: 2,
            max_tau: 30,
        }
    }
}

impl CflParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps2 > 0.0 && self.eps2 <= 1.0) {
            return Err(Error::invalid("eps2", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::invalid("beta", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Norm of the mean update and the largest individual update norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CongruenceNorms {
    pub mean_norm: f64,
    pub max_norm: f64,
}

impl CongruenceNorms {
    pub fn ratio(&self) -> f64 {
        self.mean_norm / self.max_norm
    }
}

pub fn congruence_norms(deltas: &[WeightDelta]) -> Result<CongruenceNorms> {
    let first = deltas.first().ok_or(Error::Empty("weight updates"))?;
    let dim = first.len();
    let mut mean = vec![0.0; dim];
    let mut max_norm: f64 = 0.0;
    for d in deltas {
        if d.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "weight update length",
                expected: dim,
                actual: d.len(),
            });
        }
        mean.iter_mut().zip(&d.values).for_each(|(m, v)| *m += v);
        max_norm = max_norm.max(d.norm());
    }
    let n = deltas.len() as f64;
    let mean_norm = mean.iter().map(|m| (m / n).powi(2)).sum::<f64>().sqrt();
    Ok(CongruenceNorms { mean_norm, max_norm })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NoSplitLimit,
    MaxRounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "decision", content = "reason")]
pub enum Decision {
    Continue,
    Split,
    Stop(StopReason),
}

/// Server-side bookkeeping for one cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    pub members: Vec<usize>,
    /// Round index local to this cluster.
    pub tau: usize,
    /// Round index across the whole recursion.
    pub global_round: usize,
    pub n_no_split: usize,
    /// Fixed after the cluster's first round.
    pub eps1: Option<f64>,
    pub history: Vec<CongruenceNorms>,
}

impl ClusterState {
    pub fn new(members: Vec<usize>, global_round: usize) -> Self {
        Self {
            members,
            tau: 0,
            global_round,
            n_no_split: 0,
            eps1: None,
            history: Vec::new(),
        }
    }
}

/// Decide what a cluster does after the round whose norms are `norms`.
///
/// At τ = 0 the threshold ε₁ is fixed as a weighted sum of the two norms.
/// For τ > min_τ a cluster of more than two members splits when the mean
/// norm is at most ε₁ and the mean/max ratio is at most ε₂; otherwise the
/// no-split counter grows and the cluster stops once it exceeds ε₃. The
/// global round budget stops everything at max_τ.
pub fn split_decision(state: &mut ClusterState, norms: CongruenceNorms, params: &CflParams) -> Decision {
    state.history.push(norms);
    if state.tau == 0 || state.eps1.is_none() {
        state.eps1 = Some(params.beta * norms.mean_norm + (1.0 - params.beta) * norms.max_norm);
    }
    let eps1 = state.eps1.unwrap_or(f64::INFINITY);
    if state.tau > params.min_tau {
        let ratio = norms.ratio();
        if state.members.len() > 2 && norms.mean_norm <= eps1 && ratio.is_finite() && ratio <= params.eps2 {
            return Decision::Split;
        }
        state.n_no_split += 1;
        if state.n_no_split > params.eps3 {
            return Decision::Stop(StopReason::NoSplitLimit);
        }
    }
    if state.global_round + 1 >= params.max_tau {
        return Decision::Stop(StopReason::MaxRounds);
    }
    Decision::Continue
}
