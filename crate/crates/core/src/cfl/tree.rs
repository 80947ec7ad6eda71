use serde::{Deserialize, Serialize};

use super::{CongruenceNorms, StopReason};
use crate::nn::DenseNetwork;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterNode {
    pub id: usize,
    pub parent: Option<usize>,
    /// Client ids, ascending.
    pub members: Vec<usize>,
    pub children: Option<[usize; 2]>,
    pub depth: usize,
    /// Global round at which this cluster started training.
    pub start_round: usize,
    pub rounds: usize,
    pub eps1: Option<f64>,
    pub history: Vec<CongruenceNorms>,
    pub stop_reason: Option<StopReason>,
    /// Cluster master model after its last round.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model: Option<DenseNetwork>,
}

impl ClusterNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Recursive partition of the clients; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    pub nodes: Vec<ClusterNode>,
}

impl ClusterTree {
    pub fn root(&self) -> &ClusterNode {
        &self.nodes[0]
    }

    /// Leaves in depth-first order, first child before second.
    pub fn leaves(&self) -> Vec<&ClusterNode> {
        let mut out = Vec::new();
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            match self.nodes[i].children {
                Some([a, b]) => {
                    stack.push(b);
                    stack.push(a);
                }
                None => out.push(&self.nodes[i]),
            }
        }
        out
    }

    pub fn leaf_members(&self) -> Vec<Vec<usize>> {
        self.leaves().into_iter().map(|l| l.members.clone()).collect()
    }

    /// Leaf index (in `leaves()` order) for every client id in `0..m`.
    pub fn assignment(&self, m: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; m];
        for (k, leaf) in self.leaves().iter().enumerate() {
            for &c in &leaf.members {
                if c < m {
                    out[c] = Some(k);
                }
            }
        }
        out
    }

    /// Same structure without cluster models (for reports).
    pub fn without_models(&self) -> Self {
        Self {
            nodes: self
                .nodes
                .iter()
                .map(|n| ClusterNode {
                    model: None,
                    ..n.clone()
                })
                .collect(),
        }
    }
}
