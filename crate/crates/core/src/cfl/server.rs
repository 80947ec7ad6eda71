//! Server side: broadcasts cluster models, aggregates weight updates, runs
//! the congruence checks and recursively bi-partitions clusters. Nothing in
//! here can reach client features; clients are only seen through
//! [`FederatedClient::local_update`].

use serde::{Deserialize, Serialize};

use super::{
    bipartition, congruence_norms, cosine_similarity_matrix, split_decision, CflParams, ClusterNode, ClusterState,
    ClusterTree, Decision, FederatedClient, RoundTrace, SimilarityMatrix, TraceLog, WeightDelta,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::nn::{Autoencoder, DenseNetwork};
use crate::rng;

/// Which update vectors feed the network-wide similarity matrices used for
/// membership values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipMatrix {
    /// One M × M matrix from every client's update in its own leaf's last round.
    #[default]
    AssembledFinal,
    /// Per leaf: every client trains once on that leaf's final model; the
    /// resulting M updates form the leaf's matrix.
    LeafBroadcast,
}

#[derive(Debug, Clone)]
pub struct CflOutput {
    pub tree: ClusterTree,
    /// Matrix over all clients assembled from final-round updates.
    pub similarity: Option<SimilarityMatrix>,
    /// `(leaf index, matrix)` when [`MembershipMatrix::LeafBroadcast`] is used.
    pub leaf_similarities: Vec<SimilarityMatrix>,
    pub final_deltas: Vec<Option<WeightDelta>>,
    pub trace: TraceLog,
}

impl CflOutput {
    /// Matrix to use for the membership values of leaf `k`.
    pub fn similarity_for_leaf(&self, k: usize) -> Option<&SimilarityMatrix> {
        self.leaf_similarities.get(k).or(self.similarity.as_ref())
    }
}

/// Federated averaging: `θ_c ← θ_c + mean(Δθ_i)`.
pub fn aggregate(deltas: &[WeightDelta], model: &DenseNetwork) -> Result<DenseNetwork> {
    let first = deltas.first().ok_or(Error::Empty("weight updates"))?;
    let dim = first.len();
    let mut mean = vec![0.0; dim];
    for d in deltas {
        if d.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "weight update length",
                expected: dim,
                actual: d.len(),
            });
        }
        mean.iter_mut().zip(&d.values).for_each(|(m, v)| *m += v);
    }
    let n = deltas.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    let mut out = model.clone();
    out.add_to_trainable(&mean)?;
    Ok(out)
}

struct Pending {
    node: usize,
    state: ClusterState,
}

/// Run clustered federated learning over `clients`.
///
/// Each cluster starts from the pre-trained model with a freshly drawn
/// bottleneck, then repeats rounds of local updates, averaging and the
/// congruence check. A split recurses into both halves, each restarting its
/// local round counter and ε₁.
pub fn run_cfl<C: FederatedClient>(
    clients: &[C],
    pretrained: &Autoencoder,
    params: &CflParams,
    matrix: MembershipMatrix,
    seed: u64,
    exec: Execution,
) -> Result<CflOutput> {
    params.validate()?;
    if clients.is_empty() {
        return Err(Error::Empty("clients"));
    }
    let m = clients.len();
    let index_of = |id: usize| clients.iter().position(|c| c.id() == id);
    let mut root_members: Vec<usize> = clients.iter().map(|c| c.id()).collect();
    root_members.sort_unstable();
    if root_members.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("clients", "duplicate client ids"));
    }

    let mut nodes = vec![ClusterNode {
        id: 0,
        parent: None,
        members: root_members.clone(),
        children: None,
        depth: 0,
        start_round: 0,
        rounds: 0,
        eps1: None,
        history: Vec::new(),
        stop_reason: None,
        model: None,
    }];
    let mut trace = TraceLog::default();
    let mut final_deltas: Vec<Option<WeightDelta>> = vec![None; m];
    let mut stack = vec![Pending {
        node: 0,
        state: ClusterState::new(root_members, 0),
    }];

    while let Some(Pending { node, mut state }) = stack.pop() {
        let cluster_seed = rng::derive(seed, &[node as u64]);
        let mut model = pretrained.clustering_model(rng::derive_str(cluster_seed, "bottleneck"));
        let member_idx: Vec<usize> = state
            .members
            .iter()
            .map(|&id| index_of(id).expect("member ids come from clients"))
            .collect();
        let mut split_into = None;
        let mut stop_reason = None;
        while state.global_round < params.max_tau {
            let round_seed = rng::derive(cluster_seed, &[state.tau as u64]);
            let deltas = exec
                .map(&member_idx, |&i| clients[i].local_update(&model, round_seed))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            model = aggregate(&deltas, &model)?;
            let norms = congruence_norms(&deltas)?;
            let decision = split_decision(&mut state, norms, params);
            trace.rounds.push(RoundTrace {
                cluster: node,
                depth: nodes[node].depth,
                tau: state.tau,
                global_round: state.global_round,
                members: deltas.len(),
                mean_norm: norms.mean_norm,
                max_norm: norms.max_norm,
                ratio: norms.ratio(),
                eps1: state.eps1.unwrap_or(f64::NAN),
                decision,
            });
            for (d, &i) in deltas.iter().zip(&member_idx) {
                final_deltas[i] = Some(d.clone());
            }
            nodes[node].rounds += 1;
            match decision {
                Decision::Continue => {
                    state.tau += 1;
                    state.global_round += 1;
                }
                Decision::Split => {
                    let sim = cosine_similarity_matrix(&deltas)?;
                    split_into = Some(bipartition(&sim)?);
                    break;
                }
                Decision::Stop(reason) => {
                    stop_reason = Some(reason);
                    break;
                }
            }
        }
        if split_into.is_none() && stop_reason.is_none() {
            stop_reason = Some(super::StopReason::MaxRounds);
        }
        let n = &mut nodes[node];
        n.eps1 = state.eps1;
        n.history = state.history.clone();
        n.stop_reason = stop_reason;
        n.model = Some(model);
        if let Some((c1, c2)) = split_into {
            let depth = nodes[node].depth + 1;
            let next_round = state.global_round + 1;
            let ids = [nodes.len(), nodes.len() + 1];
            nodes[node].children = Some(ids);
            for (id, members) in ids.into_iter().zip([c1, c2]) {
                nodes.push(ClusterNode {
                    id,
                    parent: Some(node),
                    members,
                    children: None,
                    depth,
                    start_round: next_round,
                    rounds: 0,
                    eps1: None,
                    history: Vec::new(),
                    stop_reason: None,
                    model: None,
                });
            }
            for id in ids.into_iter().rev() {
                stack.push(Pending {
                    node: id,
                    state: ClusterState::new(nodes[id].members.clone(), next_round),
                });
            }
        }
    }

    let tree = ClusterTree { nodes };
    let similarity = if final_deltas.iter().all(Option::is_some) && m >= 2 {
        let deltas: Vec<WeightDelta> = final_deltas.iter().flatten().cloned().collect();
        Some(cosine_similarity_matrix(&deltas)?)
    } else {
        None
    };
    let leaf_similarities = match matrix {
        MembershipMatrix::AssembledFinal => Vec::new(),
        MembershipMatrix::LeafBroadcast if m >= 2 => tree
            .leaves()
            .iter()
            .map(|leaf| {
                let model = leaf
                    .model
                    .clone()
                    .unwrap_or_else(|| pretrained.clustering_model(rng::derive(seed, &[leaf.id as u64])));
                let s = rng::derive_str(rng::derive(seed, &[leaf.id as u64]), "broadcast");
                let all: Vec<usize> = (0..m).collect();
                let deltas = exec
                    .map(&all, |&i| clients[i].local_update(&model, s))
                    .into_iter()
                    .collect::<Result<Vec<_>>>()?;
                cosine_similarity_matrix(&deltas)
            })
            .collect::<Result<Vec<_>>>()?,
        MembershipMatrix::LeafBroadcast => Vec::new(),
    };
    Ok(CflOutput {
        tree,
        similarity,
        leaf_similarities,
        final_deltas,
        trace,
    })
}
