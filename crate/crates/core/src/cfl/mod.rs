//! Clustered federated learning over bottleneck weight updates.
//!
//! The module is split along the privacy boundary: [`client`] owns the local
//! feature data and is the only place that touches it; [`server`] and the
//! helpers it uses ([`similarity`], [`congruence`], [`partition`]) see nothing
//! but [`WeightDelta`] vectors and the models they broadcast.

pub mod client;
pub mod congruence;
pub mod delta;
pub mod partition;
pub mod server;
pub mod similarity;
pub mod trace;
pub mod tree;

pub use client::{FederatedClient, LmbeClient, LocalTraining};
pub use congruence::{
    congruence_norms, split_decision, CflParams, ClusterState, CongruenceNorms, Decision, StopReason,
};
pub use delta::WeightDelta;
pub use partition::{bipartition, max_inter_similarity};
pub use server::{aggregate, run_cfl, CflOutput, MembershipMatrix};
pub use similarity::{cosine_similarity_matrix, SimilarityMatrix};
pub use trace::{RoundTrace, TraceLog};
pub use tree::{ClusterNode, ClusterTree};
