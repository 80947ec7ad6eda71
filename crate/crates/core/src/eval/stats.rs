use serde::{Deserialize, Serialize};

/// How often a cluster slot is populated across scenarios and its mean size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSlotStats {
    /// 1-based slot index.
    pub slot: usize,
    pub scenarios: usize,
    pub mean_nodes: f64,
}

/// `sizes[s]` lists the member counts of scenario `s`'s clusters in slot
/// order (see [`CtsReport::slot_order`](super::CtsReport::slot_order)).
pub fn cluster_stats(sizes: &[Vec<usize>]) -> Vec<ClusterSlotStats> {
    let slots = sizes.iter().map(Vec::len).max().unwrap_or(0);
    (0..slots)
        .map(|k| {
            let present: Vec<usize> = sizes.iter().filter_map(|s| s.get(k).copied()).collect();
            ClusterSlotStats {
                slot: k + 1,
                scenarios: present.len(),
                mean_nodes: present.iter().sum::<usize>() as f64 / present.len() as f64,
            }
        })
        .collect()
}

/// Number of scenarios whose cluster count lies in `[lo, hi]`.
pub fn count_in_range(cluster_counts: &[usize], lo: usize, hi: usize) -> usize {
    cluster_counts.iter().filter(|&&c| (lo..=hi).contains(&c)).count()
}
