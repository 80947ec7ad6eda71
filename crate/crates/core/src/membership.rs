//! Soft cluster membership values.
//!
//! For every cluster the server balances each member's mean intra-cluster
//! similarity `q` against its mean inter-cluster similarity `r`,
//! `p = λ·q̂ + (1 − λ)·r̂` with `q̂`, `r̂` min-max normalised over the members.
//! The member with the smallest `p` becomes the reference node, and the
//! min-max normalised row of the similarity matrix at the reference gives
//! the membership values of all nodes, thresholded at `v`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cfl::SimilarityMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipVector {
    pub cluster_id: usize,
    /// One value per node, in the order of the similarity matrix's node ids.
    pub values: Vec<f64>,
    pub node_ids: Vec<usize>,
    pub reference_node_id: usize,
    pub lambda: f64,
    pub threshold: f64,
}

impl MembershipVector {
    pub fn get(&self, node_id: usize) -> Option<f64> {
        self.node_ids.iter().position(|&n| n == node_id).map(|i| self.values[i])
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0).count()
    }
}

/// λ used when none is configured: intra-cluster information helps when
/// there are at most two clusters, otherwise inter-cluster similarity alone.
pub fn default_lambda(cluster_count: usize) -> f64 {
    if cluster_count <= 2 {
        0.5
    } else {
        0.0
    }
}

fn member_indices(a: &SimilarityMatrix, cluster: &[usize]) -> Result<Vec<usize>> {
    if cluster.is_empty() {
        return Err(Error::MembershipUndefined("empty cluster".into()));
    }
    let idx = cluster
        .iter()
        .map(|&id| {
            a.index_of(id)
                .ok_or_else(|| Error::MembershipUndefined(format!("node {id} not in similarity matrix")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sorted = idx.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != idx.len() {
        return Err(Error::MembershipUndefined("duplicate cluster member".into()));
    }
    Ok(idx)
}

/// Mean intra-cluster (`q`) and inter-cluster (`r`) similarity of every
/// member of `cluster` (node ids), in the order given.
pub fn intra_inter(a: &SimilarityMatrix, cluster: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
    let idx = member_indices(a, cluster)?;
    let m = a.size();
    if idx.len() < 2 {
        return Err(Error::MembershipUndefined(
            "intra-cluster similarity needs at least two members".into(),
        ));
    }
    if idx.len() >= m {
        return Err(Error::MembershipUndefined(
            "inter-cluster similarity needs nodes outside the cluster".into(),
        ));
    }
    let mut inside = vec![false; m];
    idx.iter().for_each(|&i| inside[i] = true);
    let n_in = (idx.len() - 1) as f64;
    let n_out = (m - idx.len()) as f64;
    let mut q = Vec::with_capacity(idx.len());
    let mut r = Vec::with_capacity(idx.len());
    for &i in &idx {
        let row = a.row(i);
        let (mut s_in, mut s_out) = (0.0, 0.0);
        for (j, &v) in row.iter().enumerate() {
            if j == i {
                continue;
            }
            if inside[j] {
                s_in += v;
            } else {
                s_out += v;
            }
        }
        q.push(s_in / n_in);
        r.push(s_out / n_out);
    }
    Ok((q, r))
}

/// Min-max normalisation to `[0, 1]`; a constant input maps to zeros.
pub fn min_max_normalize(x: &[f64]) -> Vec<f64> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > 0.0) {
        return vec![0.0; x.len()];
    }
    x.iter().map(|&v| (v - lo) / range).collect()
}

pub fn balance(q: &[f64], r: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid("lambda", "must lie in [0, 1]"));
    }
    if q.len() != r.len() {
        return Err(Error::DimensionMismatch {
            context: "balance q/r",
            expected: q.len(),
            actual: r.len(),
        });
    }
    let qn = min_max_normalize(q);
    let rn = min_max_normalize(r);
    Ok(qn
        .iter()
        .zip(&rn)
        .map(|(q, r)| lambda * q + (1.0 - lambda) * r)
        .collect())
}

/// Node id of the member with the smallest balanced score (lowest id on ties).
///
/// A single-member cluster has itself as reference. A cluster spanning the
/// whole network has no inter-cluster term, so only `q` is used.
pub fn reference_node(a: &SimilarityMatrix, cluster: &[usize], lambda: f64) -> Result<usize> {
    let idx = member_indices(a, cluster)?;
    if idx.len() == 1 {
        return Ok(cluster[0]);
    }
    let lambda = if idx.len() == a.size() { 1.0 } else { lambda };
    let (q, r) = if idx.len() == a.size() {
        let q = idx
            .iter()
            .map(|&i| {
                let off: f64 = idx.iter().filter(|&&j| j != i).map(|&j| a.get(i, j)).sum();
                off / (idx.len() - 1) as f64
            })
            .collect::<Vec<_>>();
        (q.clone(), q)
    } else {
        intra_inter(a, cluster)?
    };
    let p = balance(&q, &r, lambda)?;
    let best = (0..cluster.len())
        .min_by(|&x, &y| p[x].total_cmp(&p[y]).then(cluster[x].cmp(&cluster[y])))
        .expect("non-empty cluster");
    Ok(cluster[best])
}

/// Membership values of every node with respect to `cluster`.
pub fn membership_values(
    a: &SimilarityMatrix,
    cluster_id: usize,
    cluster: &[usize],
    lambda: f64,
    threshold: f64,
) -> Result<MembershipVector> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid("threshold", "must lie in [0, 1]"));
    }
    let reference = reference_node(a, cluster, lambda)?;
    let row = a.row(a.index_of(reference).expect("reference is a member"));
    let mut values = min_max_normalize(row);
    let ref_idx = a.index_of(reference).expect("reference is a member");
    // The diagonal is the row maximum, so this only guards degenerate rows.
    values[ref_idx] = 1.0;
    for (i, v) in values.iter_mut().enumerate() {
        if i != ref_idx && *v <= threshold {
            *v = 0.0;
        }
    }
    Ok(MembershipVector {
        cluster_id,
        values,
        node_ids: a.node_ids().to_vec(),
        reference_node_id: reference,
        lambda,
        threshold,
    })
}

/// Write `cluster_id,node_id,mu,is_reference` rows for all vectors.
pub fn write_membership_csv<W: Write>(out: W, vectors: &[MembershipVector]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cluster_id", "node_id", "mu", "is_reference"])?;
    for mv in vectors {
        for (&node, &mu) in mv.node_ids.iter().zip(&mv.values) {
            w.write_record([
                mv.cluster_id.to_string(),
                node.to_string(),
                format!("{mu}"),
                (node == mv.reference_node_id).to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("membership csv", e))?;
    Ok(())
}
