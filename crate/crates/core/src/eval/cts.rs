use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::membership::MembershipVector;
use crate::scene::Point;

/// Cluster-to-source distances `d̃[x][z] = ‖ρ_z − ρ̄_x‖ / d̄_S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtsReport {
    pub cluster_ids: Vec<usize>,
    /// `distances[x][z]` for cluster `x` (input order) and source `z`.
    pub distances: Vec<Vec<f64>>,
    pub centroids: Vec<Point>,
    /// Mean distance over all unordered source pairs.
    pub mean_source_distance: f64,
    /// Greedy one-to-one `(cluster, source)` matching, smallest d̃ first.
    pub matching: Vec<(usize, usize)>,
}

impl CtsReport {
    pub fn source_count(&self) -> usize {
        self.distances.first().map_or(0, Vec::len)
    }

    /// Cluster indices in report order: matched clusters by source index,
    /// then unmatched clusters by their smallest distance to any source.
    pub fn slot_order(&self) -> Vec<usize> {
        let mut matched = self.matching.clone();
        matched.sort_by_key(|&(_, z)| z);
        let mut order: Vec<usize> = matched.iter().map(|&(x, _)| x).collect();
        let mut rest: Vec<usize> = (0..self.distances.len()).filter(|x| !order.contains(x)).collect();
        rest.sort_by(|&a, &b| self.min_distance(a).total_cmp(&self.min_distance(b)).then(a.cmp(&b)));
        order.extend(rest);
        order
    }

    pub fn min_distance(&self, cluster: usize) -> f64 {
        self.distances[cluster].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Distances of the matched pairs (the diagonal once clusters are ordered).
    pub fn diagonal(&self) -> Vec<f64> {
        let mut m = self.matching.clone();
        m.sort_by_key(|&(_, z)| z);
        m.iter().map(|&(x, z)| self.distances[x][z]).collect()
    }

    /// Distances of matched clusters to the sources they were not matched to.
    pub fn off_diagonal(&self) -> Vec<f64> {
        let mut m = self.matching.clone();
        m.sort_by_key(|&(_, z)| z);
        let mut out = Vec::new();
        for &(x, z) in &m {
            for (zz, &d) in self.distances[x].iter().enumerate() {
                if zz != z {
                    out.push(d);
                }
            }
        }
        out
    }

    /// `distances` with rows permuted into [`slot_order`](Self::slot_order).
    pub fn ordered_matrix(&self) -> Vec<Vec<f64>> {
        self.slot_order()
            .into_iter()
            .map(|x| self.distances[x].clone())
            .collect()
    }
}

/// `Σ μᵢ·posᵢ / Σ μᵢ` over nodes with positive membership.
pub fn weighted_centroid(weights: &[f64], positions: &[Point]) -> Result<Point> {
    if weights.len() != positions.len() {
        return Err(Error::DimensionMismatch {
            context: "centroid weights",
            expected: positions.len(),
            actual: weights.len(),
        });
    }
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for (&w, p) in weights.iter().zip(positions) {
        if w > 0.0 {
            sx += w * p.x;
            sy += w * p.y;
            sw += w;
        }
    }
    if !(sw > 0.0) {
        return Err(Error::CtsUndefined(
            "cluster has no node with positive membership".into(),
        ));
    }
    Ok(Point::new(sx / sw, sy / sw))
}

/// CTS of every cluster against every source. `node_positions` is indexed
/// by node id.
pub fn cts(clusters: &[MembershipVector], node_positions: &[Point], source_positions: &[Point]) -> Result<CtsReport> {
    let s = source_positions.len();
    if s < 2 {
        return Err(Error::CtsUndefined(
            "mean source-pair distance d̄_S needs at least two sources".into(),
        ));
    }
    let mut pair_sum = 0.0;
    for a in 0..s {
        for b in a + 1..s {
            pair_sum += source_positions[a].distance(source_positions[b]);
        }
    }
    let mean_source_distance = pair_sum / (s * (s - 1) / 2) as f64;
    if !(mean_source_distance > 0.0) {
        return Err(Error::CtsUndefined("all sources coincide".into()));
    }
    let mut centroids = Vec::with_capacity(clusters.len());
    let mut distances = Vec::with_capacity(clusters.len());
    for mv in clusters {
        let positions = mv
            .node_ids
            .iter()
            .map(|&id| {
                node_positions
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::CtsUndefined(format!("no position for node {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let c = weighted_centroid(&mv.values, &positions)?;
        distances.push(
            source_positions
                .iter()
                .map(|&p| p.distance(c) / mean_source_distance)
                .collect::<Vec<_>>(),
        );
        centroids.push(c);
    }
    let matching = greedy_matching(&distances);
    Ok(CtsReport {
        cluster_ids: clusters.iter().map(|c| c.cluster_id).collect(),
        distances,
        centroids,
        mean_source_distance,
        matching,
    })
}

fn greedy_matching(d: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..d.len())
        .flat_map(|x| (0..d[x].len()).map(move |z| (x, z)))
        .collect();
    pairs.sort_by(|&(x1, z1), &(x2, z2)| d[x1][z1].total_cmp(&d[x2][z2]).then((x1, z1).cmp(&(x2, z2))));
    let mut used_x = vec![false; d.len()];
    let mut used_z = vec![false; d.first().map_or(0, Vec::len)];
    let mut out = Vec::new();
    for (x, z) in pairs {
        if !used_x[x] && !used_z[z] {
            used_x[x] = true;
            used_z[z] = true;
            out.push((x, z));
        }
    }
    out
}
