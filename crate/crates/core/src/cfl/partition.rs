use super::SimilarityMatrix;
use crate::error::{Error, Result};

/// Largest similarity between a member of `part` and a non-member
/// (indices into `a`). Empty or full parts give `-inf`.
pub fn max_inter_similarity(a: &SimilarityMatrix, part: &[usize]) -> f64 {
    let m = a.size();
    let mut inside = vec![false; m];
    part.iter().for_each(|&i| inside[i] = true);
    let mut best = f64::NEG_INFINITY;
    for i in (0..m).filter(|&i| inside[i]) {
        for j in (0..m).filter(|&j| !inside[j]) {
            best = best.max(a.get(i, j));
        }
    }
    best
}

/// Maximum spanning tree by Prim's algorithm; returns edges `(u, v, weight)`.
fn max_spanning_tree(a: &SimilarityMatrix) -> Vec<(usize, usize, f64)> {
    let m = a.size();
    let mut in_tree = vec![false; m];
    let mut best = vec![f64::NEG_INFINITY; m];
    let mut parent = vec![0usize; m];
    let mut edges = Vec::with_capacity(m.saturating_sub(1));
    in_tree[0] = true;
    for (j, b) in best.iter_mut().enumerate().skip(1) {
        *b = a.get(0, j);
    }
    for _ in 1..m {
        let next = (0..m)
            .filter(|&j| !in_tree[j])
            .max_by(|&x, &y| best[x].total_cmp(&best[y]).then(y.cmp(&x)))
            .expect("vertices remain");
        in_tree[next] = true;
        edges.push((parent[next], next, best[next]));
        for j in 0..m {
            if !in_tree[j] && a.get(next, j) > best[j] {
                best[j] = a.get(next, j);
                parent[j] = next;
            }
        }
    }
    edges
}

fn component_of_zero(m: usize, edges: &[(usize, usize, f64)], skip: usize) -> Vec<usize> {
    let mut adj = vec![Vec::new(); m];
    for (k, &(u, v, _)) in edges.iter().enumerate() {
        if k != skip {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    let mut seen = vec![false; m];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    (0..m).filter(|&i| seen[i]).collect()
}

/// Split the nodes of `a` into two groups minimising the maximum
/// inter-group similarity: cut the weakest edge of a maximum spanning tree.
///
/// Returns node ids (not indices). The first group is the lexicographically
/// smaller one; among equally weak tree edges the cut giving the
/// lexicographically smallest first group wins.
pub fn bipartition(a: &SimilarityMatrix) -> Result<(Vec<usize>, Vec<usize>)> {
    let m = a.size();
    if m < 2 {
        return Err(Error::invalid("similarity", "need at least two nodes to bi-partition"));
    }
    let edges = max_spanning_tree(a);
    let weakest = edges.iter().map(|e| e.2).fold(f64::INFINITY, f64::min);
    let first = edges
        .iter()
        .enumerate()
        .filter(|(_, e)| e.2 == weakest)
        .map(|(k, _)| component_of_zero(m, &edges, k))
        .min()
        .expect("tree has at least one edge");
    let mut in_first = vec![false; m];
    first.iter().for_each(|&i| in_first[i] = true);
    let ids = a.node_ids();
    let c1 = first.iter().map(|&i| ids[i]).collect();
    let c2 = (0..m).filter(|&i| !in_first[i]).map(|i| ids[i]).collect();
    Ok((c1, c2))
}
