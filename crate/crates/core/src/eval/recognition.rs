use serde::{Deserialize, Serialize};

use super::classifier::{argmax, Classifier};
use crate::dsp::{AudioSignal, LmbeConfig, LmbeExtractor};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::membership::MembershipVector;

/// How node predictions are combined into a cluster label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Majority over the cluster's members.
    Mode,
    /// Argmax of the membership-weighted mean of node class scores.
    MvWeighted,
}

/// Which clusters are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    /// The N_S clusters closest (by CTS) to any source.
    ClosestNs,
    /// The N_S clusters with the highest mean classifier confidence.
    TopConfidenceNs,
    All,
}

impl Aggregation {
    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Mode => "mode",
            Aggregation::MvWeighted => "mv_weighted",
        }
    }
}

impl PriorMode {
    pub fn name(self) -> &'static str {
        match self {
            PriorMode::ClosestNs => "closest_n_s",
            PriorMode::TopConfidenceNs => "top_confidence_n_s",
            PriorMode::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePrediction {
    pub node_id: usize,
    /// Mean class probabilities over the node's utterances.
    pub scores: Vec<f64>,
    /// Majority of the per-utterance predictions, lower class on ties.
    pub label: usize,
    /// Class of the source with the shortest first-peak delay at this node.
    pub truth: usize,
    /// Mean of the per-utterance maximum probability.
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterInput {
    pub cluster_id: usize,
    pub members: Vec<usize>,
    pub membership: Option<MembershipVector>,
    /// Smallest CTS of this cluster over all sources.
    pub min_cts: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabel {
    pub cluster_id: usize,
    pub predicted: usize,
    pub truth: usize,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionReport {
    pub accuracy: f64,
    pub f1: f64,
    pub aggregation: Aggregation,
    pub prior: PriorMode,
    pub clusters: Vec<ClusterLabel>,
}

fn weighted_vote(labels: impl IntoIterator<Item = (usize, f64)>, classes: usize) -> usize {
    let mut votes = vec![0.0; classes];
    for (l, w) in labels {
        votes[l] += w;
    }
    argmax(&votes)
}

/// Classify each node's signal in `utterance_s` chunks.
pub fn predict_nodes(
    classifier: &Classifier,
    signals: &[AudioSignal],
    truths: &[usize],
    utterance_s: f64,
    exec: Execution,
) -> Result<Vec<NodePrediction>> {
    if signals.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            context: "node ground truth",
            expected: signals.len(),
            actual: truths.len(),
        });
    }
    let classes = classifier.class_names.len();
    let ids: Vec<usize> = (0..signals.len()).collect();
    exec.map(&ids, |&i| {
        let sig = &signals[i];
        let extractor = LmbeExtractor::new(LmbeConfig::recognizer(), sig.sample_rate())?;
        let chunk = ((utterance_s * sig.sample_rate() as f64).round() as usize).clamp(1, sig.len().max(1));
        let count = (sig.len() / chunk).max(1);
        let mut scores = vec![0.0; classes];
        let mut votes = Vec::with_capacity(count);
        let mut confidence = 0.0;
        for u in 0..count {
            let part = sig.slice(u * chunk, chunk.min(sig.len()));
            let p = classifier.utterance_proba(&extractor.extract(&part)?)?;
            scores.iter_mut().zip(&p).for_each(|(s, v)| *s += v / count as f64);
            confidence += p.iter().copied().fold(0.0, f64::max) / count as f64;
            votes.push((argmax(&p), 1.0));
        }
        Ok(NodePrediction {
            node_id: i,
            scores,
            label: weighted_vote(votes, classes),
            truth: truths[i],
            confidence,
        })
    })
    .into_iter()
    .collect()
}

/// Macro-averaged F1 over classes that occur in either vector.
pub fn macro_f1(predicted: &[usize], truth: &[usize], classes: usize) -> f64 {
    let mut sum = 0.0;
    let mut counted = 0;
    for c in 0..classes {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p == c, t == c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        if tp + fp + fn_ > 0 {
            sum += 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
            counted += 1;
        }
    }
    if counted == 0 {
        0.0
    } else {
        sum / counted as f64
    }
}

/// Label clusters from node predictions and score them against the
/// ground-truth classes of their nodes.
pub fn recognize(
    clusters: &[ClusterInput],
    nodes: &[NodePrediction],
    source_count: usize,
    prior: PriorMode,
    aggregation: Aggregation,
) -> Result<RecognitionReport> {
    if clusters.is_empty() {
        return Err(Error::Empty("clusters"));
    }
    let classes = nodes
        .first()
        .map(|n| n.scores.len())
        .ok_or(Error::Empty("node predictions"))?;
    let node = |id: usize| {
        nodes
            .iter()
            .find(|n| n.node_id == id)
            .ok_or_else(|| Error::Evaluation(format!("no prediction for node {id}")))
    };
    let mut labels = Vec::with_capacity(clusters.len());
    for c in clusters {
        let weighted: Vec<(usize, f64)> = match aggregation {
            Aggregation::Mode => c.members.iter().map(|&id| (id, 1.0)).collect(),
            Aggregation::MvWeighted => {
                let mv = c
                    .membership
                    .as_ref()
                    .ok_or_else(|| Error::Evaluation(format!("cluster {} has no membership values", c.cluster_id)))?;
                mv.node_ids
                    .iter()
                    .zip(&mv.values)
                    .filter(|(_, &mu)| mu > 0.0)
                    .map(|(&id, &mu)| (id, mu))
                    .collect()
            }
        };
        if weighted.is_empty() {
            return Err(Error::Evaluation(format!("cluster {} has no nodes", c.cluster_id)));
        }
        let preds = weighted
            .iter()
            .map(|&(id, w)| node(id).map(|n| (n, w)))
            .collect::<Result<Vec<_>>>()?;
        let predicted = match aggregation {
            Aggregation::Mode => weighted_vote(preds.iter().map(|(n, _)| (n.label, 1.0)), classes),
            Aggregation::MvWeighted => {
                let total: f64 = preds.iter().map(|(_, w)| w).sum();
                let mut mean = vec![0.0; classes];
                for (n, w) in &preds {
                    mean.iter_mut().zip(&n.scores).for_each(|(m, s)| *m += w * s / total);
                }
                argmax(&mean)
            }
        };
        let truth = weighted_vote(preds.iter().map(|(n, w)| (n.truth, *w)), classes);
        let confidence = preds.iter().map(|(n, _)| n.confidence).sum::<f64>() / preds.len() as f64;
        labels.push(ClusterLabel {
            cluster_id: c.cluster_id,
            predicted,
            truth,
            confidence,
        });
    }

    let mut order: Vec<usize> = (0..clusters.len()).collect();
    match prior {
        PriorMode::All => {}
        PriorMode::ClosestNs => {
            let d = clusters
                .iter()
                .map(|c| {
                    c.min_cts
                        .ok_or_else(|| Error::Evaluation("closest_n_s prior needs source positions (CTS)".into()))
                })
                .collect::<Result<Vec<_>>>()?;
            order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
            order.truncate(source_count.max(1));
        }
        PriorMode::TopConfidenceNs => {
            order.sort_by(|&a, &b| labels[b].confidence.total_cmp(&labels[a].confidence).then(a.cmp(&b)));
            order.truncate(source_count.max(1));
        }
    }
    order.sort_unstable();
    let chosen: Vec<ClusterLabel> = order.into_iter().map(|i| labels[i].clone()).collect();
    let predicted: Vec<usize> = chosen.iter().map(|l| l.predicted).collect();
    let truth: Vec<usize> = chosen.iter().map(|l| l.truth).collect();
    let correct = predicted.iter().zip(&truth).filter(|(p, t)| p == t).count();
    Ok(RecognitionReport {
        accuracy: correct as f64 / chosen.len() as f64,
        f1: macro_f1(&predicted, &truth, classes),
        aggregation,
        prior,
        clusters: chosen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn np(id: usize, label: usize, truth: usize) -> NodePrediction {
        let mut scores = vec![0.2, 0.2];
        scores[label] = 0.8;
        NodePrediction {
            node_id: id,
            scores,
            label,
            truth,
            confidence: 0.8,
        }
    }

    fn mv(values: Vec<f64>) -> MembershipVector {
        MembershipVector {
            cluster_id: 0,
            node_ids: (0..values.len()).collect(),
            reference_node_id: 0,
            values,
            lambda: 0.5,
            threshold: 0.8,
        }
    }

    #[test]
    fn mode_majority() {
        let nodes = [np(0, 0, 0), np(1, 0, 0), np(2, 1, 0)];
        let c = ClusterInput {
            cluster_id: 0,
            members: vec![0, 1, 2],
            membership: None,
            min_cts: None,
        };
        let r = recognize(&[c], &nodes, 1, PriorMode::All, Aggregation::Mode).unwrap();
        assert_eq!(r.clusters[0].predicted, 0);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.f1, 1.0);
    }

    #[test]
    fn degenerate_weights_follow_reference() {
        let nodes = [np(0, 1, 1), np(1, 0, 0), np(2, 0, 0)];
        let c = ClusterInput {
            cluster_id: 0,
            members: vec![0, 1, 2],
            membership: Some(mv(vec![1.0, 0.0, 0.0])),
            min_cts: None,
        };
        let r = recognize(
            std::slice::from_ref(&c),
            &nodes,
            1,
            PriorMode::All,
            Aggregation::MvWeighted,
        )
        .unwrap();
        assert_eq!(r.clusters[0].predicted, 1);
        assert!(recognize(&[c], &nodes, 1, PriorMode::ClosestNs, Aggregation::Mode).is_err());
    }

    #[test]
    fn unanimous_nodes_ignore_weights() {
        let nodes = [np(0, 1, 1), np(1, 1, 1), np(2, 1, 0)];
        for w in [vec![1.0, 0.3, 0.9], vec![1.0, 0.0, 0.0]] {
            let c = ClusterInput {
                cluster_id: 0,
                members: vec![0, 1, 2],
                membership: Some(mv(w)),
                min_cts: None,
            };
            for agg in [Aggregation::Mode, Aggregation::MvWeighted] {
                let r = recognize(std::slice::from_ref(&c), &nodes, 1, PriorMode::All, agg).unwrap();
                assert_eq!(r.clusters[0].predicted, 1);
            }
        }
    }

    #[test]
    fn f1_examples() {
        assert_eq!(macro_f1(&[0, 1, 0, 1], &[0, 1, 0, 1], 2), 1.0);
        assert_eq!(macro_f1(&[0, 0], &[1, 1], 2), 0.0);
        assert!((macro_f1(&[0, 0, 1], &[0, 1, 1], 2) - (2.0 / 3.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn prior_modes_pick_subsets() {
        let nodes = [np(0, 0, 0), np(1, 1, 1), np(2, 1, 0)];
        let mk = |id, members: Vec<usize>, d| ClusterInput {
            cluster_id: id,
            members,
            membership: None,
            min_cts: Some(d),
        };
        let cs = [mk(0, vec![0], 0.1), mk(1, vec![1], 0.2), mk(2, vec![2], 0.9)];
        let r = recognize(&cs, &nodes, 2, PriorMode::ClosestNs, Aggregation::Mode).unwrap();
        assert_eq!(r.clusters.len(), 2);
        assert_eq!(r.accuracy, 1.0);
        let all = recognize(&cs, &nodes, 2, PriorMode::All, Aggregation::Mode).unwrap();
        assert!((all.accuracy - 2.0 / 3.0).abs() < 1e-12);
    }
}
