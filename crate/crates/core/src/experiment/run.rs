use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::pretrain::pretrain_autoencoder;
use crate::cfl::{run_cfl, ClusterTree, LmbeClient, TraceLog};
use crate::dsp::LmbeExtractor;
use crate::error::{Error, Result};
use crate::eval::{
    class_dataset, cts, predict_nodes, recognize, Aggregation, ClusterInput, CtsReport, NodePrediction, PriorMode,
    TrainedClassifier,
};
use crate::membership::{default_lambda, membership_values, MembershipVector};
use crate::nn::{load_checkpoint, Autoencoder};
use crate::rng;
use crate::scene::{generate_constellation, render_scene, ConstellationConstraints, Scene, SceneTemplate, SourceClass};

/// Models shared by every seed of an experiment.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub template: SceneTemplate,
    pub autoencoder: Autoencoder,
    pub classifier: Option<TrainedClassifier>,
}

/// Distinct source classes of a template in order of first appearance.
pub fn template_classes(template: &SceneTemplate) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in &template.sources {
        if !out.contains(&s.class) {
            out.push(s.class.clone());
        }
    }
    out
}

/// Load or pre-train the autoencoder and train the recogniser if enabled.
pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    let template = config.load_template()?;
    let autoencoder = match &config.pretrain.checkpoint {
        Some(p) if p.exists() => load_checkpoint(p)?.model,
        _ => pretrain_autoencoder(config)?.0,
    };
    if autoencoder.net.input_dim() != config.features.band_count {
        return Err(Error::DimensionMismatch {
            context: "checkpoint input vs. mel bands",
            expected: config.features.band_count,
            actual: autoencoder.net.input_dim(),
        });
    }
    let classes = template_classes(&template);
    let classifier = if config.recognition.enabled && classes.len() >= 2 {
        let classes = classes
            .iter()
            .map(|c| SourceClass::by_name(c))
            .collect::<Result<Vec<_>>>()?;
        let rc = &config.recognition;
        let data = class_dataset(
            &classes,
            rc.per_class,
            rc.utterance_s,
            rc.interferer_prob,
            template.sample_rate,
            rng::derive_str(rc.classifier.seed, "recognizer-data"),
            config.execution,
        )?;
        Some(crate::eval::train_classifier(&data, &rc.classifier)?)
    } else {
        None
    };
    Ok(Prepared {
        template,
        autoencoder,
        classifier,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionRow {
    pub threshold: f64,
    pub prior: PriorMode,
    pub aggregation: Aggregation,
    pub accuracy: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub scene: Scene,
    /// Cluster tree without the per-cluster models.
    pub tree: ClusterTree,
    pub trace: TraceLog,
    pub lambda: f64,
    /// Membership vectors of every leaf at the main threshold.
    pub memberships: Vec<MembershipVector>,
    pub cts: Option<CtsReport>,
    /// Leaf sizes ordered by CTS slot.
    pub slot_sizes: Vec<usize>,
    pub recognition: Vec<RecognitionRow>,
    pub nodes: Vec<NodePrediction>,
}

impl SeedOutcome {
    pub fn cluster_count(&self) -> usize {
        self.memberships.len()
    }
}

fn memberships_at(
    tree: &ClusterTree,
    sim: &dyn Fn(usize) -> Option<crate::cfl::SimilarityMatrix>,
    lambda: f64,
    threshold: f64,
) -> Result<Vec<MembershipVector>> {
    tree.leaves()
        .iter()
        .enumerate()
        .map(|(k, leaf)| {
            let a = sim(k).ok_or_else(|| Error::MembershipUndefined("no similarity matrix available".into()))?;
            membership_values(&a, leaf.id, &leaf.members, lambda, threshold)
        })
        .collect()
}

/// Scene → signals → features → CFL → membership → evaluation for one seed.
pub fn run_seed(config: &ExperimentConfig, prepared: &Prepared, seed: u64) -> Result<SeedOutcome> {
    let exec = config.execution;
    let scene = generate_constellation(
        &prepared.template,
        rng::derive_str(seed, "constellation"),
        &ConstellationConstraints::default(),
    )?;
    let rendered = render_scene(&scene, config.duration_s, rng::derive_str(seed, "render"), exec)?;
    let extractor = LmbeExtractor::new(config.features, scene.sample_rate)?;
    let clients = exec
        .map_indexed(rendered.nodes.len(), |n| {
            let features = extractor.extract(&rendered.nodes[n])?;
            LmbeClient::new(n, &features, &prepared.autoencoder.norm, config.local)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let out = run_cfl(
        &clients,
        &prepared.autoencoder,
        &config.cfl,
        config.membership_matrix,
        rng::derive_str(seed, "cfl"),
        exec,
    )?;
    let leaves = out.tree.leaves();
    let lambda = config.lambda.unwrap_or_else(|| default_lambda(leaves.len()));
    let sim = |k: usize| out.similarity_for_leaf(k).cloned();
    let node_pos = scene.node_positions();
    let src_pos = scene.source_positions();

    let per_threshold = config
        .all_thresholds()
        .into_iter()
        .map(|v| {
            let mvs = memberships_at(&out.tree, &sim, lambda, v)?;
            let report = if src_pos.len() >= 2 {
                Some(cts(&mvs, &node_pos, &src_pos)?)
            } else {
                None
            };
            Ok((v, mvs, report))
        })
        .collect::<Result<Vec<_>>>()?;
    let (_, memberships, main_cts) = per_threshold[0].clone();

    let slot_sizes = match &main_cts {
        Some(r) => r.slot_order().into_iter().map(|x| leaves[x].members.len()).collect(),
        None => leaves.iter().map(|l| l.members.len()).collect(),
    };

    let mut recognition = Vec::new();
    let mut nodes = Vec::new();
    if let Some(tc) = &prepared.classifier {
        let names = &tc.classifier.class_names;
        let truths = (0..scene.nodes.len())
            .map(|n| {
                let class = &scene.sources[rendered.rirs.nearest_source(n)].class;
                names
                    .iter()
                    .position(|c| c == class)
                    .ok_or_else(|| Error::UnknownClass(class.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        nodes = predict_nodes(
            &tc.classifier,
            &rendered.nodes,
            &truths,
            config.recognition.utterance_s,
            exec,
        )?;
        for (v, mvs, report) in &per_threshold {
            let inputs: Vec<ClusterInput> = leaves
                .iter()
                .zip(mvs)
                .enumerate()
                .map(|(k, (leaf, mv))| ClusterInput {
                    cluster_id: leaf.id,
                    members: leaf.members.clone(),
                    membership: Some(mv.clone()),
                    min_cts: report.as_ref().map(|r| r.min_distance(k)),
                })
                .collect();
            for &prior in &config.recognition.priors {
                if prior == PriorMode::ClosestNs && report.is_none() {
                    continue;
                }
                for &aggregation in &config.recognition.aggregations {
                    let r = recognize(&inputs, &nodes, scene.sources.len(), prior, aggregation)?;
                    recognition.push(RecognitionRow {
                        threshold: *v,
                        prior,
                        aggregation,
                        accuracy: r.accuracy,
                        f1: r.f1,
                    });
                }
            }
        }
    }

    Ok(SeedOutcome {
        seed,
        scene,
        tree: out.tree.without_models(),
        trace: out.trace,
        lambda,
        memberships,
        cts: main_cts,
        slot_sizes,
        recognition,
        nodes,
    })
}
