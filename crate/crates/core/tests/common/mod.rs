#![allow(dead_code)]

use asn_cfl::experiment::{CorpusSpec, ExperimentConfig};

/// A configuration small enough for a seed to finish in about a second.
pub fn quick_config(seeds: impl IntoIterator<Item = u64>) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        seeds: seeds.into_iter().collect(),
        duration_s: 10.0,
        ..ExperimentConfig::default()
    };
    c.pretrain.epochs = 2;
    c.pretrain.corpus = CorpusSpec::Synthetic {
        classes: vec!["low-f0".into(), "high-f0".into()],
        utterances_per_class: 1,
        utterance_s: 5.0,
    };
    c.recognition.enabled = false;
    c
}
