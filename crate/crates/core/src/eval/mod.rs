//! Scoring of estimated clusterings: normalised cluster-to-source distances
//! (CTS), cluster-count statistics over many scenarios, and a network-wide
//! source-class recognition task built on top of the clusters.

mod classifier;
mod cts;
mod recognition;
mod stats;

pub use classifier::{
    class_dataset, train_classifier, Classifier, ClassifierConfig, LabeledDataset, TrainedClassifier,
};
pub use cts::{cts, weighted_centroid, CtsReport};
pub use recognition::{
    macro_f1, predict_nodes, recognize, Aggregation, ClusterInput, ClusterLabel, NodePrediction, PriorMode,
    RecognitionReport,
};
pub use stats::{cluster_stats, count_in_range, ClusterSlotStats};
