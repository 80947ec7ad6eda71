//! Seeded end-to-end experiments: pre-training, per-seed simulation and
//! clustering, evaluation, and report files.
//!
//! Output layout under `output_dir`:
//!
//! | file | columns / content |
//! |------|-------------------|
//! | `config.json` | effective configuration |
//! | `cts.csv` | `seed,clusters,sources,mean_diagonal,mean_off_diagonal`, then a `mean` row |
//! | `cts_matrix.csv` | `slot,source,mean_cts,scenarios` |
//! | `cluster_stats.csv` | `slot,scenarios,mean_nodes` |
//! | `recognition.csv` | `seed,threshold,prior,aggregation,accuracy,f1`, then `mean` rows |
//! | `errors.csv` | `seed,message` for seeds that failed |
//! | `seeds/seed-NNNNNN/` | `scene.json`, `tree.json`, `trace.jsonl`, `memberships.csv`, `floorplan.svg` |
//!
//! Every file is written to a temporary name and renamed into place.

mod config;
mod io;
mod pretrain;
mod report;
mod run;
mod svg;

pub use config::{CorpusSpec, ExperimentConfig, PretrainConfig, RecognitionConfig};
pub use io::{csv_bytes, write_atomic};
pub use pretrain::{corpus_frames, corpus_signals, pretrain_autoencoder};
pub use report::{
    cluster_stats_csv, cts_csv, cts_matrix_csv, errors_csv, recognition_csv, run_experiment, run_prepared, seed_dir,
    summarize_output, write_reports, ExperimentSummary, SeedError,
};
pub use run::{prepare, run_seed, template_classes, Prepared, RecognitionRow, SeedOutcome};
pub use svg::floorplan_svg;
