mod common;

use std::path::Path;

use asn_cfl::experiment::{run_experiment, summarize_output, ExperimentConfig};
use common::quick_config;

fn csv_lines(dir: &Path, name: &str) -> Vec<String> {
    std::fs::read_to_string(dir.join(name))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn zero_seeds_write_empty_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = quick_config([]);
    config.output_dir = tmp.path().to_path_buf();
    let summary = run_experiment(&config).unwrap();
    assert!(summary.all_ok());
    assert!(summary.outcomes.is_empty());
    for f in [
        "cts.csv",
        "cts_matrix.csv",
        "cluster_stats.csv",
        "recognition.csv",
        "errors.csv",
    ] {
        assert_eq!(csv_lines(tmp.path(), f).len(), 1, "{f} should hold only its header");
    }
    assert!(!tmp.path().join("seeds").exists());
}

#[test]
fn five_seeds_give_five_rows_and_a_mean() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = quick_config(0..5);
    config.output_dir = tmp.path().to_path_buf();
    let summary = run_experiment(&config).unwrap();
    assert!(summary.all_ok(), "{:?}", summary.errors);

    let cts = csv_lines(tmp.path(), "cts.csv");
    assert_eq!(cts[0], "seed,clusters,sources,mean_diagonal,mean_off_diagonal");
    assert_eq!(cts.len(), 1 + 5 + 1);
    assert!(cts[6].starts_with("mean,"));
    for (i, row) in cts[1..6].iter().enumerate() {
        assert!(row.starts_with(&format!("{i},")));
    }

    for seed in 0..5u64 {
        let dir = tmp.path().join(format!("seeds/seed-{seed:06}"));
        for f in [
            "scene.json",
            "tree.json",
            "trace.jsonl",
            "memberships.csv",
            "floorplan.svg",
        ] {
            assert!(dir.join(f).is_file(), "seed {seed} lacks {f}");
        }
    }

    let saved = ExperimentConfig::from_json_file(tmp.path().join("config.json")).unwrap();
    assert_eq!(saved, config);

    let text = summarize_output(tmp.path()).unwrap();
    assert!(text.contains("(5 seeds)"));
    assert!(text.contains("failed seeds: 0"));
}

#[test]
fn no_temporary_files_remain() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = quick_config([3]);
    config.output_dir = tmp.path().to_path_buf();
    run_experiment(&config).unwrap();
    let mut stack = vec![tmp.path().to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let name = path.file_name().unwrap().to_string_lossy().into_owned();
                assert!(!name.contains(".tmp-"), "leftover {}", path.display());
            }
        }
    }
}

#[test]
fn memberships_are_consistent_with_the_tree() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = quick_config([1]);
    config.output_dir = tmp.path().to_path_buf();
    let summary = run_experiment(&config).unwrap();
    let o = &summary.outcomes[0];
    let leaves = o.tree.leaf_members();
    assert_eq!(o.memberships.len(), leaves.len());
    let mut all: Vec<usize> = leaves.concat();
    all.sort_unstable();
    assert_eq!(all, (0..o.scene.nodes.len()).collect::<Vec<_>>());
    for mv in &o.memberships {
        assert_eq!(mv.get(mv.reference_node_id), Some(1.0));
        assert!(mv.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn invalid_configuration_is_rejected_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = quick_config([0]);
    config.output_dir = tmp.path().join("out");
    config.cfl.eps2 = 0.0;
    assert!(run_experiment(&config).is_err());
    assert!(!config.output_dir.exists());
}
