use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::io::{csv_bytes, write_atomic};
use super::run::{prepare, run_seed, Prepared, SeedOutcome};
use super::svg::floorplan_svg;
use crate::error::Result;
use crate::eval::{cluster_stats, Aggregation, PriorMode};
use crate::membership::write_membership_csv;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedError {
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub outcomes: Vec<SeedOutcome>,
    pub errors: Vec<SeedError>,
    pub output_dir: PathBuf,
}

impl ExperimentSummary {
    pub fn all_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn f(x: f64) -> String {
    format!("{x}")
}

pub fn seed_dir(output: &Path, seed: u64) -> PathBuf {
    output.join("seeds").join(format!("seed-{seed:06}"))
}

fn write_seed(dir: &Path, o: &SeedOutcome) -> Result<()> {
    write_atomic(&dir.join("scene.json"), &serde_json::to_vec_pretty(&o.scene)?)?;
    write_atomic(&dir.join("tree.json"), &serde_json::to_vec_pretty(&o.tree)?)?;
    let mut trace = Vec::new();
    o.trace.write_jsonl(&mut trace)?;
    write_atomic(&dir.join("trace.jsonl"), &trace)?;
    let mut mv = Vec::new();
    write_membership_csv(&mut mv, &o.memberships)?;
    write_atomic(&dir.join("memberships.csv"), &mv)?;
    write_atomic(
        &dir.join("floorplan.svg"),
        floorplan_svg(&o.scene, &o.memberships).as_bytes(),
    )?;
    Ok(())
}

/// Per-seed CTS rows followed by an aggregate `mean` row.
pub fn cts_csv(outcomes: &[SeedOutcome]) -> Result<Vec<u8>> {
    let rows: Vec<_> = outcomes.iter().filter_map(|o| o.cts.as_ref().map(|c| (o, c))).collect();
    let mut out: Vec<Vec<String>> = rows
        .iter()
        .map(|(o, c)| {
            vec![
                o.seed.to_string(),
                o.cluster_count().to_string(),
                c.source_count().to_string(),
                f(mean(c.diagonal())),
                f(mean(c.off_diagonal())),
            ]
        })
        .collect();
    if !rows.is_empty() {
        out.push(vec![
            "mean".into(),
            f(mean(rows.iter().map(|(o, _)| o.cluster_count() as f64))),
            f(mean(rows.iter().map(|(_, c)| c.source_count() as f64))),
            f(mean(rows.iter().map(|(_, c)| mean(c.diagonal())))),
            f(mean(
                rows.iter().map(|(_, c)| mean(c.off_diagonal())).filter(|x| !x.is_nan()),
            )),
        ]);
    }
    csv_bytes(
        &["seed", "clusters", "sources", "mean_diagonal", "mean_off_diagonal"],
        out,
    )
}

/// Mean CTS per (cluster slot, source) over the seeds where the slot exists.
pub fn cts_matrix_csv(outcomes: &[SeedOutcome]) -> Result<Vec<u8>> {
    let reports: Vec<Vec<Vec<f64>>> = outcomes
        .iter()
        .filter_map(|o| o.cts.as_ref())
        .map(|c| c.ordered_matrix())
        .collect();
    let slots = reports.iter().map(Vec::len).max().unwrap_or(0);
    let sources = reports.iter().flat_map(|r| r.first().map(Vec::len)).max().unwrap_or(0);
    let mut rows = Vec::new();
    for x in 0..slots {
        for z in 0..sources {
            let vals: Vec<f64> = reports
                .iter()
                .filter_map(|r| r.get(x).and_then(|row| row.get(z)).copied())
                .collect();
            rows.push(vec![
                (x + 1).to_string(),
                (z + 1).to_string(),
                f(mean(vals.iter().copied())),
                vals.len().to_string(),
            ]);
        }
    }
    csv_bytes(&["slot", "source", "mean_cts", "scenarios"], rows)
}

pub fn cluster_stats_csv(outcomes: &[SeedOutcome]) -> Result<Vec<u8>> {
    let sizes: Vec<Vec<usize>> = outcomes.iter().map(|o| o.slot_sizes.clone()).collect();
    let rows = cluster_stats(&sizes)
        .into_iter()
        .map(|s| vec![s.slot.to_string(), s.scenarios.to_string(), f(s.mean_nodes)]);
    csv_bytes(&["slot", "scenarios", "mean_nodes"], rows)
}

fn prior_name(p: PriorMode) -> &'static str {
    p.name()
}

fn agg_name(a: Aggregation) -> &'static str {
    a.name()
}

/// Per-seed recognition scores plus `mean` rows per (threshold, prior, aggregation).
pub fn recognition_csv(outcomes: &[SeedOutcome]) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    let mut keys: Vec<(f64, PriorMode, Aggregation)> = Vec::new();
    for o in outcomes {
        for r in &o.recognition {
            rows.push(vec![
                o.seed.to_string(),
                f(r.threshold),
                prior_name(r.prior).to_string(),
                agg_name(r.aggregation).to_string(),
                f(r.accuracy),
                f(r.f1),
            ]);
            if !keys.contains(&(r.threshold, r.prior, r.aggregation)) {
                keys.push((r.threshold, r.prior, r.aggregation));
            }
        }
    }
    for (v, p, a) in keys {
        let sel: Vec<_> = outcomes
            .iter()
            .flat_map(|o| &o.recognition)
            .filter(|r| (r.threshold, r.prior, r.aggregation) == (v, p, a))
            .collect();
        rows.push(vec![
            "mean".into(),
            f(v),
            prior_name(p).into(),
            agg_name(a).into(),
            f(mean(sel.iter().map(|r| r.accuracy))),
            f(mean(sel.iter().map(|r| r.f1))),
        ]);
    }
    csv_bytes(&["seed", "threshold", "prior", "aggregation", "accuracy", "f1"], rows)
}

pub fn errors_csv(errors: &[SeedError]) -> Result<Vec<u8>> {
    csv_bytes(
        &["seed", "message"],
        errors.iter().map(|e| vec![e.seed.to_string(), e.message.clone()]),
    )
}

/// Write every report for a finished set of seeds.
pub fn write_reports(output: &Path, outcomes: &[SeedOutcome], errors: &[SeedError]) -> Result<()> {
    for o in outcomes {
        write_seed(&seed_dir(output, o.seed), o)?;
    }
    write_atomic(&output.join("cts.csv"), &cts_csv(outcomes)?)?;
    write_atomic(&output.join("cts_matrix.csv"), &cts_matrix_csv(outcomes)?)?;
    write_atomic(&output.join("cluster_stats.csv"), &cluster_stats_csv(outcomes)?)?;
    write_atomic(&output.join("recognition.csv"), &recognition_csv(outcomes)?)?;
    write_atomic(&output.join("errors.csv"), &errors_csv(errors)?)?;
    Ok(())
}

/// Run every seed with shared pre-trained models; failures are recorded
/// per seed and do not stop the others.
pub fn run_prepared(
    config: &ExperimentConfig,
    prepared: &Prepared,
) -> Vec<std::result::Result<SeedOutcome, SeedError>> {
    config.execution.map(&config.seeds, |&seed| {
        run_seed(config, prepared, seed).map_err(|e| SeedError {
            seed,
            message: e.to_string(),
        })
    })
}

/// Prepare models, run all seeds and write the reports to `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    let prepared = prepare(config)?;
    let output = config.output_dir.clone();
    write_atomic(&output.join("config.json"), &serde_json::to_vec_pretty(config)?)?;
    let (mut outcomes, mut errors) = (Vec::new(), Vec::new());
    for r in run_prepared(config, &prepared) {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => errors.push(e),
        }
    }
    write_reports(&output, &outcomes, &errors)?;
    Ok(ExperimentSummary {
        outcomes,
        errors,
        output_dir: output,
    })
}

fn read_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut header = vec![reader.headers()?.iter().map(str::to_string).collect::<Vec<_>>()];
    for rec in reader.records() {
        header.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(header)
}

fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Human-readable digest of a finished output directory: the aggregate CTS
/// row, cluster slot statistics, mean recognition scores and failed seeds.
pub fn summarize_output(output: &Path) -> Result<String> {
    let mut text = format!("reports in {}\n", output.display());
    let cts = read_rows(&output.join("cts.csv"))?;
    let scored = cts
        .iter()
        .skip(1)
        .filter(|r| r.first().is_some_and(|s| s != "mean"))
        .count();
    text.push_str(&format!("\ncluster-to-source distance ({scored} seeds)\n"));
    let mean_rows: Vec<Vec<String>> = cts
        .iter()
        .enumerate()
        .filter(|(i, r)| *i == 0 || r.first().is_some_and(|s| s == "mean"))
        .map(|(_, r)| r.clone())
        .collect();
    text.push_str(&table(&mean_rows));
    text.push_str("\ncluster slots\n");
    text.push_str(&table(&read_rows(&output.join("cluster_stats.csv"))?));
    let rec = read_rows(&output.join("recognition.csv"))?;
    let rec_means: Vec<Vec<String>> = rec
        .iter()
        .enumerate()
        .filter(|(i, r)| *i == 0 || r.first().is_some_and(|s| s == "mean"))
        .map(|(_, r)| r[1..].to_vec())
        .collect();
    if rec_means.len() > 1 {
        text.push_str("\nrecognition (mean over seeds)\n");
        text.push_str(&table(&rec_means));
    }
    let errors = read_rows(&output.join("errors.csv"))?;
    text.push_str(&format!("\nfailed seeds: {}\n", errors.len() - 1));
    for e in errors.iter().skip(1) {
        text.push_str(&format!("  seed {}: {}\n", e[0], e.get(1).map_or("", String::as_str)));
    }
    Ok(text)
}
