//! Command-line front end: pre-train the autoencoder, run seeded experiments
//! and summarise their reports.
//!
//! Configuration precedence, lowest first: built-in defaults, command-line
//! flags, then the JSON file given with `--config`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use asn_cfl::cfl::MembershipMatrix;
use asn_cfl::experiment::{pretrain_autoencoder, run_experiment, summarize_output, CorpusSpec, ExperimentConfig};
use asn_cfl::nn::{save_checkpoint, Checkpoint};
use asn_cfl::Execution;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

#[derive(Parser, Debug)]
#[command(
    name = "asn-cfl",
    version,
    about = "Clustered federated learning for acoustic sensor networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pre-train the autoencoder and write a checkpoint.
    Pretrain {
        #[command(flatten)]
        config: ConfigArgs,
        /// Checkpoint path; defaults to `<output>/autoencoder.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every seed and write the reports.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Print the effective configuration as JSON and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Summarise the reports of a finished run.
    Report {
        #[arg(long, env = "ASNCFL_OUTPUT", default_value = "asn-cfl-out")]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MatrixArg {
    AssembledFinal,
    LeafBroadcast,
}

#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// JSON configuration; its keys override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in template (`2SL`, `4SA`) or path to a JSON template.
    #[arg(long)]
    template: Option<String>,
    /// Seeds as `a..b`, `a..=b` or a comma-separated list.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<SeedList>,
    /// Rendered signal length per node in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Membership threshold v.
    #[arg(long)]
    threshold: Option<f64>,
    /// Balance λ between intra- and inter-cluster similarity.
    #[arg(long)]
    lambda: Option<f64>,
    /// Upper bound on the mean/max update-norm ratio for a split.
    #[arg(long)]
    eps2: Option<f64>,
    /// Non-splitting checks tolerated before a cluster stops.
    #[arg(long)]
    eps3: Option<usize>,
    /// Weight of the mean norm in the round-0 split threshold.
    #[arg(long)]
    beta: Option<f64>,
    /// Rounds before splits are considered.
    #[arg(long)]
    min_tau: Option<usize>,
    /// Total communication-round budget.
    #[arg(long)]
    max_tau: Option<usize>,
    /// Learning rate of local client training.
    #[arg(long)]
    local_lr: Option<f64>,
    /// Mini-batch size of local client training.
    #[arg(long)]
    local_batch_size: Option<usize>,
    /// Passes over local data per round.
    #[arg(long)]
    local_epochs: Option<usize>,
    /// Update vectors used for membership values.
    #[arg(long)]
    membership_matrix: Option<MatrixArg>,
    /// Autoencoder pre-training epochs.
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    /// Autoencoder pre-training learning rate.
    #[arg(long)]
    pretrain_lr: Option<f64>,
    /// Seed for the pre-training corpus, initialisation and shuffling.
    #[arg(long)]
    pretrain_seed: Option<u64>,
    /// Directory of WAV files to pre-train on instead of the synthetic corpus.
    #[arg(long)]
    wav_corpus: Option<PathBuf>,
    /// Load this checkpoint instead of pre-training when it exists.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Skip training the recogniser and the recognition reports.
    #[arg(long)]
    no_recognition: bool,
    /// Output root.
    #[arg(long, env = "ASNCFL_OUTPUT")]
    output: Option<PathBuf>,
    /// Run seeds and clients one after another.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Debug)]
struct SeedList(Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<SeedList, String> {
    parse_seed_list(s).map(SeedList)
}

fn parse_seed_list(s: &str) -> std::result::Result<Vec<u64>, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad seed `{t}`: {e}"));
    if let Some((a, b)) = s.split_once("..=") {
        return Ok((num(a)?..=num(b)?).collect());
    }
    if let Some((a, b)) = s.split_once("..") {
        return Ok((num(a)?..num(b)?).collect());
    }
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(num).collect()
}

impl ConfigArgs {
    fn flag_config(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        if let Some(v) = &self.template {
            c.template = v.clone();
        }
        if let Some(v) = &self.seeds {
            c.seeds = v.0.clone();
        }
        if let Some(v) = self.duration {
            c.duration_s = v;
        }
        if let Some(v) = self.threshold {
            c.threshold = v;
        }
        if self.lambda.is_some() {
            c.lambda = self.lambda;
        }
        if let Some(v) = self.eps2 {
            c.cfl.eps2 = v;
        }
        if let Some(v) = self.eps3 {
            c.cfl.eps3 = v;
        }
        if let Some(v) = self.beta {
            c.cfl.beta = v;
        }
        if let Some(v) = self.min_tau {
            c.cfl.min_tau = v;
        }
        if let Some(v) = self.max_tau {
            c.cfl.max_tau = v;
        }
        if let Some(v) = self.local_lr {
            c.local.lr = v;
        }
        if let Some(v) = self.local_batch_size {
            c.local.batch_size = v;
        }
        if let Some(v) = self.local_epochs {
            c.local.epochs = v;
        }
        if let Some(m) = self.membership_matrix {
            c.membership_matrix = match m {
                MatrixArg::AssembledFinal => MembershipMatrix::AssembledFinal,
                MatrixArg::LeafBroadcast => MembershipMatrix::LeafBroadcast,
            };
        }
        if let Some(v) = self.pretrain_epochs {
            c.pretrain.epochs = v;
        }
        if let Some(v) = self.pretrain_lr {
            c.pretrain.lr = v;
        }
        if let Some(v) = self.pretrain_seed {
            c.pretrain.seed = v;
        }
        if let Some(p) = &self.wav_corpus {
            c.pretrain.corpus = CorpusSpec::WavDir { path: p.clone() };
        }
        if self.checkpoint.is_some() {
            c.pretrain.checkpoint = self.checkpoint.clone();
        }
        if self.no_recognition {
            c.recognition.enabled = false;
        }
        if let Some(p) = &self.output {
            c.output_dir = p.clone();
        }
        if self.sequential {
            c.execution = Execution::Sequential;
        }
        c
    }

    /// Defaults, then flags, then the config file on top.
    fn resolve(&self) -> Result<ExperimentConfig> {
        let flags = self.flag_config();
        let config = match &self.config {
            None => flags,
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let file: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                if !file.is_object() {
                    bail!("{} must contain a JSON object", path.display());
                }
                let mut merged = serde_json::to_value(&flags)?;
                merge(&mut merged, file);
                serde_json::from_value(merged)
                    .with_context(|| format!("invalid configuration in {}", path.display()))?
            }
        };
        config.validate()?;
        Ok(config)
    }
}

/// Recursively overlay `top` onto `base`; objects merge key by key, anything
/// else is replaced.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

fn pretrain(config: &ExperimentConfig, out: Option<&Path>) -> Result<()> {
    let path = out.map_or_else(|| config.output_dir.join("autoencoder.json"), Path::to_path_buf);
    let (model, report) = pretrain_autoencoder(config)?;
    save_checkpoint(&path, &model)?;
    let ck = Checkpoint::new(model);
    println!("checkpoint: {}", path.display());
    if let Some(loss) = report.epoch_losses.last() {
        println!("final reconstruction loss: {loss}");
    }
    println!("epochs: {}", report.epoch_losses.len());
    println!(
        "parameters: {} total, {} trainable",
        ck.total_params, ck.trainable_params
    );
    Ok(())
}

fn run(config: &ExperimentConfig) -> Result<bool> {
    let summary = run_experiment(config)?;
    print!("{}", summarize_output(&summary.output_dir)?);
    Ok(summary.all_ok())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Pretrain { config, out } => config
            .resolve()
            .and_then(|c| pretrain(&c, out.as_deref()))
            .map(|_| true),
        Command::Run { config, print_config } => config.resolve().and_then(|c| {
            if print_config {
                println!("{}", serde_json::to_string_pretty(&c)?);
                Ok(true)
            } else {
                run(&c)
            }
        }),
        Command::Report { output } => summarize_output(&output)
            .map(|s| print!("{s}"))
            .map(|_| true)
            .map_err(Into::into),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some seeds failed; see errors.csv");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
