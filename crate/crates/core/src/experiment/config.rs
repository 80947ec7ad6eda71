use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cfl::{CflParams, LocalTraining, MembershipMatrix};
use crate::dsp::LmbeConfig;
use crate::error::{Error, Result};
use crate::eval::{Aggregation, ClassifierConfig, PriorMode};
use crate::exec::Execution;
use crate::nn::AutoencoderConfig;
use crate::scene::SceneTemplate;

/// Where the pre-training frames come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorpusSpec {
    /// Clean synthetic utterances of the named source classes.
    Synthetic {
        classes: Vec<String>,
        utterances_per_class: usize,
        utterance_s: f64,
    },
    /// Every `.wav` file in a directory (16-bit mono).
    WavDir { path: PathBuf },
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec::Synthetic {
            classes: vec!["low-f0".into(), "high-f0".into()],
            utterances_per_class: 3,
            utterance_s: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PretrainConfig {
    pub corpus: CorpusSpec,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Load this checkpoint instead of pre-training when it exists.
    pub checkpoint: Option<PathBuf>,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            corpus: CorpusSpec::default(),
            epochs: 300,
            lr: 0.01,
            batch_size: 32,
            seed: 0,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecognitionConfig {
    pub enabled: bool,
    pub classifier: ClassifierConfig,
    /// Training utterances per class.
    pub per_class: usize,
    pub utterance_s: f64,
    /// Share of training utterances mixed with a second, different-class source.
    pub interferer_prob: f64,
    /// MV thresholds evaluated in addition to the main `threshold`.
    pub thresholds: Vec<f64>,
    pub priors: Vec<PriorMode>,
    pub aggregations: Vec<Aggregation>,
}

impl Default for RecognitionConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            classifier: ClassifierConfig::default(),
            per_class: 60,
            utterance_s: 10.0,
            interferer_prob: 0.5,
            thresholds: Vec::new(),
            priors: vec![PriorMode::All, PriorMode::ClosestNs, PriorMode::TopConfidenceNs],
            aggregations: vec![Aggregation::Mode, Aggregation::MvWeighted],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Built-in template name (`2SL`, `4SA`) or path to a JSON template.
    pub template: String,
    pub seeds: Vec<u64>,
    /// Rendered signal length per node.
    pub duration_s: f64,
    pub features: LmbeConfig,
    pub autoencoder: AutoencoderConfig,
    pub pretrain: PretrainConfig,
    pub local: LocalTraining,
    pub cfl: CflParams,
    pub membership_matrix: MembershipMatrix,
    /// `None` picks 0.5 for at most two clusters and 0 otherwise.
    pub lambda: Option<f64>,
    pub threshold: f64,
    pub recognition: RecognitionConfig,
    pub output_dir: PathBuf,
    pub execution: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            template: "2SL".into(),
            seeds: (0..10).collect(),
            duration_s: 40.0,
            features: LmbeConfig::default(),
            autoencoder: AutoencoderConfig::default(),
            pretrain: PretrainConfig::default(),
            local: LocalTraining::default(),
            cfl: CflParams::default(),
            membership_matrix: MembershipMatrix::default(),
            lambda: None,
            threshold: 0.8,
            recognition: RecognitionConfig::default(),
            output_dir: PathBuf::from("asn-cfl-out"),
            execution: Execution::default(),
        }
    }
}

fn unit(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{v} is outside [0, 1]")))
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    pub fn load_template(&self) -> Result<SceneTemplate> {
        match SceneTemplate::by_name(&self.template) {
            Ok(t) => Ok(t),
            Err(_) if Path::new(&self.template).exists() => SceneTemplate::from_json_file(&self.template),
            Err(e) => Err(e),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cfl.validate()?;
        unit("threshold", self.threshold)?;
        if let Some(l) = self.lambda {
            unit("lambda", l)?;
        }
        unit("interferer_prob", self.recognition.interferer_prob)?;
        for &v in &self.recognition.thresholds {
            unit("thresholds", v)?;
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::invalid("duration_s", "must be positive"));
        }
        if !(self.local.lr > 0.0) || self.local.batch_size == 0 {
            return Err(Error::invalid("local", "learning rate and batch size must be positive"));
        }
        self.autoencoder.validate()?;
        if self.autoencoder.input_dim() != self.features.band_count {
            return Err(Error::DimensionMismatch {
                context: "autoencoder input vs. mel bands",
                expected: self.features.band_count,
                actual: self.autoencoder.input_dim(),
            });
        }
        if let CorpusSpec::WavDir { path } = &self.pretrain.corpus {
            if !path.is_dir() {
                return Err(Error::invalid(
                    "pretrain.corpus",
                    format!("{} is not a directory", path.display()),
                ));
            }
        }
        self.load_template()?.validate()?;
        Ok(())
    }

    /// Every MV threshold that gets evaluated, main threshold first.
    pub fn all_thresholds(&self) -> Vec<f64> {
        let mut out = vec![self.threshold];
        for &v in &self.recognition.thresholds {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }
}
