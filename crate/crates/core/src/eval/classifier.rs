use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::{AudioSignal, LmbeConfig, LmbeExtractor, LmbeMatrix};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::nn::train::sgd_epoch_from;
use crate::nn::{softmax, Activation, DenseNetwork, FeatureNorm, Loss};
use crate::rng;
use crate::scene::{fft_convolve, make_source_signal, synthesize_rir, Point, Room, SourceClass};

/// LMBE frames with integer class labels, grouped by the utterance they
/// came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub groups: Vec<usize>,
    pub class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn empty(class_names: Vec<String>) -> Self {
        Self {
            features: Vec::new(),
            labels: Vec::new(),
            groups: Vec::new(),
            class_names,
        }
    }

    /// Examples of every `k`-th group (starting at `offset`) go to the
    /// second part, so frames of one utterance never straddle the split.
    pub fn split_every(&self, k: usize, offset: usize) -> (Self, Self) {
        let mut a = Self::empty(self.class_names.clone());
        let mut b = a.clone();
        for ((f, &l), &g) in self.features.iter().zip(&self.labels).zip(&self.groups) {
            let dst = if k > 0 && g % k == offset % k { &mut b } else { &mut a };
            dst.features.push(f.clone());
            dst.labels.push(l);
            dst.groups.push(g);
        }
        (a, b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Every n-th example is held out for the reported accuracy.
    pub held_out_every: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: vec![32],
            epochs: 13,
            lr: 0.01,
            batch_size: 1,
            held_out_every: 5,
            seed: 0,
        }
    }
}

/// Dense softmax frame classifier over LMBE frames with the overall level
/// removed and each band standardised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub net: DenseNetwork,
    pub norm: FeatureNorm,
    pub class_names: Vec<String>,
}

impl Classifier {
    /// Class probabilities for one feature vector.
    pub fn predict_proba(&self, features: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.net.forward(&self.norm.apply(&remove_gain(features)))?))
    }

    /// Class probabilities for a whole utterance: the mean frame
    /// probability over its active frames.
    pub fn utterance_proba(&self, lmbe: &LmbeMatrix) -> Result<Vec<f64>> {
        let classes = self.class_names.len();
        let frames = active_frames(lmbe);
        if frames.is_empty() {
            return Ok(vec![1.0 / classes as f64; classes]);
        }
        let mut acc = vec![0.0; classes];
        for &t in &frames {
            let p = self.predict_proba(lmbe.row(t))?;
            acc.iter_mut().zip(&p).for_each(|(a, v)| *a += v);
        }
        Ok(acc.into_iter().map(|a| a / frames.len() as f64).collect())
    }

    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(features)?))
    }

    pub fn accuracy(&self, data: &LabeledDataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::Empty("evaluation dataset"));
        }
        let mut correct = 0;
        for (f, &l) in data.features.iter().zip(&data.labels) {
            if self.predict(f)? == l {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub classifier: Classifier,
    pub held_out_accuracy: Option<f64>,
    pub epoch_losses: Vec<f64>,
}

/// Subtract the mean log energy so that only the spectral shape remains.
fn remove_gain(features: &[f64]) -> Vec<f64> {
    let mean = features.iter().sum::<f64>() / features.len().max(1) as f64;
    features.iter().map(|v| v - mean).collect()
}

/// Frames within this many nepers (30 dB) of the loudest frame count as active.
const ACTIVE_RANGE: f64 = 6.907_755_278_982_137;

/// Indices of the active frames.
fn active_frames(lmbe: &LmbeMatrix) -> Vec<usize> {
    let level: Vec<f64> = lmbe
        .rows()
        .map(|r| r.iter().sum::<f64>() / r.len().max(1) as f64)
        .collect();
    let top = level.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    level
        .iter()
        .enumerate()
        .filter(|(_, &e)| e >= top - ACTIVE_RANGE)
        .map(|(t, _)| t)
        .collect()
}

fn frame_energy(row: &[f64]) -> f64 {
    row.iter().map(|v| v.exp()).sum()
}

pub(crate) fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if *v > x[best] {
            best = i;
        }
    }
    best
}

/// Train on all but a held-out fraction with softmax cross-entropy and SGD.
pub fn train_classifier(data: &LabeledDataset, config: &ClassifierConfig) -> Result<TrainedClassifier> {
    if data.is_empty() {
        return Err(Error::Empty("classifier dataset"));
    }
    let classes = data.class_count();
    let present = (0..classes).filter(|c| data.labels.contains(c)).count();
    if classes < 2 || present < 2 {
        return Err(Error::invalid("dataset", "need examples of at least two classes"));
    }
    if data.features.len() != data.labels.len() || data.groups.len() != data.labels.len() {
        return Err(Error::invalid(
            "dataset",
            "features, labels and groups differ in length",
        ));
    }
    if data.labels.iter().any(|&l| l >= classes) {
        return Err(Error::invalid("dataset", "label out of range"));
    }
    let group_count = data.groups.iter().max().map_or(0, |g| g + 1);
    let (train, held_out) = if config.held_out_every > 1 && group_count >= config.held_out_every {
        data.split_every(config.held_out_every, config.held_out_every - 1)
    } else {
        (data.clone(), LabeledDataset::empty(data.class_names.clone()))
    };
    let shapes: Vec<Vec<f64>> = train.features.iter().map(|f| remove_gain(f)).collect();
    let norm = FeatureNorm::fit(shapes.iter().map(Vec::as_slice))?;
    let dim = train.features[0].len();
    let mut dims = vec![dim];
    dims.extend_from_slice(&config.hidden);
    dims.push(classes);
    let acts: Vec<Activation> = (0..dims.len() - 1)
        .map(|i| {
            if i + 2 == dims.len() {
                Activation::Linear
            } else {
                Activation::Relu
            }
        })
        .collect();
    let mut net = DenseNetwork::glorot(&dims, &acts, rng::derive_str(config.seed, "classifier-init"))?;
    let inputs: Vec<Vec<f64>> = shapes.iter().map(|f| norm.apply(f)).collect();
    let onehot: Vec<Vec<f64>> = train
        .labels
        .iter()
        .map(|&l| (0..classes).map(|c| if c == l { 1.0 } else { 0.0 }).collect())
        .collect();
    let targets: Vec<&[f64]> = onehot.iter().map(Vec::as_slice).collect();
    let mut r = rng::rng(rng::derive_str(config.seed, "classifier-sgd"));
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let loss = sgd_epoch_from(
            &mut net,
            0,
            &inputs,
            &targets,
            config.batch_size,
            config.lr,
            Loss::SoftmaxCrossEntropy,
            &mut r,
        )?;
        epoch_losses.push(loss);
    }
    let classifier = Classifier {
        net,
        norm,
        class_names: data.class_names.clone(),
    };
    let held_out_accuracy = if held_out.is_empty() {
        None
    } else {
        Some(classifier.accuracy(&held_out)?)
    };
    Ok(TrainedClassifier {
        classifier,
        held_out_accuracy,
        epoch_losses,
    })
}

fn random_room(r: &mut impl Rng) -> Room {
    Room {
        name: "augment".into(),
        x0: 0.0,
        y0: 0.0,
        x1: r.random_range(3.0..8.0),
        y1: r.random_range(3.0..6.0),
        t60_s: r.random_range(0.3..0.9),
    }
}

fn random_point(room: &Room, r: &mut impl Rng) -> Point {
    Point::new(
        r.random_range(room.x0 + 0.3..room.x1 - 0.3),
        r.random_range(room.y0 + 0.3..room.y1 - 0.3),
    )
}

/// Reverberant examples of each class: clean utterances convolved with a
/// freshly drawn synthetic RIR (random room, T60 and positions), reduced to
/// the active frames of their recogniser LMBE. Each utterance is one group.
///
/// With probability `interferer_prob` an utterance of a different class is
/// mixed in from another random position. Each frame of a mixture is then
/// labelled with the class whose reverberant component carries more energy
/// in that frame.
pub fn class_dataset(
    classes: &[SourceClass],
    per_class: usize,
    utterance_s: f64,
    interferer_prob: f64,
    sample_rate: u32,
    seed: u64,
    exec: Execution,
) -> Result<LabeledDataset> {
    if classes.len() < 2 {
        return Err(Error::invalid("classes", "need at least two classes"));
    }
    if !(0.0..=1.0).contains(&interferer_prob) {
        return Err(Error::invalid("interferer_prob", "must lie in [0, 1]"));
    }
    let extractor = LmbeExtractor::new(LmbeConfig::recognizer(), sample_rate)?;
    let jobs: Vec<(usize, usize)> = (0..per_class)
        .flat_map(|i| (0..classes.len()).map(move |c| (c, i)))
        .collect();
    let examples = exec
        .map(&jobs, |&(c, i)| {
            let s = rng::derive(seed, &[c as u64, i as u64]);
            let mut r = rng::rng(rng::derive_str(s, "room"));
            let room = random_room(&mut r);
            let mic = random_point(&room, &mut r);
            let mixed = r.random_bool(interferer_prob);
            let mut render = |class: usize, label: &str| -> Result<Vec<f64>> {
                let pos = random_point(&room, &mut r);
                let clean = make_source_signal(&classes[class], utterance_s, sample_rate, rng::derive_str(s, label))?;
                let rir = synthesize_rir(
                    &room,
                    pos,
                    mic,
                    sample_rate,
                    rng::derive_str(s, &format!("{label}-rir")),
                );
                Ok(fft_convolve(clean.samples(), &rir.taps, clean.len()))
            };
            let target = render(c, "target")?;
            if !mixed {
                let lm = extractor.extract(&AudioSignal::new(target, sample_rate)?)?;
                return Ok(active_frames(&lm)
                    .into_iter()
                    .map(|t| (lm.row(t).to_vec(), c))
                    .collect());
            }
            let other = (c + 1 + (rng::derive_str(s, "other") as usize) % (classes.len() - 1)) % classes.len();
            let interferer = render(other, "interferer")?;
            let mix: Vec<f64> = target.iter().zip(&interferer).map(|(a, b)| a + b).collect();
            let lm = extractor.extract(&AudioSignal::new(mix, sample_rate)?)?;
            let lt = extractor.extract(&AudioSignal::new(target, sample_rate)?)?;
            let li = extractor.extract(&AudioSignal::new(interferer, sample_rate)?)?;
            Ok(active_frames(&lm)
                .into_iter()
                .map(|t| {
                    let label = if frame_energy(lt.row(t)) >= frame_energy(li.row(t)) {
                        c
                    } else {
                        other
                    };
                    (lm.row(t).to_vec(), label)
                })
                .collect::<Vec<_>>())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut data = LabeledDataset::empty(classes.iter().map(|c| c.name().to_string()).collect());
    for (g, frames) in examples.into_iter().enumerate() {
        for (f, c) in frames {
            data.features.push(f);
            data.labels.push(c);
            data.groups.push(g);
        }
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(n: usize, sep: f64, seed: u64) -> LabeledDataset {
        let mut r = rng::rng(seed);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let groups = (0..n).collect();
        for i in 0..n {
            let c = i % 2;
            let tilt = if c == 0 { -sep } else { sep };
            features.push(
                (0..4)
                    .map(|k| if k < 2 { tilt } else { -tilt } + r.random_range(-1.0..1.0))
                    .collect(),
            );
            labels.push(c);
        }
        LabeledDataset {
            features,
            labels,
            groups,
            class_names: vec!["a".into(), "b".into()],
        }
    }

    #[test]
    fn separable_classes_are_learned() {
        let t = train_classifier(&blobs(200, 2.0, 1), &ClassifierConfig::default()).unwrap();
        assert!(t.held_out_accuracy.unwrap() > 0.95);
    }

    #[test]
    fn softmax_outputs_sum_to_one() {
        let t = train_classifier(
            &blobs(50, 2.0, 2),
            &ClassifierConfig {
                epochs: 1,
                ..Default::default()
            },
        )
        .unwrap();
        for f in &blobs(20, 2.0, 3).features {
            let p = t.classifier.predict_proba(f).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_class_rejected() {
        let mut d = blobs(10, 1.0, 4);
        d.labels.iter_mut().for_each(|l| *l = 0);
        assert!(train_classifier(&d, &ClassifierConfig::default()).is_err());
    }
}
