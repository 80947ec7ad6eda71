use std::path::Path;

use super::config::{CorpusSpec, ExperimentConfig};
use crate::dsp::{read_wav, AudioSignal, LmbeExtractor, DEFAULT_SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::nn::{pretrain, Autoencoder, FeatureNorm, PretrainReport};
use crate::rng;
use crate::scene::{make_source_signal, SourceClass};

/// Signals of the pre-training corpus.
pub fn corpus_signals(spec: &CorpusSpec, sample_rate: u32, seed: u64, exec: Execution) -> Result<Vec<AudioSignal>> {
    match spec {
        CorpusSpec::Synthetic {
            classes,
            utterances_per_class,
            utterance_s,
        } => {
            let classes = classes
                .iter()
                .map(|c| SourceClass::by_name(c))
                .collect::<Result<Vec<_>>>()?;
            let jobs: Vec<(usize, usize)> = (0..classes.len())
                .flat_map(|c| (0..*utterances_per_class).map(move |u| (c, u)))
                .collect();
            exec.map(&jobs, |&(c, u)| {
                make_source_signal(
                    &classes[c],
                    *utterance_s,
                    sample_rate,
                    rng::derive(seed, &[c as u64, u as u64]),
                )
            })
            .into_iter()
            .collect()
        }
        CorpusSpec::WavDir { path } => read_wav_dir(path),
    }
}

fn read_wav_dir(dir: &Path) -> Result<Vec<AudioSignal>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    paths.sort();
    paths.iter().map(read_wav).collect()
}

/// Normalised LMBE frames of the corpus together with the fitted normalisation.
pub fn corpus_frames(
    config: &ExperimentConfig,
    signals: &[AudioSignal],
    exec: Execution,
) -> Result<(Vec<Vec<f64>>, FeatureNorm)> {
    if signals.is_empty() {
        return Err(Error::Empty("pre-training corpus"));
    }
    let per_signal = exec
        .map(signals, |s| {
            let ex = LmbeExtractor::new(config.features, s.sample_rate())?;
            let m = ex.extract(s)?;
            Ok(m.rows().map(<[f64]>::to_vec).collect::<Vec<_>>())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let raw: Vec<Vec<f64>> = per_signal.into_iter().flatten().collect();
    let norm = FeatureNorm::fit(raw.iter().map(Vec::as_slice))?;
    let frames = raw.iter().map(|r| norm.apply(r)).collect();
    Ok((frames, norm))
}

/// Build, normalise and pre-train the autoencoder described by `config`.
pub fn pretrain_autoencoder(config: &ExperimentConfig) -> Result<(Autoencoder, PretrainReport)> {
    let p = &config.pretrain;
    let exec = config.execution;
    let signals = corpus_signals(&p.corpus, DEFAULT_SAMPLE_RATE, rng::derive_str(p.seed, "corpus"), exec)?;
    let (frames, norm) = corpus_frames(config, &signals, exec)?;
    let mut model = Autoencoder::build(&config.autoencoder, rng::derive_str(p.seed, "init"))?;
    model.norm = norm;
    let report = pretrain(
        &mut model,
        &frames,
        p.epochs,
        p.lr,
        p.batch_size,
        rng::derive_str(p.seed, "sgd"),
    )?;
    Ok((model, report))
}
