mod common;

use asn_cfl::experiment::{pretrain_autoencoder, CorpusSpec};
use asn_cfl::nn::{load_checkpoint, save_checkpoint, Autoencoder};
use common::quick_config;

fn bits(model: &Autoencoder) -> Vec<u64> {
    model
        .net
        .layers()
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.bias))
        .map(|v| v.to_bits())
        .collect()
}

#[test]
fn one_epoch_checkpoint_loads_back_bitwise() {
    let mut config = quick_config([]);
    config.pretrain.epochs = 1;
    let (model, report) = pretrain_autoencoder(&config).unwrap();
    assert_eq!(report.epoch_losses.len(), 1);

    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("nested/ae.json");
    save_checkpoint(&path, &model).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(bits(&back.model), bits(&model));
    assert_eq!(back.model, model);
    assert_eq!(back.trainable_params, model.bottleneck_param_count());
    assert_eq!(back.total_params, model.net.total_param_count());
}

#[test]
fn same_seed_gives_the_same_checkpoint() {
    let config = quick_config([]);
    let (a, _) = pretrain_autoencoder(&config).unwrap();
    let (b, _) = pretrain_autoencoder(&config).unwrap();
    assert_eq!(bits(&a), bits(&b));

    let mut other = config.clone();
    other.pretrain.seed += 1;
    let (c, _) = pretrain_autoencoder(&other).unwrap();
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn execution_mode_does_not_change_the_model() {
    let mut config = quick_config([]);
    config.execution = asn_cfl::Execution::Sequential;
    let (a, _) = pretrain_autoencoder(&config).unwrap();
    config.execution = asn_cfl::Execution::Parallel;
    let (b, _) = pretrain_autoencoder(&config).unwrap();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn pretrains_from_a_wav_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: 16_000,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    for (k, f0) in [(0, 220.0), (1, 540.0)] {
        let mut w = hound::WavWriter::create(tmp.path().join(format!("u{k}.wav")), spec).unwrap();
        for n in 0..32_000 {
            let t = n as f64 / 16_000.0;
            let s = 0.3 * (2.0 * std::f64::consts::PI * f0 * t).sin();
            w.write_sample((s * i16::MAX as f64) as i16).unwrap();
        }
        w.finalize().unwrap();
    }
    std::fs::write(tmp.path().join("notes.txt"), "ignored").unwrap();

    let mut config = quick_config([]);
    config.pretrain.corpus = CorpusSpec::WavDir {
        path: tmp.path().to_path_buf(),
    };
    let (model, report) = pretrain_autoencoder(&config).unwrap();
    assert_eq!(report.epoch_losses.len(), config.pretrain.epochs);
    assert!(model.final_loss.is_some_and(f64::is_finite));
}

#[test]
fn empty_corpus_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = quick_config([]);
    config.pretrain.corpus = CorpusSpec::WavDir {
        path: tmp.path().to_path_buf(),
    };
    assert!(pretrain_autoencoder(&config).is_err());
}

#[test]
fn existing_checkpoint_is_reused() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("ae.json");
    let mut config = quick_config([]);
    config.pretrain.seed = 11;
    let (model, _) = pretrain_autoencoder(&config).unwrap();
    save_checkpoint(&path, &model).unwrap();

    let mut reuse = quick_config([]);
    reuse.pretrain.checkpoint = Some(path);
    let prepared = asn_cfl::experiment::prepare(&reuse).unwrap();
    assert_eq!(bits(&prepared.autoencoder), bits(&model));
}
