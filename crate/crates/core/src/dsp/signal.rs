use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Mono signal with finite double-precision samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample_rate", "must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid("samples", format!("non-finite value at index {i}")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Sub-signal `[start, start + len)`, clipped to the available samples.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        let start = start.min(self.samples.len());
        let end = (start + len).min(self.samples.len());
        Self {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()))
    }

    /// Copy scaled so that the absolute peak equals `target` (unchanged if silent).
    pub fn peak_normalized(&self, target: f64) -> Self {
        let peak = self.peak();
        if peak == 0.0 {
            return self.clone();
        }
        self.scaled(target / peak)
    }
}

/// Read a mono 16-bit PCM RIFF/WAV file; samples are mapped to [-1, 1).
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let mut reader = hound::WavReader::open(path.as_ref())?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::invalid(
            "wav",
            format!("expected mono, got {} channels", spec.channels),
        ));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::invalid("wav", "only 16-bit PCM is supported"));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    AudioSignal::new(samples, spec.sample_rate)
}

/// Write a mono 16-bit PCM file. Samples outside [-1, 1] are clipped.
pub fn write_wav(path: impl AsRef<Path>, signal: &AudioSignal) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path.as_ref(), spec)?;
    for &s in signal.samples() {
        let v = (s * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        writer.write_sample(v)?;
    }
    writer.finalize()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_zero_rate() {
        assert!(AudioSignal::new(vec![0.0, f64::NAN], 16_000).is_err());
        assert!(AudioSignal::new(vec![0.0], 0).is_err());
    }

    #[test]
    fn wav_round_trip_preserves_quantized_samples() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let samples: Vec<f64> = (0..400).map(|i| ((i as f64) * 0.05).sin() * 0.5).collect();
        let sig = AudioSignal::new(samples, 16_000).unwrap();
        write_wav(&path, &sig).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.sample_rate(), 16_000);
        assert_eq!(back.len(), sig.len());
        for (a, b) in back.samples().iter().zip(sig.samples()) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }
}
