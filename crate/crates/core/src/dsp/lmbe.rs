use serde::{Deserialize, Serialize};

use super::{mel_filterbank, AudioSignal, MelFilterbank, Stft};
use crate::error::{Error, Result};

pub const DEFAULT_ENERGY_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmbeConfig {
    pub frame_len_s: f64,
    pub hop_s: f64,
    pub band_count: usize,
    pub floor: f64,
}

impl Default for LmbeConfig {
    /// 64 ms frames, 32 ms hop, 128 mel bands.
    fn default() -> Self {
        Self {
            frame_len_s: 0.064,
            hop_s: 0.032,
            band_count: 128,
            floor: DEFAULT_ENERGY_FLOOR,
        }
    }
}

impl LmbeConfig {
    /// Framing used by the source-class recognizer: 64 ms / 20 ms / 40 bands.
    pub fn recognizer() -> Self {
        Self {
            frame_len_s: 0.064,
            hop_s: 0.02,
            band_count: 40,
            floor: DEFAULT_ENERGY_FLOOR,
        }
    }
}

/// Row-major `frames × bands` matrix of natural-log band energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmbeMatrix {
    frames: usize,
    band_count: usize,
    frame_len_s: f64,
    hop_s: f64,
    values: Vec<f64>,
}

impl LmbeMatrix {
    pub fn from_rows(rows: &[Vec<f64>], frame_len_s: f64, hop_s: f64) -> Result<Self> {
        let band_count = rows.first().map(Vec::len).ok_or(Error::Empty("LMBE rows"))?;
        if band_count == 0 {
            return Err(Error::invalid("band_count", "must be at least 1"));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != band_count) {
            return Err(Error::DimensionMismatch {
                context: "LMBE row",
                expected: band_count,
                actual: bad.len(),
            });
        }
        Ok(Self {
            frames: rows.len(),
            band_count,
            frame_len_s,
            hop_s,
            values: rows.concat(),
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn band_count(&self) -> usize {
        self.band_count
    }

    pub fn frame_len_s(&self) -> f64 {
        self.frame_len_s
    }

    pub fn hop_s(&self) -> f64 {
        self.hop_s
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.band_count..(i + 1) * self.band_count]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.values.chunks_exact(self.band_count)
    }

    /// Mean over frames, one value per band.
    pub fn time_average(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.band_count];
        for row in self.rows() {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        acc.iter().map(|a| a / self.frames as f64).collect()
    }
}

/// STFT plan plus filterbank, reusable across many signals of one sample rate.
#[derive(Debug, Clone)]
pub struct LmbeExtractor {
    config: LmbeConfig,
    sample_rate: u32,
    stft: Stft,
    filterbank: MelFilterbank,
}

impl LmbeExtractor {
    pub fn new(config: LmbeConfig, sample_rate: u32) -> Result<Self> {
        if !(config.floor > 0.0) {
            return Err(Error::invalid("floor", "energy floor must be positive"));
        }
        let stft = Stft::from_seconds(config.frame_len_s, config.hop_s, sample_rate)?;
        let filterbank = mel_filterbank(stft.bins(), config.band_count, sample_rate)?;
        Ok(Self {
            config,
            sample_rate,
            stft,
            filterbank,
        })
    }

    pub fn config(&self) -> &LmbeConfig {
        &self.config
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn extract(&self, signal: &AudioSignal) -> Result<LmbeMatrix> {
        if signal.sample_rate() != self.sample_rate {
            return Err(Error::invalid(
                "sample_rate",
                format!(
                    "extractor built for {} Hz, got {}",
                    self.sample_rate,
                    signal.sample_rate()
                ),
            ));
        }
        let power = self.stft.power(signal.samples())?;
        let k = self.config.band_count;
        let mut values = vec![0.0; power.frames * k];
        for (f, out) in values.chunks_exact_mut(k).enumerate() {
            self.filterbank.apply(power.frame(f), out);
            for v in out.iter_mut() {
                *v = v.max(self.config.floor).ln();
            }
        }
        Ok(LmbeMatrix {
            frames: power.frames,
            band_count: k,
            frame_len_s: self.config.frame_len_s,
            hop_s: self.config.hop_s,
            values,
        })
    }
}

/// `ln(max(filterbank · power_frame, floor))` for every frame.
pub fn lmbe(signal: &AudioSignal, config: &LmbeConfig) -> Result<LmbeMatrix> {
    LmbeExtractor::new(*config, signal.sample_rate())?.extract(signal)
}
