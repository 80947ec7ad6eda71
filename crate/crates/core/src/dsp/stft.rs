use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::AudioSignal;
use crate::error::{Error, Result};

/// Row-major `frames × bins` power spectrogram.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrogram {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<f64>,
}

impl PowerSpectrogram {
    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.bins..(i + 1) * self.bins]
    }
}

pub fn seconds_to_samples(seconds: f64, sample_rate: u32) -> usize {
    (seconds * sample_rate as f64).round().max(0.0) as usize
}

/// Periodic Hann window.
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Reusable Hann-windowed STFT with a cached FFT plan.
#[derive(Clone)]
pub struct Stft {
    frame_len: usize,
    hop: usize,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Stft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stft")
            .field("frame_len", &self.frame_len)
            .field("hop", &self.hop)
            .finish()
    }
}

impl Stft {
    pub fn new(frame_len: usize, hop: usize) -> Result<Self> {
        if frame_len < 2 {
            return Err(Error::invalid("frame_len", "a frame needs at least 2 samples"));
        }
        if hop == 0 || hop > frame_len {
            return Err(Error::invalid("hop", format!("must be in 1..={frame_len}, got {hop}")));
        }
        let fft = FftPlanner::new().plan_fft_forward(frame_len);
        Ok(Self {
            frame_len,
            hop,
            window: hann_window(frame_len),
            fft,
        })
    }

    pub fn from_seconds(frame_len_s: f64, hop_s: f64, sample_rate: u32) -> Result<Self> {
        Self::new(
            seconds_to_samples(frame_len_s, sample_rate),
            seconds_to_samples(hop_s, sample_rate),
        )
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    pub fn frame_count(&self, samples: usize) -> usize {
        if samples < self.frame_len {
            0
        } else {
            (samples - self.frame_len) / self.hop + 1
        }
    }

    pub fn power(&self, samples: &[f64]) -> Result<PowerSpectrogram> {
        let frames = self.frame_count(samples.len());
        if frames == 0 {
            return Err(Error::SignalTooShort {
                samples: samples.len(),
                frame_len: self.frame_len,
            });
        }
        let bins = self.bins();
        let mut data = Vec::with_capacity(frames * bins);
        let mut buf = vec![Complex::new(0.0, 0.0); self.frame_len];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for f in 0..frames {
            let start = f * self.hop;
            for (n, slot) in buf.iter_mut().enumerate() {
                *slot = Complex::new(samples[start + n] * self.window[n], 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            data.extend(buf[..bins].iter().map(|c| c.norm_sqr()));
        }
        Ok(PowerSpectrogram { frames, bins, data })
    }
}

/// `|DFT|²` of Hann-windowed frames; `bins = frame_samples / 2 + 1`.
pub fn stft_power(signal: &AudioSignal, frame_len_s: f64, hop_s: f64) -> Result<PowerSpectrogram> {
    Stft::from_seconds(frame_len_s, hop_s, signal.sample_rate())?.power(signal.samples())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct O(N²) DFT power of a windowed frame.
    fn naive_power(frame: &[f64]) -> Vec<f64> {
        let n = frame.len();
        (0..n / 2 + 1)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, x) in frame.iter().enumerate() {
                    let ang = -2.0 * PI * (k * t) as f64 / n as f64;
                    re += x * ang.cos();
                    im += x * ang.sin();
                }
                re * re + im * im
            })
            .collect()
    }

    #[test]
    fn zeros_give_zero_power() {
        let sig = AudioSignal::zeros(4096, 16_000);
        let p = stft_power(&sig, 0.064, 0.032).unwrap();
        assert_eq!(p.frames, (4096 - 1024) / 512 + 1);
        assert!(p.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn impulse_matches_direct_dft() {
        let mut s = vec![0.0; 64];
        s[0] = 1.0;
        s[17] = 0.25;
        let stft = Stft::new(64, 64).unwrap();
        let p = stft.power(&s).unwrap();
        let w = hann_window(64);
        let windowed: Vec<f64> = s.iter().zip(&w).map(|(a, b)| a * b).collect();
        let oracle = naive_power(&windowed);
        for (a, b) in p.frame(0).iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn sine_peak_at_expected_bin() {
        let sr = 16_000;
        let samples: Vec<f64> = (0..2048)
            .map(|n| (2.0 * PI * 1000.0 * n as f64 / sr as f64).sin())
            .collect();
        let sig = AudioSignal::new(samples.clone(), sr).unwrap();
        let p = stft_power(&sig, 0.064, 0.032).unwrap();
        let argmax = |v: &[f64]| v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let w = hann_window(1024);
        let windowed: Vec<f64> = samples[..1024].iter().zip(&w).map(|(a, b)| a * b).collect();
        assert_eq!(argmax(p.frame(0)), 64);
        assert_eq!(argmax(&naive_power(&windowed)), 64);
    }

    #[test]
    fn parseval_with_one_sided_compensation() {
        let samples: Vec<f64> = (0..512).map(|n| ((n * 7919) % 113) as f64 / 113.0 - 0.5).collect();
        let stft = Stft::new(256, 128).unwrap();
        let p = stft.power(&samples).unwrap();
        let w = hann_window(256);
        for f in 0..p.frames {
            let frame = p.frame(f);
            let n = 256.0;
            let spec_energy = (frame[0] + 2.0 * frame[1..128].iter().sum::<f64>() + frame[128]) / n;
            let time_energy: f64 = (0..256).map(|i| (samples[f * 128 + i] * w[i]).powi(2)).sum();
            assert!(((spec_energy - time_energy) / time_energy).abs() < 1e-6);
        }
    }

    #[test]
    fn too_short_and_bad_framing_are_errors() {
        let sig = AudioSignal::zeros(100, 16_000);
        assert!(matches!(
            stft_power(&sig, 0.064, 0.032),
            Err(Error::SignalTooShort { .. })
        ));
        assert!(Stft::new(1, 1).is_err());
        assert!(Stft::new(16, 17).is_err());
        assert!(Stft::new(16, 0).is_err());
    }
}
