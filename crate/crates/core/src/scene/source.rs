//! Synthetic sources standing in for speech: a pulse train with a syllabic
//! amplitude envelope and gliding pitch, shaped by vowel-like formant
//! resonators (source-filter model), or band-limited noise bursts.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dsp::AudioSignal;
use crate::error::{Error, Result};
use crate::rng;

/// Length of one synthetic utterance.
pub const SEGMENT_S: f64 = 10.0;

const TARGET_RMS: f64 = 0.1;

/// (F1, F2, F3) in Hz for a handful of vowels.
const VOWELS: [[f64; 3]; 5] = [
    [730.0, 1090.0, 2440.0],
    [270.0, 2290.0, 3010.0],
    [300.0, 870.0, 2240.0],
    [530.0, 1840.0, 2480.0],
    [570.0, 840.0, 2410.0],
];
const FORMANT_BW: [f64; 3] = [80.0, 100.0, 150.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceClass {
    Harmonic {
        name: String,
        f0_min: f64,
        f0_max: f64,
        /// Multiplier on the vowel formant frequencies.
        formant_scale: f64,
        /// One-pole low-pass coefficient of the excitation (spectral tilt).
        tilt: f64,
    },
    BandNoise {
        name: String,
        lo_hz: f64,
        hi_hz: f64,
    },
}

impl SourceClass {
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "low-f0" => Ok(SourceClass::Harmonic {
                name: name.into(),
                f0_min: 85.0,
                f0_max: 145.0,
                formant_scale: 0.9,
                tilt: 0.9,
            }),
            "high-f0" => Ok(SourceClass::Harmonic {
                name: name.into(),
                f0_min: 180.0,
                f0_max: 270.0,
                formant_scale: 1.2,
                tilt: 0.6,
            }),
            "noise-low" => Ok(SourceClass::BandNoise {
                name: name.into(),
                lo_hz: 100.0,
                hi_hz: 1000.0,
            }),
            "noise-high" => Ok(SourceClass::BandNoise {
                name: name.into(),
                lo_hz: 2000.0,
                hi_hz: 6000.0,
            }),
            other => Err(Error::UnknownClass(other.into())),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            SourceClass::Harmonic { name, .. } | SourceClass::BandNoise { name, .. } => name,
        }
    }
}

struct Syllable {
    start: usize,
    len: usize,
    amp: f64,
    f0_start: f64,
    f0_end: f64,
    vowel: usize,
}

fn syllables(len: usize, fs: f64, r: &mut impl Rng) -> Vec<Syllable> {
    let mut out = Vec::new();
    let mut t = (r.random_range(0.0..0.2) * fs) as usize;
    while t < len {
        let dur = (r.random_range(0.12..0.35) * fs) as usize;
        out.push(Syllable {
            start: t,
            len: dur.min(len - t),
            amp: r.random_range(0.5..1.0),
            f0_start: r.random_range(0.85..1.15),
            f0_end: r.random_range(0.85..1.15),
            vowel: r.random_range(0..VOWELS.len()),
        });
        let gap = if r.random_bool(0.15) {
            r.random_range(0.3..0.8)
        } else {
            r.random_range(0.03..0.25)
        };
        t += dur + (gap * fs) as usize;
    }
    out
}

/// Klatt resonator with unit DC gain.
#[derive(Default)]
struct Resonator {
    a: f64,
    b: f64,
    c: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn tune(&mut self, freq: f64, bw: f64, fs: f64) {
        let r = (-PI * bw / fs).exp();
        self.c = -r * r;
        self.b = 2.0 * r * (2.0 * PI * freq / fs).cos();
        self.a = 1.0 - self.b - self.c;
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.a * x + self.b * self.y1 + self.c * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn harmonic_segment(
    len: usize,
    fs: f64,
    f0_range: (f64, f64),
    formant_scale: f64,
    tilt: f64,
    r: &mut impl Rng,
) -> Vec<f64> {
    let base_f0 = r.random_range(f0_range.0..f0_range.1);
    let speaker_shift = r.random_range(0.93..1.07);
    let sylls = syllables(len, fs, r);
    let mut out = vec![0.0; len];
    let mut phase = 0.0;
    let mut lp = 0.0;
    let mut res: [Resonator; 3] = Default::default();
    for s in &sylls {
        for (k, rs) in res.iter_mut().enumerate() {
            let f = VOWELS[s.vowel][k] * formant_scale * speaker_shift;
            rs.tune(f.min(0.45 * fs), FORMANT_BW[k] * formant_scale, fs);
        }
        for i in 0..s.len {
            let u = i as f64 / s.len as f64;
            let f0 = base_f0
                * (s.f0_start + (s.f0_end - s.f0_start) * u)
                * (1.0 + 0.01 * (2.0 * PI * 5.0 * (s.start + i) as f64 / fs).sin());
            phase += f0 / fs;
            let mut x = 0.0;
            if phase >= 1.0 {
                phase -= 1.0;
                x = 1.0;
            }
            let n: f64 = StandardNormal.sample(r);
            x += 0.02 * n;
            lp = (1.0 - tilt) * x + tilt * lp;
            let mut y = lp;
            for rs in res.iter_mut() {
                y = rs.step(y);
            }
            let env = (PI * u).sin().powi(2) * s.amp;
            out[s.start + i] = y * env;
        }
    }
    out
}

fn band_noise_segment(len: usize, fs: f64, lo: f64, hi: f64, r: &mut impl Rng) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = (0..len).map(|_| Complex::new(StandardNormal.sample(r), 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let bin = k.min(len - k);
        let f = bin as f64 * fs / len as f64;
        if f < lo || f > hi {
            *c = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let sylls = syllables(len, fs, r);
    let mut out = vec![0.0; len];
    for s in &sylls {
        for i in 0..s.len {
            let u = i as f64 / s.len as f64;
            out[s.start + i] = buf[s.start + i].re * (PI * u).sin().powi(2) * s.amp;
        }
    }
    out
}

fn normalize_rms(x: &mut [f64]) {
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt();
    if rms > 0.0 {
        x.iter_mut().for_each(|v| *v *= TARGET_RMS / rms);
    }
}

/// Concatenated 10 s utterances of the given class, truncated to `duration_s`.
pub fn make_source_signal(class: &SourceClass, duration_s: f64, sample_rate: u32, seed: u64) -> Result<AudioSignal> {
    if !(duration_s > 0.0) {
        return Err(Error::invalid("duration_s", "must be positive"));
    }
    let fs = sample_rate as f64;
    let total = (duration_s * fs).round() as usize;
    let seg_len = (SEGMENT_S * fs).round() as usize;
    let mut samples = Vec::with_capacity(total);
    let mut seg = 0u64;
    while samples.len() < total {
        let mut r = rng::rng(rng::derive(seed, &[seg]));
        let len = seg_len.min(total - samples.len()).max(1);
        let mut x = match class {
            SourceClass::Harmonic {
                f0_min,
                f0_max,
                formant_scale,
                tilt,
                ..
            } => harmonic_segment(len, fs, (*f0_min, *f0_max), *formant_scale, *tilt, &mut r),
            SourceClass::BandNoise { lo_hz, hi_hz, .. } => band_noise_segment(len, fs, *lo_hz, *hi_hz, &mut r),
        };
        normalize_rms(&mut x);
        samples.extend_from_slice(&x);
        seg += 1;
    }
    AudioSignal::new(samples, sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::stft_power;

    fn centroid(sig: &AudioSignal) -> f64 {
        let p = stft_power(sig, 0.064, 0.032).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for f in 0..p.frames {
            for (b, v) in p.frame(f).iter().enumerate() {
                num += b as f64 * v;
                den += v;
            }
        }
        num / den * sig.sample_rate() as f64 / 1024.0
    }

    #[test]
    fn low_class_centroid_below_high_class() {
        let low = SourceClass::by_name("low-f0").unwrap();
        let high = SourceClass::by_name("high-f0").unwrap();
        for seed in 0..100 {
            let a = make_source_signal(&low, 1.0, 16_000, seed).unwrap();
            let b = make_source_signal(&high, 1.0, 16_000, seed).unwrap();
            assert!(centroid(&a) < centroid(&b), "seed {seed}");
        }
    }

    #[test]
    fn duration_and_determinism() {
        let c = SourceClass::by_name("high-f0").unwrap();
        let a = make_source_signal(&c, 40.0, 16_000, 3).unwrap();
        assert_eq!(a.len(), 640_000);
        let b = make_source_signal(&c, 40.0, 16_000, 3).unwrap();
        assert_eq!(a, b);
        // Segments are independent utterances.
        assert!(a.samples()[..160_000] != a.samples()[160_000..320_000]);
    }

    #[test]
    fn unknown_class_is_error() {
        assert!(matches!(SourceClass::by_name("kazoo"), Err(Error::UnknownClass(_))));
    }

    #[test]
    fn band_noise_stays_in_band() {
        let c = SourceClass::by_name("noise-high").unwrap();
        let s = make_source_signal(&c, 1.0, 16_000, 1).unwrap();
        let p = stft_power(&s, 0.064, 0.032).unwrap();
        let (mut inband, mut total) = (0.0, 0.0);
        for f in 0..p.frames {
            for (b, v) in p.frame(f).iter().enumerate() {
                let hz = b as f64 * 16_000.0 / 1024.0;
                total += v;
                if (1900.0..=6100.0).contains(&hz) {
                    inband += v;
                }
            }
        }
        assert!(inband / total > 0.99);
    }
}
