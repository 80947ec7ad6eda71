use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::geometry::{Point, Room, SPEED_OF_SOUND};
use crate::rng;

/// Minimum distance used for the direct-path amplitude.
const NEAR_FIELD_M: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rir {
    pub taps: Vec<f64>,
    pub first_peak_delay_s: f64,
    pub source_id: usize,
    pub node_id: usize,
    /// Index of the direct-path tap.
    pub direct_index: usize,
}

impl Rir {
    pub fn direct_energy(&self) -> f64 {
        self.taps[self.direct_index].powi(2)
    }

    pub fn tail_energy(&self) -> f64 {
        self.taps[self.direct_index + 1..].iter().map(|t| t * t).sum()
    }

    /// Direct-to-reverberant ratio in dB.
    pub fn drr_db(&self) -> f64 {
        10.0 * (self.direct_energy() / self.tail_energy()).log10()
    }

    pub fn scaled(mut self, gain: f64) -> Self {
        self.taps.iter_mut().for_each(|t| *t *= gain);
        self
    }
}

/// Stochastic RIR: a direct-path delta at `d / c` with amplitude
/// `1 / max(d, 0.1)`, followed by seeded Gaussian noise under the envelope
/// `exp(-t · 3 ln 10 / T60)` lasting one T60. The tail is scaled so that the
/// direct-to-reverberant energy ratio equals `(d_c / d)²`.
pub fn synthesize_rir(room: &Room, source: Point, node: Point, sample_rate: u32, seed: u64) -> Rir {
    let fs = sample_rate as f64;
    let d = source.distance(node);
    let delay = (d / SPEED_OF_SOUND * fs).round() as usize;
    let d_eff = d.max(NEAR_FIELD_M);
    let direct = 1.0 / d_eff;
    let tail_len = (room.t60_s * fs).round().max(1.0) as usize;
    let decay = 3.0 * 10f64.ln() / room.t60_s;

    let mut r = rng::rng(seed);
    let mut tail: Vec<f64> = (0..tail_len)
        .map(|k| {
            let n: f64 = StandardNormal.sample(&mut r);
            n * (-decay * (k + 1) as f64 / fs).exp()
        })
        .collect();
    let raw: f64 = tail.iter().map(|t| t * t).sum();
    let dc = room.critical_distance();
    let target = direct * direct * (d_eff / dc).powi(2);
    if raw > 0.0 {
        let g = (target / raw).sqrt();
        tail.iter_mut().for_each(|t| *t *= g);
    }

    let mut taps = vec![0.0; delay + 1 + tail_len];
    taps[delay] = direct;
    taps[delay + 1..].copy_from_slice(&tail);
    Rir {
        taps,
        first_peak_delay_s: d / SPEED_OF_SOUND,
        source_id: 0,
        node_id: 0,
        direct_index: delay,
    }
}
