use crate::error::{Error, Result};

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters equally spaced on the mel scale over `0..sample_rate/2`.
///
/// Each weight is the mean of the triangle over the frequency interval a bin
/// represents (`[bΔ − Δ/2, bΔ + Δ/2]`). Adjacent triangles form a partition of
/// unity, so column sums never exceed 1, and even filters narrower than a bin
/// keep nonzero support.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    pub bands: usize,
    pub bins: usize,
    /// Row-major `bands × bins`.
    pub weights: Vec<f64>,
    pub centers_hz: Vec<f64>,
    pub edges_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn band(&self, k: usize) -> &[f64] {
        &self.weights[k * self.bins..(k + 1) * self.bins]
    }

    /// Band energies for one power frame.
    pub fn apply(&self, power: &[f64], out: &mut [f64]) {
        debug_assert_eq!(power.len(), self.bins);
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.band(k).iter().zip(power).map(|(w, p)| w * p).sum();
        }
    }
}

/// Cumulative area of the unit-peak triangle `(lo, center, hi)` up to `f`.
fn triangle_cdf(lo: f64, center: f64, hi: f64, f: f64) -> f64 {
    if f <= lo {
        0.0
    } else if f <= center {
        (f - lo).powi(2) / (2.0 * (center - lo))
    } else if f <= hi {
        (hi - lo) / 2.0 - (hi - f).powi(2) / (2.0 * (hi - center))
    } else {
        (hi - lo) / 2.0
    }
}

pub fn mel_filterbank(bins: usize, band_count: usize, sample_rate: u32) -> Result<MelFilterbank> {
    if band_count == 0 {
        return Err(Error::invalid("band_count", "must be at least 1"));
    }
    if bins < 2 {
        return Err(Error::invalid("bins", "need at least 2 frequency bins"));
    }
    if band_count > bins {
        return Err(Error::invalid(
            "band_count",
            format!("{band_count} bands exceed {bins} bins"),
        ));
    }
    let nyquist = sample_rate as f64 / 2.0;
    let mel_max = hz_to_mel(nyquist);
    let edges_hz: Vec<f64> = (0..band_count + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (band_count + 1) as f64))
        .collect();
    let delta = nyquist / (bins - 1) as f64;
    let mut weights = vec![0.0; band_count * bins];
    for k in 0..band_count {
        let (lo, c, hi) = (edges_hz[k], edges_hz[k + 1], edges_hz[k + 2]);
        for b in 0..bins {
            let f = b as f64 * delta;
            let a = f - delta / 2.0;
            let z = f + delta / 2.0;
            if z <= lo || a >= hi {
                continue;
            }
            weights[k * bins + b] = (triangle_cdf(lo, c, hi, z) - triangle_cdf(lo, c, hi, a)) / delta;
        }
    }
    Ok(MelFilterbank {
        bands: band_count,
        bins,
        weights,
        centers_hz: edges_hz[1..=band_count].to_vec(),
        edges_hz,
    })
}
