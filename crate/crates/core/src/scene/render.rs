use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::rir::{synthesize_rir, Rir};
use super::source::{make_source_signal, SourceClass};
use super::template::Scene;
use crate::dsp::AudioSignal;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng;

/// Overlap-add FFT convolution of `x` with `h`, truncated to `out_len` samples.
pub fn fft_convolve(x: &[f64], h: &[f64], out_len: usize) -> Vec<f64> {
    let mut out = vec![0.0; out_len];
    if x.is_empty() || h.is_empty() || out_len == 0 {
        return out;
    }
    let n = (2 * h.len()).next_power_of_two().max(1024);
    let block = n - h.len() + 1;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut hf: Vec<Complex<f64>> = h.iter().map(|&v| Complex::new(v, 0.0)).collect();
    hf.resize(n, Complex::new(0.0, 0.0));
    fwd.process(&mut hf);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let usable = x.len().min(out_len);
    let scale = 1.0 / n as f64;
    let mut start = 0;
    while start < usable {
        let end = (start + block).min(usable);
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (slot, &v) in buf.iter_mut().zip(&x[start..end]) {
            slot.re = v;
        }
        fwd.process(&mut buf);
        buf.iter_mut().zip(&hf).for_each(|(a, b)| *a *= b);
        inv.process(&mut buf);
        let stop = (start + n).min(out_len);
        for (o, c) in out[start..stop].iter_mut().zip(&buf) {
            *o += c.re * scale;
        }
        start = end;
    }
    out
}

/// `rirs[source][node]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RirSet {
    pub rirs: Vec<Vec<Rir>>,
}

impl RirSet {
    /// One RIR per (source, node) pair, generated with the receiving room's
    /// T60 and scaled by the wall insertion loss between the two rooms.
    pub fn synthesize(scene: &Scene, seed: u64, exec: Execution) -> Self {
        let pairs: Vec<(usize, usize)> = (0..scene.sources.len())
            .flat_map(|s| (0..scene.nodes.len()).map(move |n| (s, n)))
            .collect();
        let flat = exec.map(&pairs, |&(s, n)| {
            let node = &scene.nodes[n];
            let mut rir = synthesize_rir(
                &scene.rooms[node.room],
                scene.sources[s].position,
                node.position,
                scene.sample_rate,
                rng::derive(seed, &[s as u64, n as u64]),
            )
            .scaled(scene.path_gain(s, n));
            rir.source_id = scene.sources[s].id;
            rir.node_id = node.id;
            rir
        });
        let m = scene.nodes.len();
        Self {
            rirs: flat.chunks(m).map(<[Rir]>::to_vec).collect(),
        }
    }

    pub fn get(&self, source: usize, node: usize) -> &Rir {
        &self.rirs[source][node]
    }

    /// Source whose RIR to `node` has the shortest first-peak delay.
    pub fn nearest_source(&self, node: usize) -> usize {
        (0..self.rirs.len())
            .min_by(|&a, &b| {
                self.rirs[a][node]
                    .first_peak_delay_s
                    .total_cmp(&self.rirs[b][node].first_peak_delay_s)
            })
            .unwrap_or(0)
    }
}

/// `x_i = Σ_z s_z * g_{z,i}`, truncated to `duration_s`.
pub fn render_node_signals(
    scene: &Scene,
    rirs: &RirSet,
    sources: &[AudioSignal],
    duration_s: f64,
    exec: Execution,
) -> Result<Vec<AudioSignal>> {
    if sources.len() != scene.sources.len() || rirs.rirs.len() != sources.len() {
        return Err(Error::DimensionMismatch {
            context: "source signals",
            expected: scene.sources.len(),
            actual: sources.len(),
        });
    }
    let len = (duration_s * scene.sample_rate as f64).round() as usize;
    if let Some(short) = sources.iter().position(|s| s.len() < len) {
        return Err(Error::invalid(
            "sources",
            format!("source {short} is shorter than {duration_s} s"),
        ));
    }
    let nodes: Vec<usize> = (0..scene.nodes.len()).collect();
    let out = exec.map(&nodes, |&n| {
        let mut acc = vec![0.0; len];
        for (z, s) in sources.iter().enumerate() {
            let y = fft_convolve(s.samples(), &rirs.get(z, n).taps, len);
            acc.iter_mut().zip(&y).for_each(|(a, v)| *a += v);
        }
        AudioSignal::new(acc, scene.sample_rate)
    });
    out.into_iter().collect()
}

#[derive(Debug, Clone)]
pub struct RenderedScene {
    pub sources: Vec<AudioSignal>,
    pub rirs: RirSet,
    pub nodes: Vec<AudioSignal>,
}

/// Source signals, RIRs and node signals for `scene`, all derived from `seed`.
pub fn render_scene(scene: &Scene, duration_s: f64, seed: u64, exec: Execution) -> Result<RenderedScene> {
    scene.validate()?;
    let classes = scene
        .sources
        .iter()
        .map(|s| SourceClass::by_name(&s.class))
        .collect::<Result<Vec<_>>>()?;
    let src_seed = rng::derive_str(seed, "sources");
    let sources = exec
        .map_indexed(classes.len(), |z| {
            make_source_signal(
                &classes[z],
                duration_s,
                scene.sample_rate,
                rng::derive(src_seed, &[z as u64]),
            )
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let rirs = RirSet::synthesize(scene, rng::derive_str(seed, "rir"), exec);
    let nodes = render_node_signals(scene, &rirs, &sources, duration_s, exec)?;
    Ok(RenderedScene { sources, rirs, nodes })
}
