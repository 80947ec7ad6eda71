use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

/// Affine layer `a = act(W x + b)` with `W` stored row-major as `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
    pub frozen: bool,
}

impl Layer {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
            activation,
            frozen: false,
        }
    }

    /// Glorot-uniform weights in `[-a, a]`, `a = sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot(in_dim: usize, out_dim: usize, activation: Activation, seed: u64) -> Self {
        let mut layer = Self::zeros(in_dim, out_dim, activation);
        layer.reinitialize(seed);
        layer
    }

    pub fn reinitialize(&mut self, seed: u64) {
        let a = (6.0 / (self.in_dim + self.out_dim) as f64).sqrt();
        let mut r = rng::rng(seed);
        for w in &mut self.weights {
            *w = r.random_range(-a..=a);
        }
        self.bias.iter_mut().for_each(|b| *b = 0.0);
    }

    pub fn param_count(&self) -> usize {
        self.out_dim * self.in_dim + self.out_dim
    }

    pub(crate) fn pre_activation(&self, x: &[f64], z: &mut [f64]) {
        for (o, zo) in z.iter_mut().enumerate() {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            *zo = self.bias[o] + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        }
    }
}

/// Flattened trainable parameters in canonical order: unfrozen layers by
/// index, each contributing row-major weights followed by bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatParams(pub Vec<f64>);

impl FlatParams {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNetwork {
    layers: Vec<Layer>,
}

impl DenseNetwork {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("network layers"));
        }
        for l in &layers {
            if l.weights.len() != l.in_dim * l.out_dim {
                return Err(Error::DimensionMismatch {
                    context: "layer weights",
                    expected: l.in_dim * l.out_dim,
                    actual: l.weights.len(),
                });
            }
            if l.bias.len() != l.out_dim {
                return Err(Error::DimensionMismatch {
                    context: "layer bias",
                    expected: l.out_dim,
                    actual: l.bias.len(),
                });
            }
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::DimensionMismatch {
                    context: "layer chain",
                    expected: pair[0].out_dim,
                    actual: pair[1].in_dim,
                });
            }
        }
        Ok(Self { layers })
    }

    /// Glorot-initialised network over `dims`, one activation per layer.
    pub fn glorot(dims: &[usize], activations: &[Activation], seed: u64) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::invalid(
                "dims",
                "need at least two dims and one activation per layer",
            ));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .enumerate()
            .map(|(i, (d, &act))| Layer::glorot(d[0], d[1], act, rng::derive(seed, &[i as u64])))
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer_mut(&mut self, i: usize) -> &mut Layer {
        &mut self.layers[i]
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn total_param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn trainable_param_count(&self) -> usize {
        self.layers.iter().filter(|l| !l.frozen).map(Layer::param_count).sum()
    }

    pub fn set_frozen(&mut self, layer: usize, frozen: bool) {
        self.layers[layer].frozen = frozen;
    }

    /// Freeze every layer except `layer`.
    pub fn freeze_all_except(&mut self, layer: usize) {
        for (i, l) in self.layers.iter_mut().enumerate() {
            l.frozen = i != layer;
        }
    }

    pub fn frozen_mask(&self) -> Vec<bool> {
        self.layers.iter().map(|l| l.frozen).collect()
    }

    /// Number of leading frozen layers. Their output never changes during
    /// training, so trainers evaluate it once per sample.
    pub fn frozen_prefix_len(&self) -> usize {
        self.layers.iter().take_while(|l| l.frozen).count()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.forward_from(0, input)
    }

    /// Run layers `start..` on `input`, which must match layer `start`'s input.
    pub fn forward_from(&self, start: usize, input: &[f64]) -> Result<Vec<f64>> {
        if start >= self.layers.len() {
            return Ok(input.to_vec());
        }
        let expected = self.layers[start].in_dim;
        if input.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected,
                actual: input.len(),
            });
        }
        let mut x = input.to_vec();
        for l in &self.layers[start..] {
            let mut z = vec![0.0; l.out_dim];
            l.pre_activation(&x, &mut z);
            z.iter_mut().for_each(|v| *v = l.activation.apply(*v));
            x = z;
        }
        Ok(x)
    }

    /// Output of the first `end` layers.
    pub fn forward_until(&self, end: usize, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                actual: input.len(),
            });
        }
        let mut x = input.to_vec();
        for l in &self.layers[..end.min(self.layers.len())] {
            let mut z = vec![0.0; l.out_dim];
            l.pre_activation(&x, &mut z);
            z.iter_mut().for_each(|v| *v = l.activation.apply(*v));
            x = z;
        }
        Ok(x)
    }

    pub fn flatten_trainable(&self) -> FlatParams {
        let mut v = Vec::with_capacity(self.trainable_param_count());
        for l in self.layers.iter().filter(|l| !l.frozen) {
            v.extend_from_slice(&l.weights);
            v.extend_from_slice(&l.bias);
        }
        FlatParams(v)
    }

    /// Copy of `self` with the trainable parameters replaced by `params`.
    pub fn unflatten_trainable(&self, params: &FlatParams) -> Result<Self> {
        let mut out = self.clone();
        out.set_trainable(params.as_slice())?;
        Ok(out)
    }

    pub fn set_trainable(&mut self, params: &[f64]) -> Result<()> {
        let expected = self.trainable_param_count();
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "flat trainable parameters",
                expected,
                actual: params.len(),
            });
        }
        let mut offset = 0;
        for l in self.layers.iter_mut().filter(|l| !l.frozen) {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[offset..offset + nw]);
            offset += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[offset..offset + nb]);
            offset += nb;
        }
        Ok(())
    }

    /// Add `delta` to the trainable parameters in place.
    pub fn add_to_trainable(&mut self, delta: &[f64]) -> Result<()> {
        let mut flat = self.flatten_trainable();
        if delta.len() != flat.len() {
            return Err(Error::DimensionMismatch {
                context: "trainable delta",
                expected: flat.len(),
                actual: delta.len(),
            });
        }
        flat.0.iter_mut().zip(delta).for_each(|(p, d)| *p += d);
        self.set_trainable(&flat.0)
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_forward(net: &DenseNetwork, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for l in net.layers() {
            let mut next = vec![0.0; l.out_dim];
            for o in 0..l.out_dim {
                let mut s = l.bias[o];
                for i in 0..l.in_dim {
                    s += l.weights[o * l.in_dim + i] * a[i];
                }
                next[o] = match l.activation {
                    Activation::Linear => s,
                    Activation::Relu => {
                        if s > 0.0 {
                            s
                        } else {
                            0.0
                        }
                    }
                    Activation::Sigmoid => 1.0 / (1.0 + (-s).exp()),
                };
            }
            a = next;
        }
        a
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mut l = Layer::zeros(3, 3, Activation::Linear);
        for i in 0..3 {
            l.weights[i * 3 + i] = 1.0;
        }
        let net = DenseNetwork::new(vec![l]).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.5]).unwrap(), vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn zero_weights_output_bias() {
        let mut l = Layer::zeros(2, 2, Activation::Linear);
        l.bias = vec![0.3, -0.7];
        let net = DenseNetwork::new(vec![l]).unwrap();
        assert_eq!(net.forward(&[5.0, 9.0]).unwrap(), vec![0.3, -0.7]);
    }

    #[test]
    fn three_layer_matches_naive_matmul() {
        let net = DenseNetwork::glorot(
            &[5, 7, 4, 3],
            &[Activation::Relu, Activation::Sigmoid, Activation::Linear],
            42,
        )
        .unwrap();
        let x = [0.2, -1.0, 0.5, 0.9, -0.3];
        let got = net.forward(&x).unwrap();
        for (a, b) in got.iter().zip(naive_forward(&net, &x)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_errors() {
        let net = DenseNetwork::glorot(&[3, 2], &[Activation::Linear], 1).unwrap();
        assert!(net.forward(&[1.0, 2.0]).is_err());
        assert!(DenseNetwork::new(vec![
            Layer::zeros(3, 2, Activation::Linear),
            Layer::zeros(3, 2, Activation::Linear)
        ])
        .is_err());
        assert!(net.unflatten_trainable(&FlatParams(vec![0.0; 5])).is_err());
    }

    #[test]
    fn two_by_two_layer_flattens_to_six() {
        let net = DenseNetwork::glorot(&[2, 2], &[Activation::Linear], 9).unwrap();
        assert_eq!(net.flatten_trainable().len(), 6);
    }

    #[test]
    fn canonical_order_is_weights_then_bias_per_layer() {
        let mut a = Layer::zeros(1, 2, Activation::Linear);
        a.weights = vec![1.0, 2.0];
        a.bias = vec![3.0, 4.0];
        let mut b = Layer::zeros(2, 1, Activation::Linear);
        b.weights = vec![5.0, 6.0];
        b.bias = vec![7.0];
        let mut net = DenseNetwork::new(vec![a, b]).unwrap();
        assert_eq!(net.flatten_trainable().0, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        net.set_frozen(0, true);
        assert_eq!(net.flatten_trainable().0, vec![5.0, 6.0, 7.0]);
    }

    proptest! {
        #[test]
        fn flatten_round_trips_bitwise(seed in any::<u64>(), mask in proptest::collection::vec(any::<bool>(), 3)) {
            let mut net = DenseNetwork::glorot(
                &[4, 3, 5, 2],
                &[Activation::Relu, Activation::Relu, Activation::Linear],
                seed,
            ).unwrap();
            for (i, f) in mask.iter().enumerate() {
                net.set_frozen(i, *f);
            }
            let flat = net.flatten_trainable();
            prop_assert_eq!(flat.len(), net.trainable_param_count());
            let back = net.unflatten_trainable(&flat).unwrap();
            prop_assert_eq!(back, net);
        }
    }
}
