use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Activation, DenseNetwork};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// `(input, target)`; classification targets are one-hot vectors.
pub type Sample<'a> = (&'a [f64], &'a [f64]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Mse,
    /// Softmax over the (linear) output layer followed by cross-entropy.
    SoftmaxCrossEntropy,
}

pub fn mse_loss(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::DimensionMismatch {
            context: "mse operands",
            expected: y.len(),
            actual: y_hat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::Empty("mse operands"));
    }
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64)
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

pub fn cross_entropy(target: &[f64], logits: &[f64]) -> Result<f64> {
    if target.len() != logits.len() {
        return Err(Error::DimensionMismatch {
            context: "cross-entropy operands",
            expected: target.len(),
            actual: logits.len(),
        });
    }
    let p = softmax(logits);
    Ok(-target
        .iter()
        .zip(&p)
        .map(|(t, q)| if *t == 0.0 { 0.0 } else { t * q.max(1e-300).ln() })
        .sum::<f64>())
}

impl Loss {
    pub fn value(self, target: &[f64], output: &[f64]) -> Result<f64> {
        match self {
            Loss::Mse => mse_loss(target, output),
            Loss::SoftmaxCrossEntropy => cross_entropy(target, output),
        }
    }

    /// dL/d(output) for MSE, dL/d(logits) for softmax cross-entropy.
    fn output_grad(self, target: &[f64], output: &[f64]) -> Vec<f64> {
        match self {
            Loss::Mse => {
                let n = output.len() as f64;
                output.iter().zip(target).map(|(o, t)| 2.0 * (o - t) / n).collect()
            }
            Loss::SoftmaxCrossEntropy => softmax(output).iter().zip(target).map(|(p, t)| p - t).collect(),
        }
    }
}

/// Mean batch gradient over the trainable parameters, in `flatten_trainable` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub values: Vec<f64>,
    pub loss: f64,
}

pub fn batch_loss(net: &DenseNetwork, batch: &[Sample<'_>], loss: Loss) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let mut total = 0.0;
    for (x, t) in batch {
        total += loss.value(t, &net.forward(x)?)?;
    }
    Ok(total / batch.len() as f64)
}

/// Per-layer gradient buffers for layers `lowest..`.
struct GradBuffers {
    lowest: usize,
    weights: Vec<Vec<f64>>,
    bias: Vec<Vec<f64>>,
}

impl GradBuffers {
    fn new(net: &DenseNetwork, lowest: usize) -> Self {
        let layers = &net.layers()[lowest..];
        Self {
            lowest,
            weights: layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    fn reset(&mut self) {
        self.weights
            .iter_mut()
            .for_each(|w| w.iter_mut().for_each(|v| *v = 0.0));
        self.bias.iter_mut().for_each(|w| w.iter_mut().for_each(|v| *v = 0.0));
    }
}

fn check_loss_compat(net: &DenseNetwork, loss: Loss) -> Result<()> {
    if loss == Loss::SoftmaxCrossEntropy && net.layers().last().map(|l| l.activation) != Some(Activation::Linear) {
        return Err(Error::invalid(
            "loss",
            "softmax cross-entropy needs a linear output layer",
        ));
    }
    Ok(())
}

/// Forward from layer `start` with `x` as that layer's input, then backprop,
/// accumulating gradients for unfrozen layers into `grads`. Returns the loss.
fn accumulate(
    net: &DenseNetwork,
    start: usize,
    x: &[f64],
    target: &[f64],
    loss: Loss,
    grads: &mut GradBuffers,
) -> Result<f64> {
    let layers = net.layers();
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers.len() - start + 1);
    let mut pre: Vec<Vec<f64>> = Vec::with_capacity(layers.len() - start);
    acts.push(x.to_vec());
    for l in &layers[start..] {
        let mut z = vec![0.0; l.out_dim];
        l.pre_activation(acts.last().unwrap(), &mut z);
        let a: Vec<f64> = z.iter().map(|&v| l.activation.apply(v)).collect();
        pre.push(z);
        acts.push(a);
    }
    let output = acts.last().unwrap();
    if target.len() != output.len() {
        return Err(Error::DimensionMismatch {
            context: "training target",
            expected: output.len(),
            actual: target.len(),
        });
    }
    let value = loss.value(target, output)?;
    let mut upstream = loss.output_grad(target, output);
    let last_is_logits = loss == Loss::SoftmaxCrossEntropy;
    for li in (grads.lowest..layers.len()).rev() {
        let l = &layers[li];
        let k = li - start;
        let dz: Vec<f64> = if last_is_logits && li == layers.len() - 1 {
            upstream.clone()
        } else {
            upstream
                .iter()
                .zip(&pre[k])
                .zip(&acts[k + 1])
                .map(|((g, &z), &a)| g * l.activation.derivative(z, a))
                .collect()
        };
        let g = li - grads.lowest;
        if !l.frozen {
            let input = &acts[k];
            let gw = &mut grads.weights[g];
            for (o, &d) in dz.iter().enumerate() {
                if d != 0.0 {
                    let row = &mut gw[o * l.in_dim..(o + 1) * l.in_dim];
                    row.iter_mut().zip(input).for_each(|(w, xi)| *w += d * xi);
                }
                grads.bias[g][o] += d;
            }
        }
        if li > grads.lowest {
            let mut down = vec![0.0; l.in_dim];
            for (o, &d) in dz.iter().enumerate() {
                if d != 0.0 {
                    let row = &l.weights[o * l.in_dim..(o + 1) * l.in_dim];
                    down.iter_mut().zip(row).for_each(|(u, w)| *u += d * w);
                }
            }
            upstream = down;
        }
    }
    Ok(value)
}

fn lowest_trainable(net: &DenseNetwork) -> Option<usize> {
    net.layers().iter().position(|l| !l.frozen)
}

pub fn gradient(net: &DenseNetwork, batch: &[Sample<'_>], loss: Loss) -> Result<Gradient> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    check_loss_compat(net, loss)?;
    let Some(lowest) = lowest_trainable(net) else {
        return Ok(Gradient {
            values: Vec::new(),
            loss: batch_loss(net, batch, loss)?,
        });
    };
    let mut grads = GradBuffers::new(net, lowest);
    let mut total = 0.0;
    for (x, t) in batch {
        if x.len() != net.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: net.input_dim(),
                actual: x.len(),
            });
        }
        let h = net.forward_until(lowest, x)?;
        total += accumulate(net, lowest, &h, t, loss, &mut grads)?;
    }
    let n = batch.len() as f64;
    let mut values = Vec::with_capacity(net.trainable_param_count());
    for (g, l) in net.layers()[lowest..].iter().enumerate() {
        if !l.frozen {
            values.extend(grads.weights[g].iter().map(|v| v / n));
            values.extend(grads.bias[g].iter().map(|v| v / n));
        }
    }
    Ok(Gradient {
        values,
        loss: total / n,
    })
}

/// One SGD step on the mean batch gradient; frozen layers are left untouched.
pub fn sgd_step(net: &DenseNetwork, batch: &[Sample<'_>], lr: f64, loss: Loss) -> Result<DenseNetwork> {
    if !(lr > 0.0) {
        return Err(Error::invalid("lr", "learning rate must be positive"));
    }
    let g = gradient(net, batch, loss)?;
    let mut out = net.clone();
    if g.values.is_empty() {
        return Ok(out);
    }
    let step: Vec<f64> = g.values.iter().map(|v| -lr * v).collect();
    out.add_to_trainable(&step)?;
    Ok(out)
}

/// Mini-batch SGD over pre-computed inputs of layer `start`. Every layer
/// below `start` must be frozen. Returns the mean training loss.
#[allow(clippy::too_many_arguments)]
pub(crate) fn sgd_epoch_from(
    net: &mut DenseNetwork,
    start: usize,
    inputs: &[Vec<f64>],
    targets: &[&[f64]],
    batch_size: usize,
    lr: f64,
    loss: Loss,
    rng: &mut SimRng,
) -> Result<f64> {
    debug_assert_eq!(inputs.len(), targets.len());
    debug_assert!(net.layers()[..start].iter().all(|l| l.frozen));
    let Some(lowest) = lowest_trainable(net) else {
        return Ok(0.0);
    };
    let lowest = lowest.max(start);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    order.shuffle(rng);
    let mut grads = GradBuffers::new(net, lowest);
    let mut total = 0.0;
    for chunk in order.chunks(batch_size.max(1)) {
        grads.reset();
        for &i in chunk {
            let h = if lowest > start {
                let mut x = inputs[i].clone();
                for l in &net.layers()[start..lowest] {
                    let mut z = vec![0.0; l.out_dim];
                    l.pre_activation(&x, &mut z);
                    x = z.into_iter().map(|v| l.activation.apply(v)).collect();
                }
                x
            } else {
                inputs[i].clone()
            };
            total += accumulate(net, lowest, &h, targets[i], loss, &mut grads)?;
        }
        let scale = lr / chunk.len() as f64;
        for (g, li) in (lowest..net.layers().len()).enumerate() {
            let layer = net.layer_mut(li);
            if layer.frozen {
                continue;
            }
            layer
                .weights
                .iter_mut()
                .zip(&grads.weights[g])
                .for_each(|(w, d)| *w -= scale * d);
            layer
                .bias
                .iter_mut()
                .zip(&grads.bias[g])
                .for_each(|(b, d)| *b -= scale * d);
        }
    }
    Ok(total / inputs.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Layer;

    #[test]
    fn mse_basics() {
        assert_eq!(mse_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(mse_loss(&[0.0], &[1.0, 1.0]).is_err());
        let y: Vec<f64> = (0..17).map(|i| (i as f64 * 0.37).sin()).collect();
        let z: Vec<f64> = (0..17).map(|i| (i as f64 * 0.11).cos()).collect();
        let mut brute = 0.0;
        for i in 0..17 {
            brute += (y[i] - z[i]) * (y[i] - z[i]);
        }
        assert!((mse_loss(&y, &z).unwrap() - brute / 17.0).abs() < 1e-12);
    }

    #[test]
    fn single_weight_step() {
        let l = Layer::zeros(1, 1, Activation::Linear);
        let net = DenseNetwork::new(vec![l]).unwrap();
        let (x, t) = ([1.0], [1.0]);
        // MSE over a single output is (w + b - 1)².
        let next = sgd_step(&net, &[(&x, &t)], 0.1, Loss::Mse).unwrap();
        assert!((next.layers()[0].weights[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn all_frozen_is_noop() {
        let mut net = DenseNetwork::glorot(&[3, 4, 2], &[Activation::Relu, Activation::Linear], 5).unwrap();
        net.set_frozen(0, true);
        net.set_frozen(1, true);
        let (x, t) = ([0.1, 0.2, 0.3], [1.0, -1.0]);
        let next = sgd_step(&net, &[(&x, &t)], 0.5, Loss::Mse).unwrap();
        assert_eq!(next, net);
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1000.0, -3.0, 2.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[0] > 0.99);
    }

    #[test]
    fn zero_lr_rejected() {
        let net = DenseNetwork::glorot(&[1, 1], &[Activation::Linear], 0).unwrap();
        assert!(sgd_step(&net, &[(&[1.0], &[1.0])], 0.0, Loss::Mse).is_err());
        assert!(sgd_step(&net, &[], 0.1, Loss::Mse).is_err());
    }
}
