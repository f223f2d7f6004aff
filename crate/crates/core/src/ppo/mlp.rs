//! Fully connected tanh network over a flat parameter slice.
//!
//! Layer `l` stores its weights row-major (`out x in`) followed by its
//! biases. Hidden layers use tanh, the output layer is linear.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpShape {
    /// `[input, hidden..., output]`.
    pub sizes: Vec<usize>,
}

/// Per-layer activations from a forward pass; `acts[0]` is the input.
#[derive(Debug, Clone)]
pub struct MlpCache {
    pub acts: Vec<Vec<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("non-empty cache")
    }
}

impl MlpShape {
    pub fn new(input: usize, hidden: &[usize], output: usize) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        Self { sizes }
    }

    pub fn input(&self) -> usize {
        self.sizes[0]
    }

    pub fn output(&self) -> usize {
        *self.sizes.last().expect("non-empty shape")
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn n_params(&self) -> usize {
        self.sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    fn offsets(&self, layer: usize) -> (usize, usize, usize) {
        let start: usize = self.sizes.windows(2).take(layer).map(|w| w[1] * w[0] + w[1]).sum();
        let (n_in, n_out) = (self.sizes[layer], self.sizes[layer + 1]);
        (start, start + n_out * n_in, start + n_out * n_in + n_out)
    }

    /// Uniform `±gain * sqrt(6 / (in + out))` weights, zero biases.
    /// `output_gain` rescales the last layer.
    pub fn init(&self, rng: &mut impl Rng, output_gain: f64) -> Vec<f64> {
        let mut params = vec![0.0; self.n_params()];
        for l in 0..self.n_layers() {
            let (w0, b0, _) = self.offsets(l);
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let gain = if l + 1 == self.n_layers() { output_gain } else { 1.0 };
            let bound = gain * (6.0 / (n_in + n_out) as f64).sqrt();
            if bound > 0.0 {
                for p in &mut params[w0..b0] {
                    *p = rng.random_range(-bound..bound);
                }
            }
        }
        params
    }

    pub fn forward(&self, params: &[f64], x: &[f64]) -> MlpCache {
        debug_assert_eq!(params.len(), self.n_params());
        debug_assert_eq!(x.len(), self.input());
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(x.to_vec());
        for l in 0..self.n_layers() {
            let (w0, b0, _) = self.offsets(l);
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let input = &acts[l];
            let last = l + 1 == self.n_layers();
            let out: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &params[w0 + o * n_in..w0 + (o + 1) * n_in];
                    let z = row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>() + params[b0 + o];
                    if last {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            acts.push(out);
        }
        MlpCache { acts }
    }

    /// Accumulate `d loss / d params` into `grads` given `d loss / d output`.
    pub fn backward(&self, params: &[f64], cache: &MlpCache, d_out: &[f64], grads: &mut [f64]) {
        let mut delta = d_out.to_vec();
        for l in (0..self.n_layers()).rev() {
            let (w0, b0, _) = self.offsets(l);
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let input = &cache.acts[l];
            let mut d_in = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                grads[b0 + o] += d;
                let base = w0 + o * n_in;
                for k in 0..n_in {
                    grads[base + k] += d * input[k];
                    d_in[k] += params[base + k] * d;
                }
            }
            if l > 0 {
                // Input to this layer is a tanh activation.
                for (dk, a) in d_in.iter_mut().zip(input) {
                    *dk *= 1.0 - a * a;
                }
            }
            delta = d_in;
        }
    }
}
