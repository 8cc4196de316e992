//! Fully connected network with tanh hidden layers and a linear head, stored
//! as one flat `f64` buffer.
//!
//! Layout per layer: the `out × in` weight matrix in row-major order followed
//! by the `out` biases. Layers are concatenated input to output.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "MlpRepr", try_from = "MlpRepr")]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
    generation: u64,
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.sizes == other.sizes && self.params == other.params
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpRepr {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

impl From<Mlp> for MlpRepr {
    fn from(m: Mlp) -> Self {
        Self {
            sizes: m.sizes,
            params: m.params,
        }
    }
}

impl TryFrom<MlpRepr> for Mlp {
    type Error = Error;

    fn try_from(r: MlpRepr) -> Result<Self> {
        Mlp::from_parts(r.sizes, r.params)
    }
}

/// Activations recorded by [`Mlp::forward`] for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct Cache {
    /// `activations[0]` is the input, `activations[l + 1]` the output of layer `l`.
    activations: Vec<Vec<f64>>,
    generation: u64,
}

impl Cache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::config("layer_sizes", "need at least two non-zero layer sizes"));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; param_count(sizes)],
            generation: 0,
        })
    }

    /// Uniform Glorot initialisation; the output layer is scaled by `head_scale`.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], head_scale: f64, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let n_layers = sizes.len() - 1;
        let mut offset = 0;
        for l in 0..n_layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let mut limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            if l + 1 == n_layers {
                limit *= head_scale;
            }
            for w in &mut net.params[offset..offset + fan_in * fan_out] {
                *w = rng.random_range(-limit..=limit);
            }
            offset += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    pub fn from_parts(sizes: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::format("sizes", "need at least two non-zero layer sizes"));
        }
        let mut net = Self::zeros(&sizes)?;
        if params.len() != net.params.len() {
            return Err(Error::format(
                "params",
                format!("expected {} values for layers {:?}, found {}", net.params.len(), sizes, params.len()),
            ));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::format("params", "contains non-finite values"));
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty sizes")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable access; invalidates outstanding caches.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.generation += 1;
        &mut self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Cache> {
        let mut cache = Cache::default();
        self.forward_into(input, &mut cache)?;
        Ok(cache)
    }

    /// Forward pass reusing the buffers of `cache`.
    pub fn forward_into(&self, input: &[f64], cache: &mut Cache) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::usage(format!(
                "network input has {} entries, expected {}",
                input.len(),
                self.input_dim()
            )));
        }
        let n_layers = self.sizes.len() - 1;
        cache.activations.resize_with(n_layers + 1, Vec::new);
        cache.activations[0].clear();
        cache.activations[0].extend_from_slice(input);
        let mut offset = 0;
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let (head, tail) = cache.activations.split_at_mut(l + 1);
            let x = &head[l];
            let y = &mut tail[0];
            y.clear();
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut s = b[o];
                for (wi, xi) in row.iter().zip(x.iter()) {
                    s += wi * xi;
                }
                y.push(if l + 1 < n_layers { s.tanh() } else { s });
            }
            offset += n_in * n_out + n_out;
        }
        cache.generation = self.generation;
        Ok(())
    }

    /// Adds `∂(grad_out · output)/∂params` into `grads`.
    pub fn backward(&self, cache: &Cache, grad_out: &[f64], grads: &mut [f64]) -> Result<()> {
        let n_layers = self.sizes.len() - 1;
        if cache.generation != self.generation || cache.activations.len() != n_layers + 1 {
            return Err(Error::usage("stale activation cache: parameters changed since forward"));
        }
        if grad_out.len() != self.output_dim() || grads.len() != self.params.len() {
            return Err(Error::usage("gradient buffer dimensions do not match the network"));
        }
        let mut delta = grad_out.to_vec();
        let mut offset_end = self.params.len();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let offset = offset_end - (n_in * n_out + n_out);
            if l + 1 < n_layers {
                // tanh' = 1 - y²
                for (d, y) in delta.iter_mut().zip(&cache.activations[l + 1]) {
                    *d *= 1.0 - y * y;
                }
            }
            let x = &cache.activations[l];
            let (gw, gb) = grads[offset..offset_end].split_at_mut(n_in * n_out);
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                for (g, xi) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(x) {
                    *g += d * xi;
                }
            }
            if l > 0 {
                let w = &self.params[offset..offset + n_in * n_out];
                let mut prev = vec![0.0; n_in];
                for o in 0..n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    for (p, wi) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *p += d * wi;
                    }
                }
                delta = prev;
            }
            offset_end = offset;
        }
        Ok(())
    }
}
