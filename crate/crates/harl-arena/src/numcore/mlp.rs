//! Dense feed-forward network: affine layers with tanh hidden activations
//! and a linear output layer.
//!
//! Weights are row-major `(out_dim, in_dim)`. The same struct doubles as the
//! gradient container (`zeros_like` + `mlp_backward`), which keeps the
//! optimizer generic over "anything shaped like the parameters".

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::codec::{Reader, Writer};
use crate::error::{ArenaError, Result};

/// Hidden-layer activation. The output layer is always linear.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
}

/// One affine layer, `z = W x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `(out_dim, in_dim)`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Linear {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }
}

/// Parameters of a dense network with tanh hidden layers.
///
/// Invariant: consecutive layer dimensions chain (`out` of layer `k` equals
/// `in` of layer `k + 1`) and every entry is finite. [`MlpParams::new`]
/// enforces both.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Linear>,
    pub activation: Activation,
}

impl MlpParams {
    pub fn new(layers: Vec<Linear>) -> Result<Self> {
        if layers.is_empty() {
            return Err(ArenaError::Contract("network needs at least one layer".into()));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(ArenaError::shape(
                    format!("layer {} input", k + 1),
                    pair[0].out_dim,
                    pair[1].in_dim,
                ));
            }
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.weights.len() != layer.in_dim * layer.out_dim {
                return Err(ArenaError::shape(
                    format!("layer {k} weights"),
                    layer.in_dim * layer.out_dim,
                    layer.weights.len(),
                ));
            }
            if layer.bias.len() != layer.out_dim {
                return Err(ArenaError::shape(
                    format!("layer {k} bias"),
                    layer.out_dim,
                    layer.bias.len(),
                ));
            }
            if !layer.weights.iter().chain(layer.bias.iter()).all(|v| v.is_finite()) {
                return Err(ArenaError::non_finite(format!("layer {k} parameters")));
            }
        }
        Ok(MlpParams {
            layers,
            activation: Activation::Tanh,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim
    }

    /// A zero-filled parameter set with identical shapes, used as a gradient
    /// or optimizer-moment container.
    pub fn zeros_like(&self) -> MlpParams {
        MlpParams {
            layers: self
                .layers
                .iter()
                .map(|l| Linear::zeros(l.in_dim, l.out_dim))
                .collect(),
            activation: self.activation,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Visit every parameter (weights then bias, layer order) mutably,
    /// paired with the matching entry of `other`.
    pub fn for_each_with(&mut self, other: &MlpParams, mut f: impl FnMut(&mut f64, f64)) {
        for (l, o) in self.layers.iter_mut().zip(other.layers.iter()) {
            for (p, g) in l.weights.iter_mut().zip(o.weights.iter()) {
                f(p, *g);
            }
            for (p, g) in l.bias.iter_mut().zip(o.bias.iter()) {
                f(p, *g);
            }
        }
    }

    /// Sum of squares over all entries (used for global-norm gradient clips).
    pub fn squared_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| {
                l.weights.iter().map(|v| v * v).sum::<f64>()
                    + l.bias.iter().map(|v| v * v).sum::<f64>()
            })
            .sum()
    }

    pub fn scale(&mut self, s: f64) {
        for l in self.layers.iter_mut() {
            for v in l.weights.iter_mut() {
                *v *= s;
            }
            for v in l.bias.iter_mut() {
                *v *= s;
            }
        }
    }

    /// Serialize as a dimension header (layer count, then per-layer in/out)
    /// followed by the flat little-endian f64 entries, per layer weights
    /// (row-major) then bias.
    pub fn write(&self, w: &mut Writer) {
        w.put_u32(self.layers.len() as u32);
        for l in &self.layers {
            w.put_u32(l.in_dim as u32);
            w.put_u32(l.out_dim as u32);
        }
        for l in &self.layers {
            for &v in &l.weights {
                w.put_f64(v);
            }
            for &v in &l.bias {
                w.put_f64(v);
            }
        }
    }

    pub fn read(r: &mut Reader) -> Result<MlpParams> {
        let n = r.get_u32()? as usize;
        let mut dims = Vec::with_capacity(n);
        for _ in 0..n {
            let in_dim = r.get_u32()? as usize;
            let out_dim = r.get_u32()? as usize;
            dims.push((in_dim, out_dim));
        }
        let mut layers = Vec::with_capacity(n);
        for (in_dim, out_dim) in dims {
            let mut layer = Linear::zeros(in_dim, out_dim);
            for v in layer.weights.iter_mut() {
                *v = r.get_f64()?;
            }
            for v in layer.bias.iter_mut() {
                *v = r.get_f64()?;
            }
            layers.push(layer);
        }
        MlpParams::new(layers)
    }
}

/// Build a network with the given layer sizes (`dims[0]` is the input
/// width) using scaled uniform initialization: gain 1.0 on hidden layers
/// and `output_gain` on the final layer. Biases start at zero.
pub fn init_mlp(dims: &[usize], output_gain: f64, rng: &mut ChaCha8Rng) -> Result<MlpParams> {
    if dims.len() < 2 {
        return Err(ArenaError::Contract("init_mlp needs input and output dims".into()));
    }
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for k in 0..dims.len() - 1 {
        let (in_dim, out_dim) = (dims[k], dims[k + 1]);
        let gain = if k + 2 == dims.len() { output_gain } else { 1.0 };
        let limit = gain * (6.0 / (in_dim + out_dim) as f64).sqrt();
        let mut layer = Linear::zeros(in_dim, out_dim);
        for v in layer.weights.iter_mut() {
            *v = rng.gen_range(-limit..=limit);
        }
        layers.push(layer);
    }
    MlpParams::new(layers)
}

fn check_input(params: &MlpParams, input: &[f64], context: &str) -> Result<()> {
    if input.len() != params.in_dim() {
        return Err(ArenaError::shape(
            format!("{context} layer 0 input"),
            params.in_dim(),
            input.len(),
        ));
    }
    if !input.iter().all(|v| v.is_finite()) {
        return Err(ArenaError::non_finite(format!("{context} input")));
    }
    Ok(())
}

/// Forward pass. Affine + tanh through the hidden layers, linear output.
pub fn mlp_forward(params: &MlpParams, input: &[f64]) -> Result<Vec<f64>> {
    check_input(params, input, "mlp_forward")?;
    let mut act = input.to_vec();
    let last = params.layers.len() - 1;
    for (k, layer) in params.layers.iter().enumerate() {
        let mut next = layer.bias.clone();
        for (o, out) in next.iter_mut().enumerate() {
            let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
            *out += row.iter().zip(act.iter()).map(|(w, x)| w * x).sum::<f64>();
        }
        if k < last {
            for v in next.iter_mut() {
                *v = v.tanh();
            }
        }
        act = next;
    }
    Ok(act)
}

/// Reverse-mode gradients of `upstream · output` with respect to every
/// parameter and the input. The forward pass is recomputed internally.
pub fn mlp_backward(
    params: &MlpParams,
    input: &[f64],
    upstream: &[f64],
) -> Result<(MlpParams, Vec<f64>)> {
    let mut grads = params.zeros_like();
    let input_grad = mlp_backward_into(params, input, upstream, &mut grads)?;
    Ok((grads, input_grad))
}

/// Like [`mlp_backward`] but accumulates parameter gradients into `grads`,
/// so batch gradients avoid per-sample allocation of the parameter bag.
pub fn mlp_backward_into(
    params: &MlpParams,
    input: &[f64],
    upstream: &[f64],
    grads: &mut MlpParams,
) -> Result<Vec<f64>> {
    check_input(params, input, "mlp_backward")?;
    if upstream.len() != params.out_dim() {
        return Err(ArenaError::shape(
            "mlp_backward upstream",
            params.out_dim(),
            upstream.len(),
        ));
    }

    // Forward, caching each layer's input activation.
    let last = params.layers.len() - 1;
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(params.layers.len() + 1);
    acts.push(input.to_vec());
    for (k, layer) in params.layers.iter().enumerate() {
        let prev = &acts[k];
        let mut next = layer.bias.clone();
        for (o, out) in next.iter_mut().enumerate() {
            let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
            *out += row.iter().zip(prev.iter()).map(|(w, x)| w * x).sum::<f64>();
        }
        if k < last {
            for v in next.iter_mut() {
                *v = v.tanh();
            }
        }
        acts.push(next);
    }

    // Backward. `delta` is the gradient at each layer's pre-activation.
    let mut delta = upstream.to_vec();
    for k in (0..params.layers.len()).rev() {
        let layer = &params.layers[k];
        if k < last {
            // acts[k + 1] holds tanh(z); d tanh = 1 - tanh^2.
            for (d, a) in delta.iter_mut().zip(acts[k + 1].iter()) {
                *d *= 1.0 - a * a;
            }
        }
        let g = &mut grads.layers[k];
        let prev = &acts[k];
        for (o, &d) in delta.iter().enumerate() {
            let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
            for (gw, x) in row.iter_mut().zip(prev.iter()) {
                *gw += d * x;
            }
            g.bias[o] += d;
        }
        let mut prev_delta = vec![0.0; layer.in_dim];
        for (o, &d) in delta.iter().enumerate() {
            let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
            for (pd, w) in prev_delta.iter_mut().zip(row.iter()) {
                *pd += d * w;
            }
        }
        delta = prev_delta;
    }
    Ok(delta)
}
