//! Small fully connected network with hand-written gradients.
//!
//! Three ReLU hidden layers feed a scalar pre-activation `z`, which is squashed
//! into the ratio bounds by `g = nu + (mu - nu) * (tanh(z) + 1) / 2`.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    /// Weights uniform in `+-sqrt(6 / fan_in)`, zero biases.
    fn he_uniform(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        let bound = (6.0 / inputs as f64).sqrt();
        let mut layer = Layer::zeros(inputs, outputs);
        for w in &mut layer.weights {
            *w = rng.random_range(-bound..bound);
        }
        layer
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.biases[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    /// Three hidden layers followed by the scalar output layer.
    pub layers: Vec<Layer>,
    pub nu: f64,
    pub mu: f64,
}

pub fn check_bounds(nu: f64, mu: f64) -> Result<()> {
    if nu > 0.0 && nu < 1.0 && mu > 1.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!(
            "ratio bounds need 0 < nu < 1 < mu, got nu={nu}, mu={mu}"
        )))
    }
}

impl MlpParams {
    pub fn zeros(input: usize, hidden: [usize; 3], nu: f64, mu: f64) -> Result<Self> {
        check_bounds(nu, mu)?;
        if input == 0 || hidden.contains(&0) {
            return Err(Error::arg("layer sizes must be positive"));
        }
        let sizes = [input, hidden[0], hidden[1], hidden[2], 1];
        let layers = sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Ok(MlpParams { layers, nu, mu })
    }

    /// He-uniform hidden layers. The output layer starts at zero weights with
    /// the bias that makes `g == 1` everywhere, the ratio of two identical
    /// distributions.
    pub fn init(input: usize, hidden: [usize; 3], nu: f64, mu: f64, rng: &mut Rng) -> Result<Self> {
        let mut p = MlpParams::zeros(input, hidden, nu, mu)?;
        for i in 0..3 {
            let (a, b) = (p.layers[i].inputs, p.layers[i].outputs);
            p.layers[i] = Layer::he_uniform(a, b, rng);
        }
        p.layers[3].biases[0] = p.neutral_bias();
        Ok(p)
    }

    /// Pre-activation at which the output equals one.
    pub fn neutral_bias(&self) -> f64 {
        (2.0 * (1.0 - self.nu) / (self.mu - self.nu) - 1.0).atanh()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn hidden(&self) -> [usize; 3] {
        [self.layers[0].outputs, self.layers[1].outputs, self.layers[2].outputs]
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Parameters in file order: layer by layer, row-major weights then biases.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            v.extend_from_slice(&l.weights);
            v.extend_from_slice(&l.biases);
        }
        v
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.n_params() {
            return Err(Error::Dimension {
                expected: self.n_params(),
                got: values.len(),
            });
        }
        let mut it = values.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w = it.next().unwrap();
            }
        }
        Ok(())
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases))
            .map(|w| w * w)
            .sum()
    }

    pub fn squash(&self, z: f64) -> f64 {
        (self.nu + (self.mu - self.nu) * (z.tanh() + 1.0) / 2.0).clamp(self.nu, self.mu)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Forward pass keeping intermediate activations in `ws`. Returns `g(x)`.
    pub fn forward_into(&self, x: &[f64], ws: &mut Workspace) -> Result<f64> {
        self.check_input(x)?;
        ws.input.clear();
        ws.input.extend_from_slice(x);
        ws.hidden.resize_with(3, Vec::new);
        let mut pre = Vec::new();
        for i in 0..3 {
            let src = if i == 0 { &ws.input } else { &ws.hidden[i - 1] };
            self.layers[i].apply(src, &mut pre);
            for v in &mut pre {
                *v = v.max(0.0);
            }
            std::mem::swap(&mut ws.hidden[i], &mut pre);
        }
        self.layers[3].apply(&ws.hidden[2], &mut pre);
        ws.z = pre[0];
        Ok(self.squash(ws.z))
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.forward_into(x, &mut Workspace::default())
    }

    /// Adds `upstream * dg/dparam` to `grad`, using the activations left in
    /// `ws` by the preceding [`MlpParams::forward_into`].
    pub fn backward_into(&self, ws: &Workspace, upstream: f64, grad: &mut GradientBuffer) {
        if upstream == 0.0 {
            return;
        }
        let t = ws.z.tanh();
        let mut delta = vec![upstream * (self.mu - self.nu) / 2.0 * (1.0 - t * t)];
        for i in (0..4).rev() {
            let layer = &self.layers[i];
            let input = if i == 0 { &ws.input } else { &ws.hidden[i - 1] };
            let g = &mut grad.layers[i];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (w, v) in row.iter_mut().zip(input) {
                    *w += d * v;
                }
            }
            if i == 0 {
                break;
            }
            // Propagate through the weights, then the ReLU of the layer below.
            let mut next = vec![0.0; layer.inputs];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (n, w) in next.iter_mut().zip(row) {
                    *n += d * w;
                }
            }
            for (n, a) in next.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *n = 0.0;
                }
            }
            delta = next;
        }
    }
}

/// Scratch space for one forward/backward pass.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    input: Vec<f64>,
    hidden: Vec<Vec<f64>>,
    z: f64,
}

impl Workspace {
    pub fn pre_activation(&self) -> f64 {
        self.z
    }

    pub fn hidden(&self, layer: usize) -> &[f64] {
        &self.hidden[layer]
    }
}

/// Per-parameter accumulator with the same shape as an [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBuffer {
    pub layers: Vec<Layer>,
}

impl GradientBuffer {
    pub fn zeros_like(p: &MlpParams) -> Self {
        GradientBuffer {
            layers: p.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w *= k;
            }
        }
    }

    /// `self += k * params`, used for the L2 regulariser.
    pub fn add_params(&mut self, p: &MlpParams, k: f64) {
        for (g, l) in self.layers.iter_mut().zip(&p.layers) {
            for (a, b) in g.weights.iter_mut().zip(&l.weights) {
                *a += k * b;
            }
            for (a, b) in g.biases.iter_mut().zip(&l.biases) {
                *a += k * b;
            }
        }
    }

    pub fn is_congruent(&self, p: &MlpParams) -> bool {
        self.layers.len() == p.layers.len()
            && self
                .layers
                .iter()
                .zip(&p.layers)
                .all(|(g, l)| g.weights.len() == l.weights.len() && g.biases.len() == l.biases.len())
    }
}

pub fn mlp_forward(params: &MlpParams, x: &[f64]) -> Result<f64> {
    params.forward(x)
}

/// `upstream * dg(x)/dparam` for every parameter.
pub fn mlp_backward(params: &MlpParams, x: &[f64], upstream: f64) -> Result<GradientBuffer> {
    let mut ws = Workspace::default();
    params.forward_into(x, &mut ws)?;
    let mut grad = GradientBuffer::zeros_like(params);
    params.backward_into(&ws, upstream, &mut grad);
    Ok(grad)
}

/// `params -= lr * grads`. A non-finite gradient leaves `params` untouched.
pub fn sgd_update(params: &mut MlpParams, grads: &GradientBuffer, lr: f64) -> Result<()> {
    if !grads.is_congruent(params) {
        return Err(Error::arg("gradient shape does not match parameters"));
    }
    if grads
        .layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.biases))
        .any(|g| !g.is_finite())
    {
        return Err(Error::TrainingDiverged {
            iteration: 0,
            reason: "non-finite gradient".into(),
        });
    }
    for (l, g) in params.layers.iter_mut().zip(&grads.layers) {
        for (w, d) in l.weights.iter_mut().zip(&g.weights) {
            *w -= lr * d;
        }
        for (b, d) in l.biases.iter_mut().zip(&g.biases) {
            *b -= lr * d;
        }
    }
    Ok(())
}
