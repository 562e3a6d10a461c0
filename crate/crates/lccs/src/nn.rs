//! Minimal dense feed-forward networks with reverse-mode gradients and an
//! Adam optimizer. Hidden layers are rectified-linear; the output head is
//! either linear (critics) or tanh-bounded per output (actor). Everything
//! is 64-bit and deterministic for a given seed.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Output head of an [`Mlp`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Head {
    Linear,
    /// Per-output `[lo, hi]` bounds: raw output `o` maps to
    /// `lo + (hi - lo) * (tanh(o) + 1) / 2`.
    Bounded(Vec<(f64, f64)>),
}

/// One dense layer, `w[out][in]` plus bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl Layer {
    fn zeros_like(&self) -> Layer {
        Layer {
            w: self.w.iter().map(|r| vec![0.0; r.len()]).collect(),
            b: vec![0.0; self.b.len()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub layers: Vec<Layer>,
    pub head: Head,
}

/// Per-parameter gradients, shaped like the network's layers.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            layers: net.layers.iter().map(Layer::zeros_like).collect(),
        }
    }

    pub fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            for r in &mut l.w {
                for v in r {
                    *v *= k;
                }
            }
            for v in &mut l.b {
                *v *= k;
            }
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (ra, rb) in a.w.iter_mut().zip(&b.w) {
                for (va, vb) in ra.iter_mut().zip(rb) {
                    *va += vb;
                }
            }
            for (va, vb) in a.b.iter_mut().zip(&b.b) {
                *va += vb;
            }
        }
    }
}

/// Cached activations from a forward pass, needed by [`Mlp::backward`].
#[derive(Clone, Debug)]
pub struct Trace {
    /// Input to each layer (activations[0] is the network input).
    activations: Vec<Vec<f64>>,
    /// Raw (pre-head) output of the final layer.
    raw_out: Vec<f64>,
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

impl Mlp {
    /// Randomly initialized network; weights uniform in
    /// `+-1/sqrt(fan_in)`, biases zero.
    pub fn new(sizes: &[usize], head: Head, seed: u64) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::ShapeMismatch(format!(
                "need at least input and output sizes, got {sizes:?}"
            )));
        }
        if let Head::Bounded(b) = &head {
            if b.len() != *sizes.last().unwrap() {
                return Err(Error::ShapeMismatch(format!(
                    "{} output bounds for {} outputs",
                    b.len(),
                    sizes.last().unwrap()
                )));
            }
            if b.iter().any(|(lo, hi)| !(lo < hi)) {
                return Err(Error::ShapeMismatch("bounds need lo < hi".into()));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for win in sizes.windows(2) {
            let (n_in, n_out) = (win[0], win[1]);
            let limit = 1.0 / (n_in as f64).sqrt();
            let w = (0..n_out)
                .map(|_| (0..n_in).map(|_| rng.gen_range(-limit..limit)).collect())
                .collect();
            layers.push(Layer {
                w,
                b: vec![0.0; n_out],
            });
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            layers,
            head,
        })
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_size() {
            return Err(Error::ShapeMismatch(format!(
                "input length {} for first layer of size {}",
                x.len(),
                self.input_size()
            )));
        }
        Ok(())
    }

    /// Deterministic forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(x)?.0)
    }

    /// Forward pass keeping the activations needed for [`Self::backward`].
    pub fn forward_trace(&self, x: &[f64]) -> Result<(Vec<f64>, Trace)> {
        self.check_input(x)?;
        let n = self.layers.len();
        let mut activations = Vec::with_capacity(n);
        let mut a = x.to_vec();
        let mut raw_out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            activations.push(a.clone());
            let mut z: Vec<f64> = layer
                .w
                .iter()
                .zip(&layer.b)
                .map(|(row, b)| row.iter().zip(&a).map(|(w, x)| w * x).sum::<f64>() + b)
                .collect();
            if i + 1 < n {
                for v in &mut z {
                    *v = relu(*v);
                }
            } else {
                raw_out = z.clone();
            }
            a = z;
        }
        let out = match &self.head {
            Head::Linear => raw_out.clone(),
            Head::Bounded(bounds) => raw_out
                .iter()
                .zip(bounds)
                .map(|(o, (lo, hi))| lo + (hi - lo) * (o.tanh() + 1.0) / 2.0)
                .collect(),
        };
        Ok((
            out,
            Trace {
                activations,
                raw_out,
            },
        ))
    }

    /// Exact reverse-mode gradients for the composed network. `upstream` is
    /// d(loss)/d(output); returns parameter gradients and d(loss)/d(input).
    pub fn backward(&self, trace: &Trace, upstream: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        if upstream.len() != self.output_size() {
            return Err(Error::ShapeMismatch(format!(
                "upstream length {} for output of size {}",
                upstream.len(),
                self.output_size()
            )));
        }
        let mut grads = Gradients::zeros_like(self);
        // Through the head.
        let mut delta: Vec<f64> = match &self.head {
            Head::Linear => upstream.to_vec(),
            Head::Bounded(bounds) => upstream
                .iter()
                .zip(&trace.raw_out)
                .zip(bounds)
                .map(|((g, o), (lo, hi))| g * (hi - lo) / 2.0 * (1.0 - o.tanh().powi(2)))
                .collect(),
        };
        // Through the layers, last to first.
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &trace.activations[i];
            // ReLU mask applies to the *output* of every hidden layer, which
            // is the stored input of the following layer.
            if i + 1 < self.layers.len() {
                let next_in = &trace.activations[i + 1];
                for (d, a) in delta.iter_mut().zip(next_in) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let g = &mut grads.layers[i];
            for (j, d) in delta.iter().enumerate() {
                for (k, x) in input.iter().enumerate() {
                    g.w[j][k] += d * x;
                }
                g.b[j] += d;
            }
            let mut prev = vec![0.0; input.len()];
            for (j, d) in delta.iter().enumerate() {
                for (k, w) in layer.w[j].iter().enumerate() {
                    prev[k] += d * w;
                }
            }
            delta = prev;
        }
        Ok((grads, delta))
    }

    /// Polyak tracking `self <- tau * online + (1 - tau) * self`.
    pub fn soft_update_from(&mut self, online: &Mlp, tau: f64) {
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            for (rt, ro) in t.w.iter_mut().zip(&o.w) {
                for (vt, vo) in rt.iter_mut().zip(ro) {
                    *vt = tau * vo + (1.0 - tau) * *vt;
                }
            }
            for (vt, vo) in t.b.iter_mut().zip(&o.b) {
                *vt = tau * vo + (1.0 - tau) * *vt;
            }
        }
    }
}

/// Bias-corrected Adam state for one network.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<Layer>,
    v: Vec<Layer>,
}

impl AdamState {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: net.layers.iter().map(Layer::zeros_like).collect(),
            v: net.layers.iter().map(Layer::zeros_like).collect(),
        }
    }

    /// One standard bias-corrected Adam update (descent direction).
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<()> {
        if grads.layers.len() != net.layers.len() {
            return Err(Error::ShapeMismatch(
                "gradient layer count differs from network".into(),
            ));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (li, layer) in net.layers.iter_mut().enumerate() {
            let g = &grads.layers[li];
            let (m, v) = (&mut self.m[li], &mut self.v[li]);
            for j in 0..layer.b.len() {
                for k in 0..layer.w[j].len() {
                    let grad = g.w[j][k];
                    m.w[j][k] = self.beta1 * m.w[j][k] + (1.0 - self.beta1) * grad;
                    v.w[j][k] = self.beta2 * v.w[j][k] + (1.0 - self.beta2) * grad * grad;
                    let mh = m.w[j][k] / bc1;
                    let vh = v.w[j][k] / bc2;
                    layer.w[j][k] -= self.lr * mh / (vh.sqrt() + self.eps);
                }
                let grad = g.b[j];
                m.b[j] = self.beta1 * m.b[j] + (1.0 - self.beta1) * grad;
                v.b[j] = self.beta2 * v.b[j] + (1.0 - self.beta2) * grad * grad;
                let mh = m.b[j] / bc1;
                let vh = v.b[j] / bc2;
                layer.b[j] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
