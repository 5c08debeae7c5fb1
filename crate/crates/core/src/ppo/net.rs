//! Minimal feed-forward policy/value network with hand-rolled backprop and
//! Adam. Two tanh hidden layers feed a per-element categorical policy head
//! (joint on/off × phase choices) and a scalar value head.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetShape {
    pub input: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    /// Total reflective elements (policy heads).
    pub elements: usize,
    /// Categorical arity per element: 2 · 2^b.
    pub actions: usize,
}

impl NetShape {
    pub fn policy_out(&self) -> usize {
        self.elements * self.actions
    }

    pub fn param_count(&self) -> usize {
        let NetShape { input, hidden1, hidden2, .. } = *self;
        hidden1 * input
            + hidden1
            + hidden2 * hidden1
            + hidden2
            + self.policy_out() * hidden2
            + self.policy_out()
            + hidden2
            + 1
    }

    fn offsets(&self) -> [usize; 8] {
        let w1 = 0;
        let b1 = w1 + self.hidden1 * self.input;
        let w2 = b1 + self.hidden1;
        let b2 = w2 + self.hidden2 * self.hidden1;
        let wp = b2 + self.hidden2;
        let bp = wp + self.policy_out() * self.hidden2;
        let wv = bp + self.policy_out();
        let bv = wv + self.hidden2;
        [w1, b1, w2, b2, wp, bp, wv, bv]
    }
}

/// Cached activations of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub input: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    /// Flattened element-major logits.
    pub logits: Vec<f64>,
    pub value: f64,
    /// Per-element softmax probabilities, same layout as logits.
    pub probs: Vec<f64>,
}

impl Forward {
    pub fn log_prob_of(&self, shape: &NetShape, actions: &[usize]) -> f64 {
        actions
            .iter()
            .enumerate()
            .map(|(e, &a)| self.probs[e * shape.actions + a].max(1e-300).ln())
            .sum()
    }

    /// Sum of per-element categorical entropies.
    pub fn entropy(&self, shape: &NetShape) -> f64 {
        let mut h = 0.0;
        for e in 0..shape.elements {
            for a in 0..shape.actions {
                let p = self.probs[e * shape.actions + a];
                if p > 0.0 {
                    h -= p * p.ln();
                }
            }
        }
        h
    }
}

#[derive(Debug, Clone)]
pub struct Net {
    pub shape: NetShape,
    pub params: Vec<f64>,
}

impl Net {
    /// Seeded uniform init, scaled by fan-in.
    pub fn init<R: Rng>(shape: NetShape, rng: &mut R) -> Self {
        let [w1, b1, w2, b2, wp, bp, wv, bv] = shape.offsets();
        let mut params = vec![0.0; shape.param_count()];
        let mut fill = |lo: usize, hi: usize, fan_in: usize, rng: &mut R| {
            let s = 1.0 / (fan_in as f64).sqrt();
            for p in params[lo..hi].iter_mut() {
                *p = rng.gen_range(-s..s);
            }
        };
        fill(w1, b1, shape.input, rng);
        fill(w2, b2, shape.hidden1, rng);
        fill(wp, bp, shape.hidden2, rng);
        fill(wv, bv, shape.hidden2, rng);
        // biases stay zero
        let _ = (b1, b2, bp, bv);
        Self { shape, params }
    }

    pub fn zeros(shape: NetShape) -> Self {
        Self { params: vec![0.0; shape.param_count()], shape }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Forward> {
        let s = &self.shape;
        if input.len() != s.input {
            return Err(Error::Dimension(format!(
                "net expects input of length {}, got {}",
                s.input,
                input.len()
            )));
        }
        let [w1, b1, w2, b2, wp, bp, wv, bv] = s.offsets();
        let p = &self.params;
        let mut h1 = vec![0.0; s.hidden1];
        for i in 0..s.hidden1 {
            let row = w1 + i * s.input;
            let mut acc = p[b1 + i];
            for j in 0..s.input {
                acc += p[row + j] * input[j];
            }
            h1[i] = acc.tanh();
        }
        let mut h2 = vec![0.0; s.hidden2];
        for i in 0..s.hidden2 {
            let row = w2 + i * s.hidden1;
            let mut acc = p[b2 + i];
            for j in 0..s.hidden1 {
                acc += p[row + j] * h1[j];
            }
            h2[i] = acc.tanh();
        }
        let mut logits = vec![0.0; s.policy_out()];
        for i in 0..s.policy_out() {
            let row = wp + i * s.hidden2;
            let mut acc = p[bp + i];
            for j in 0..s.hidden2 {
                acc += p[row + j] * h2[j];
            }
            logits[i] = acc;
        }
        let mut value = p[bv];
        for j in 0..s.hidden2 {
            value += p[wv + j] * h2[j];
        }
        // per-element softmax
        let mut probs = vec![0.0; s.policy_out()];
        for e in 0..s.elements {
            let base = e * s.actions;
            let slice = &logits[base..base + s.actions];
            let max = slice.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for a in 0..s.actions {
                let v = (slice[a] - max).exp();
                probs[base + a] = v;
                z += v;
            }
            for a in 0..s.actions {
                probs[base + a] /= z;
            }
        }
        Ok(Forward { input: input.to_vec(), h1, h2, logits, value, probs })
    }

    /// Accumulate parameter gradients for upstream derivatives d_logits
    /// (element-major) and d_value.
    pub fn backward(&self, fwd: &Forward, d_logits: &[f64], d_value: f64, grads: &mut [f64]) {
        let s = &self.shape;
        let [w1off, b1off, w2off, b2off, wpoff, bpoff, wvoff, bvoff] = s.offsets();
        let p = &self.params;

        let mut d_h2 = vec![0.0; s.hidden2];
        for i in 0..s.policy_out() {
            let g = d_logits[i];
            if g != 0.0 {
                let row = wpoff + i * s.hidden2;
                for j in 0..s.hidden2 {
                    grads[row + j] += g * fwd.h2[j];
                    d_h2[j] += g * p[row + j];
                }
                grads[bpoff + i] += g;
            }
        }
        if d_value != 0.0 {
            for j in 0..s.hidden2 {
                grads[wvoff + j] += d_value * fwd.h2[j];
                d_h2[j] += d_value * p[wvoff + j];
            }
            grads[bvoff] += d_value;
        }

        let mut d_h1 = vec![0.0; s.hidden1];
        for i in 0..s.hidden2 {
            let dz = d_h2[i] * (1.0 - fwd.h2[i] * fwd.h2[i]);
            if dz != 0.0 {
                let row = w2off + i * s.hidden1;
                for j in 0..s.hidden1 {
                    grads[row + j] += dz * fwd.h1[j];
                    d_h1[j] += dz * p[row + j];
                }
                grads[b2off + i] += dz;
            }
        }
        for i in 0..s.hidden1 {
            let dz = d_h1[i] * (1.0 - fwd.h1[i] * fwd.h1[i]);
            if dz != 0.0 {
                let row = w1off + i * s.input;
                for j in 0..s.input {
                    grads[row + j] += dz * fwd.input[j];
                }
                grads[b1off + i] += dz;
            }
        }
    }
}

/// Adam state over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(lr: f64, dim: usize) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; dim], v: vec![0.0; dim], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}
