use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const N_CLASSES: usize = 2;

/// Layer sizes of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
}

impl Dims {
    pub fn new(vocab_size: usize, embed_dim: usize, hidden_dim: usize) -> Self {
        Dims {
            vocab_size,
            embed_dim,
            hidden_dim,
        }
    }

    fn embedding_len(&self) -> usize {
        self.vocab_size * self.embed_dim
    }

    fn hidden_w_off(&self) -> usize {
        self.embedding_len()
    }

    fn hidden_b_off(&self) -> usize {
        self.hidden_w_off() + self.embed_dim * self.hidden_dim
    }

    fn out_w_off(&self) -> usize {
        self.hidden_b_off() + self.hidden_dim
    }

    fn out_b_off(&self) -> usize {
        self.out_w_off() + self.hidden_dim * N_CLASSES
    }

    pub fn n_params(&self) -> usize {
        self.out_b_off() + N_CLASSES
    }
}

/// All classifier parameters in one flat vector.
///
/// Layout: embedding (`V x d`, row per token), hidden weights (`d x h`),
/// hidden bias (`h`), output weights (`h x 2`), output bias (`2`). All
/// matrices are row-major. Gradients use the same type and layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    dims: Dims,
    params: Vec<f64>,
}

impl ModelWeights {
    pub fn zeros(dims: Dims) -> Self {
        ModelWeights {
            dims,
            params: vec![0.0; dims.n_params()],
        }
    }

    pub fn from_params(dims: Dims, params: Vec<f64>) -> Result<Self> {
        if params.len() != dims.n_params() {
            return Err(Error::input(format!(
                "expected {} parameters for {:?}, got {}",
                dims.n_params(),
                dims,
                params.len()
            )));
        }
        Ok(ModelWeights { dims, params })
    }

    /// Uniform(-0.1, 0.1) embeddings, Glorot-uniform dense layers, zero biases.
    pub fn init<R: Rng>(dims: Dims, rng: &mut R) -> Self {
        let mut w = Self::zeros(dims);
        let glorot = |fan_in: usize, fan_out: usize| (6.0 / (fan_in + fan_out) as f64).sqrt();
        let hidden_limit = glorot(dims.embed_dim, dims.hidden_dim);
        let out_limit = glorot(dims.hidden_dim, N_CLASSES);
        for x in w.embedding_mut() {
            *x = rng.gen_range(-0.1..0.1);
        }
        for x in w.hidden_w_mut() {
            *x = rng.gen_range(-hidden_limit..hidden_limit);
        }
        for x in w.out_w_mut() {
            *x = rng.gen_range(-out_limit..out_limit);
        }
        w
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn into_params(self) -> Vec<f64> {
        self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|x| x.is_finite())
    }

    pub fn embedding(&self) -> &[f64] {
        &self.params[..self.dims.hidden_w_off()]
    }

    pub fn embedding_mut(&mut self) -> &mut [f64] {
        let end = self.dims.hidden_w_off();
        &mut self.params[..end]
    }

    pub fn hidden_w(&self) -> &[f64] {
        &self.params[self.dims.hidden_w_off()..self.dims.hidden_b_off()]
    }

    pub fn hidden_w_mut(&mut self) -> &mut [f64] {
        let (a, b) = (self.dims.hidden_w_off(), self.dims.hidden_b_off());
        &mut self.params[a..b]
    }

    pub fn hidden_b(&self) -> &[f64] {
        &self.params[self.dims.hidden_b_off()..self.dims.out_w_off()]
    }

    pub fn hidden_b_mut(&mut self) -> &mut [f64] {
        let (a, b) = (self.dims.hidden_b_off(), self.dims.out_w_off());
        &mut self.params[a..b]
    }

    pub fn out_w(&self) -> &[f64] {
        &self.params[self.dims.out_w_off()..self.dims.out_b_off()]
    }

    pub fn out_w_mut(&mut self) -> &mut [f64] {
        let (a, b) = (self.dims.out_w_off(), self.dims.out_b_off());
        &mut self.params[a..b]
    }

    pub fn out_b(&self) -> &[f64] {
        &self.params[self.dims.out_b_off()..]
    }

    pub fn out_b_mut(&mut self) -> &mut [f64] {
        let a = self.dims.out_b_off();
        &mut self.params[a..]
    }
}

/// One encoded training or evaluation example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub tokens: Vec<usize>,
    pub label: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: u8,
    /// Positive-class probability.
    pub confidence: f64,
}

struct Activations {
    mean_emb: Vec<f64>,
    hidden: Vec<f64>,
    logits: [f64; N_CLASSES],
}

fn check_finite(values: &[f64], layer: &'static str) -> Result<()> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric { layer })
    }
}

fn activations(weights: &ModelWeights, tokens: &[usize]) -> Result<Activations> {
    let Dims {
        vocab_size,
        embed_dim: d,
        hidden_dim: h,
    } = weights.dims;
    if tokens.is_empty() {
        return Err(Error::input("token sequence is empty"));
    }
    if let Some(&bad) = tokens.iter().find(|&&t| t >= vocab_size) {
        return Err(Error::input(format!(
            "token index {bad} out of range for vocabulary of size {vocab_size}"
        )));
    }

    let emb = weights.embedding();
    let mut mean_emb = vec![0.0; d];
    for &t in tokens {
        for (m, e) in mean_emb.iter_mut().zip(&emb[t * d..(t + 1) * d]) {
            *m += e;
        }
    }
    let inv_len = 1.0 / tokens.len() as f64;
    mean_emb.iter_mut().for_each(|m| *m *= inv_len);
    check_finite(&mean_emb, "embedding")?;

    let w1 = weights.hidden_w();
    let mut hidden = weights.hidden_b().to_vec();
    for (i, &e) in mean_emb.iter().enumerate() {
        for (z, w) in hidden.iter_mut().zip(&w1[i * h..(i + 1) * h]) {
            *z += e * w;
        }
    }
    hidden.iter_mut().for_each(|z| *z = z.tanh());
    check_finite(&hidden, "hidden")?;

    let w2 = weights.out_w();
    let b2 = weights.out_b();
    let mut logits = [b2[0], b2[1]];
    for (j, &a) in hidden.iter().enumerate() {
        logits[0] += a * w2[j * N_CLASSES];
        logits[1] += a * w2[j * N_CLASSES + 1];
    }
    check_finite(&logits, "output")?;

    Ok(Activations {
        mean_emb,
        hidden,
        logits,
    })
}

fn softmax(logits: &[f64; N_CLASSES]) -> [f64; N_CLASSES] {
    let max = logits[0].max(logits[1]);
    let e0 = (logits[0] - max).exp();
    let e1 = (logits[1] - max).exp();
    let z = e0 + e1;
    [e0 / z, e1 / z]
}

fn log_sum_exp(logits: &[f64; N_CLASSES]) -> f64 {
    let max = logits[0].max(logits[1]);
    max + ((logits[0] - max).exp() + (logits[1] - max).exp()).ln()
}

/// Class probabilities `[p_negative, p_positive]`.
pub fn forward(weights: &ModelWeights, tokens: &[usize]) -> Result<[f64; N_CLASSES]> {
    let act = activations(weights, tokens)?;
    Ok(softmax(&act.logits))
}

/// Argmax label (ties go to negative) plus the positive-class probability.
pub fn predict(weights: &ModelWeights, tokens: &[usize]) -> Result<Prediction> {
    let p = forward(weights, tokens)?;
    Ok(Prediction {
        label: u8::from(p[1] > p[0]),
        confidence: p[1],
    })
}

/// Mean cross-entropy over the batch and its exact gradient.
pub fn loss_and_grad(weights: &ModelWeights, batch: &[&Encoded]) -> Result<(f64, ModelWeights)> {
    if batch.is_empty() {
        return Err(Error::input("batch is empty"));
    }
    let Dims {
        embed_dim: d,
        hidden_dim: h,
        ..
    } = weights.dims;
    let scale = 1.0 / batch.len() as f64;
    let mut grad = ModelWeights::zeros(weights.dims);
    let mut loss = 0.0;

    let mut d_hidden = vec![0.0; h];
    let mut d_emb = vec![0.0; d];
    for ex in batch {
        if ex.label > 1 {
            return Err(Error::input(format!("label {} is not in {{0, 1}}", ex.label)));
        }
        let act = activations(weights, &ex.tokens)?;
        let y = usize::from(ex.label);
        loss += log_sum_exp(&act.logits) - act.logits[y];

        let p = softmax(&act.logits);
        let mut d_logits = [p[0] * scale, p[1] * scale];
        d_logits[y] -= scale;

        {
            let gb2 = grad.out_b_mut();
            gb2[0] += d_logits[0];
            gb2[1] += d_logits[1];
        }
        let w2 = weights.out_w();
        {
            let gw2 = grad.out_w_mut();
            for (j, &a) in act.hidden.iter().enumerate() {
                gw2[j * N_CLASSES] += a * d_logits[0];
                gw2[j * N_CLASSES + 1] += a * d_logits[1];
                let da = w2[j * N_CLASSES] * d_logits[0] + w2[j * N_CLASSES + 1] * d_logits[1];
                d_hidden[j] = da * (1.0 - a * a);
            }
        }
        for (g, dz) in grad.hidden_b_mut().iter_mut().zip(&d_hidden) {
            *g += dz;
        }
        let w1 = weights.hidden_w();
        {
            let gw1 = grad.hidden_w_mut();
            for (i, &e) in act.mean_emb.iter().enumerate() {
                let row = &mut gw1[i * h..(i + 1) * h];
                let mut de = 0.0;
                for ((g, dz), w) in row.iter_mut().zip(&d_hidden).zip(&w1[i * h..(i + 1) * h]) {
                    *g += e * dz;
                    de += w * dz;
                }
                d_emb[i] = de;
            }
        }
        let inv_len = 1.0 / ex.tokens.len() as f64;
        let gemb = grad.embedding_mut();
        for &t in &ex.tokens {
            for (g, de) in gemb[t * d..(t + 1) * d].iter_mut().zip(&d_emb) {
                *g += de * inv_len;
            }
        }
    }
    loss *= scale;
    if !loss.is_finite() {
        return Err(Error::Numeric { layer: "loss" });
    }
    Ok((loss, grad))
}
