//! β-VAE with hand-written forward and backward passes.
//!
//! Architecture: flattened pixels → tanh hidden layer → (μ, log σ²) heads,
//! mirrored by a decoder z → tanh hidden → sigmoid pixels. The objective per
//! sample is the summed pixel-wise binary cross-entropy plus β times the
//! closed-form KL divergence to the standard normal prior.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::LatentMatrix;
use crate::rng;
use crate::synthgen::ImageCrop;

/// Probabilities are clamped to [ε, 1 − ε] inside the cross-entropy.
pub const BCE_EPS: f64 = 1e-7;
pub const LOGVAR_CLAMP: f64 = 10.0;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
/// Samples per gradient-accumulation chunk. Fixed so the summation order does
/// not depend on the thread pool.
const GRAD_CHUNK: usize = 8;

const TAG_INIT: u64 = 0x1417;
const TAG_SHUFFLE: u64 = 0x5A0F;
const TAG_NOISE: u64 = 0xE951;

/// Fully connected layer, weights stored row-major as `n_out × n_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub n_out: usize,
    pub n_in: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(n_out: usize, n_in: usize) -> Self {
        Self {
            n_out,
            n_in,
            weights: vec![0.0; n_out * n_in],
            bias: vec![0.0; n_out],
        }
    }

    /// Glorot-uniform weights, zero bias.
    fn glorot(n_out: usize, n_in: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (n_in + n_out) as f64).sqrt();
        let weights = (0..n_out * n_in)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        Self {
            n_out,
            n_in,
            weights,
            bias: vec![0.0; n_out],
        }
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.n_in).zip(&self.bias))
        {
            *o = b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// Accumulates ∂L/∂W += δ ⊗ x and ∂L/∂b += δ into `self`.
    fn accumulate(&mut self, delta: &[f64], x: &[f64]) {
        for ((row, b), d) in self
            .weights
            .chunks_exact_mut(self.n_in)
            .zip(self.bias.iter_mut())
            .zip(delta)
        {
            *b += d;
            if *d != 0.0 {
                for (w, v) in row.iter_mut().zip(x) {
                    *w += d * v;
                }
            }
        }
    }

    /// out += Wᵀ δ
    fn backprop(&self, delta: &[f64], out: &mut [f64]) {
        for (row, d) in self.weights.chunks_exact(self.n_in).zip(delta) {
            if *d != 0.0 {
                for (o, w) in out.iter_mut().zip(row) {
                    *o += d * w;
                }
            }
        }
    }

    fn check(&self, name: &str, n_out: usize, n_in: usize) -> Result<()> {
        if self.n_out != n_out
            || self.n_in != n_in
            || self.weights.len() != n_out * n_in
            || self.bias.len() != n_out
        {
            return Err(Error::shape(
                format!("{name}: {n_out}x{n_in}"),
                format!(
                    "{}x{} ({} weights, {} biases)",
                    self.n_out,
                    self.n_in,
                    self.weights.len(),
                    self.bias.len()
                ),
            ));
        }
        if self.weights.iter().chain(&self.bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("parameters of {name}")));
        }
        Ok(())
    }
}

/// Trained (or initial) VAE weights plus the shape metadata needed to use them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaeParams {
    pub width: usize,
    pub height: usize,
    pub latent_dim: usize,
    pub hidden_width: usize,
    pub beta: f64,
    pub enc_hidden: Dense,
    pub enc_mu: Dense,
    pub enc_logvar: Dense,
    pub dec_hidden: Dense,
    pub dec_out: Dense,
}

impl VaeParams {
    pub fn zeros(width: usize, height: usize, hidden_width: usize, latent_dim: usize, beta: f64) -> Self {
        let n_in = width * height * 3;
        Self {
            width,
            height,
            latent_dim,
            hidden_width,
            beta,
            enc_hidden: Dense::zeros(hidden_width, n_in),
            enc_mu: Dense::zeros(latent_dim, hidden_width),
            enc_logvar: Dense::zeros(latent_dim, hidden_width),
            dec_hidden: Dense::zeros(hidden_width, latent_dim),
            dec_out: Dense::zeros(n_in, hidden_width),
        }
    }

    pub fn init(
        width: usize,
        height: usize,
        hidden_width: usize,
        latent_dim: usize,
        beta: f64,
        seed: u64,
    ) -> Result<Self> {
        if latent_dim < 2 {
            return Err(Error::invalid("latent_dim", "must be >= 2"));
        }
        if hidden_width < 1 {
            return Err(Error::invalid("hidden_width", "must be >= 1"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta", "must be finite and > 0"));
        }
        let n_in = width * height * 3;
        let mut rng = rng::stream(seed, &[TAG_INIT]);
        Ok(Self {
            width,
            height,
            latent_dim,
            hidden_width,
            beta,
            enc_hidden: Dense::glorot(hidden_width, n_in, &mut rng),
            enc_mu: Dense::glorot(latent_dim, hidden_width, &mut rng),
            enc_logvar: Dense::glorot(latent_dim, hidden_width, &mut rng),
            dec_hidden: Dense::glorot(hidden_width, latent_dim, &mut rng),
            dec_out: Dense::glorot(n_in, hidden_width, &mut rng),
        })
    }

    pub fn input_len(&self) -> usize {
        self.width * self.height * 3
    }

    /// Checks shape consistency and finiteness, e.g. after deserializing.
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim < 2 {
            return Err(Error::invalid("latent_dim", "must be >= 2"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta", "must be finite and > 0"));
        }
        let (n, h, d) = (self.input_len(), self.hidden_width, self.latent_dim);
        self.enc_hidden.check("enc_hidden", h, n)?;
        self.enc_mu.check("enc_mu", d, h)?;
        self.enc_logvar.check("enc_logvar", d, h)?;
        self.dec_hidden.check("dec_hidden", h, d)?;
        self.dec_out.check("dec_out", n, h)
    }

    fn layers(&self) -> [&Dense; 5] {
        [
            &self.enc_hidden,
            &self.enc_mu,
            &self.enc_logvar,
            &self.dec_hidden,
            &self.dec_out,
        ]
    }

    fn layers_mut(&mut self) -> [&mut Dense; 5] {
        [
            &mut self.enc_hidden,
            &mut self.enc_mu,
            &mut self.enc_logvar,
            &mut self.dec_hidden,
            &mut self.dec_out,
        ]
    }

    /// Every trainable scalar, in a fixed order.
    pub fn flat(&self) -> Vec<f64> {
        self.layers()
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        let mut it = values.iter();
        for layer in self.layers_mut() {
            for v in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *v = *it.next().expect("flat parameter vector too short");
            }
        }
    }

    fn add_assign(&mut self, other: &VaeParams) {
        for (a, b) in self.layers_mut().into_iter().zip(other.layers()) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += y;
            }
        }
    }

    fn check_image(&self, image: &ImageCrop) -> Result<()> {
        if image.width() != self.width || image.height() != self.height {
            return Err(Error::shape(
                format!("{}x{} image", self.width, self.height),
                format!("{}x{}", image.width(), image.height()),
            ));
        }
        Ok(())
    }

    /// Encoder mean and clamped log-variance. No sampling.
    pub fn encode(&self, image: &ImageCrop) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_image(image)?;
        let enc = self.encode_pixels(image.pixels());
        Ok((enc.mu, enc.logvar))
    }

    pub fn decode(&self, z: &[f64]) -> Result<ImageCrop> {
        if z.len() != self.latent_dim {
            return Err(Error::shape(self.latent_dim, z.len()));
        }
        let dec = self.decode_logits(z);
        ImageCrop::new(self.width, self.height, dec.logits.iter().map(|&l| sigmoid(l)).collect())
    }

    fn encode_pixels(&self, x: &[f64]) -> Encoded {
        let mut h = vec![0.0; self.hidden_width];
        self.enc_hidden.forward(x, &mut h);
        h.iter_mut().for_each(|v| *v = v.tanh());
        let mut mu = vec![0.0; self.latent_dim];
        let mut raw = vec![0.0; self.latent_dim];
        self.enc_mu.forward(&h, &mut mu);
        self.enc_logvar.forward(&h, &mut raw);
        let logvar = raw
            .iter()
            .map(|v| v.clamp(-LOGVAR_CLAMP, LOGVAR_CLAMP))
            .collect();
        Encoded {
            hidden: h,
            mu,
            logvar,
            raw_logvar: raw,
        }
    }

    fn decode_logits(&self, z: &[f64]) -> Decoded {
        let mut g = vec![0.0; self.hidden_width];
        self.dec_hidden.forward(z, &mut g);
        g.iter_mut().for_each(|v| *v = v.tanh());
        let mut logits = vec![0.0; self.input_len()];
        self.dec_out.forward(&g, &mut logits);
        Decoded { hidden: g, logits }
    }

    /// Loss and parameter gradient of one sample, given its reparameterization
    /// noise. The gradient is accumulated into `grad`.
    fn sample_loss_grad(&self, x: &[f64], eps: &[f64], grad: &mut VaeParams) -> LossBreakdown {
        let enc = self.encode_pixels(x);
        let sigma: Vec<f64> = enc.logvar.iter().map(|lv| (0.5 * lv).exp()).collect();
        let z: Vec<f64> = enc
            .mu
            .iter()
            .zip(&sigma)
            .zip(eps)
            .map(|((m, s), e)| m + s * e)
            .collect();
        let dec = self.decode_logits(&z);
        let recon: Vec<f64> = dec.logits.iter().map(|&l| sigmoid(l)).collect();
        let loss = elbo_terms(x, &recon, &enc.mu, &enc.logvar, self.beta);

        // Decoder.
        let dlogit: Vec<f64> = recon.iter().zip(x).map(|(p, t)| p - t).collect();
        grad.dec_out.accumulate(&dlogit, &dec.hidden);
        let mut dg = vec![0.0; self.hidden_width];
        self.dec_out.backprop(&dlogit, &mut dg);
        for (d, g) in dg.iter_mut().zip(&dec.hidden) {
            *d *= 1.0 - g * g;
        }
        grad.dec_hidden.accumulate(&dg, &z);
        let mut dz = vec![0.0; self.latent_dim];
        self.dec_hidden.backprop(&dg, &mut dz);

        // Reparameterization and KL.
        let beta = self.beta;
        let dmu: Vec<f64> = dz.iter().zip(&enc.mu).map(|(d, m)| d + beta * m).collect();
        let dlogvar: Vec<f64> = (0..self.latent_dim)
            .map(|j| {
                let raw = enc.raw_logvar[j];
                if !(-LOGVAR_CLAMP..=LOGVAR_CLAMP).contains(&raw) {
                    return 0.0;
                }
                dz[j] * eps[j] * 0.5 * sigma[j] + beta * 0.5 * (enc.logvar[j].exp() - 1.0)
            })
            .collect();
        grad.enc_mu.accumulate(&dmu, &enc.hidden);
        grad.enc_logvar.accumulate(&dlogvar, &enc.hidden);

        // Encoder.
        let mut dh = vec![0.0; self.hidden_width];
        self.enc_mu.backprop(&dmu, &mut dh);
        self.enc_logvar.backprop(&dlogvar, &mut dh);
        for (d, h) in dh.iter_mut().zip(&enc.hidden) {
            *d *= 1.0 - h * h;
        }
        grad.enc_hidden.accumulate(&dh, x);
        loss
    }

    /// Mean loss over a batch and its exact gradient, for fixed noise.
    ///
    /// `noise[i]` is the standard-normal draw used to reparameterize sample i.
    pub fn loss_and_gradient(&self, batch: &[&ImageCrop], noise: &[Vec<f64>]) -> Result<(LossBreakdown, VaeParams)> {
        if batch.is_empty() {
            return Err(Error::InsufficientData("empty batch".into()));
        }
        if noise.len() != batch.len() || noise.iter().any(|e| e.len() != self.latent_dim) {
            return Err(Error::shape(
                format!("{} noise vectors of length {}", batch.len(), self.latent_dim),
                format!("{} vectors", noise.len()),
            ));
        }
        for img in batch {
            self.check_image(img)?;
        }
        let pixels: Vec<&[f64]> = batch.iter().map(|c| c.pixels()).collect();
        Ok(self.batch_loss_grad(&pixels, noise))
    }

    fn batch_loss_grad(&self, batch: &[&[f64]], noise: &[Vec<f64>]) -> (LossBreakdown, VaeParams) {
        let template = VaeParams::zeros(self.width, self.height, self.hidden_width, self.latent_dim, self.beta);
        let partials: Vec<(LossBreakdown, VaeParams)> = batch
            .par_chunks(GRAD_CHUNK)
            .zip(noise.par_chunks(GRAD_CHUNK))
            .map(|(xs, es)| {
                let mut grad = template.clone();
                let mut sum = LossBreakdown::default();
                for (x, e) in xs.iter().zip(es) {
                    sum.add(&self.sample_loss_grad(x, e, &mut grad));
                }
                (sum, grad)
            })
            .collect();

        let mut loss = LossBreakdown::default();
        let mut grad = template;
        for (l, g) in &partials {
            loss.add(l);
            grad.add_assign(g);
        }
        let scale = 1.0 / batch.len() as f64;
        for layer in grad.layers_mut() {
            layer.weights.iter_mut().chain(layer.bias.iter_mut()).for_each(|v| *v *= scale);
        }
        (loss.scaled(scale), grad)
    }
}

struct Encoded {
    hidden: Vec<f64>,
    mu: Vec<f64>,
    logvar: Vec<f64>,
    raw_logvar: Vec<f64>,
}

struct Decoded {
    hidden: Vec<f64>,
    logits: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub reconstruction: f64,
    pub kl: f64,
    /// reconstruction + β·kl
    pub total: f64,
}

impl LossBreakdown {
    fn add(&mut self, other: &LossBreakdown) {
        self.reconstruction += other.reconstruction;
        self.kl += other.kl;
        self.total += other.total;
    }

    fn scaled(self, s: f64) -> Self {
        Self {
            reconstruction: self.reconstruction * s,
            kl: self.kl * s,
            total: self.total * s,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.reconstruction.is_finite() && self.kl.is_finite() && self.total.is_finite()
    }
}

/// KL(N(μ, σ²) ‖ N(0, I)) = −½ Σ (1 + log σ² − μ² − σ²).
pub fn kl_divergence(mu: &[f64], logvar: &[f64]) -> f64 {
    let kl = -0.5
        * mu
            .iter()
            .zip(logvar)
            .map(|(m, lv)| 1.0 + lv - m * m - lv.exp())
            .sum::<f64>();
    // Each term is ≥ 0 analytically; rounding can leave tiny negatives.
    kl.max(0.0)
}

/// Summed pixel-wise binary cross-entropy.
pub fn binary_cross_entropy(target: &[f64], prob: &[f64]) -> f64 {
    let mut clamped = 0usize;
    let bce = target
        .iter()
        .zip(prob)
        .map(|(&t, &p)| {
            let q = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
            if q != p {
                clamped += 1;
            }
            let mut l = 0.0;
            if t > 0.0 {
                l -= t * q.ln();
            }
            if t < 1.0 {
                l -= (1.0 - t) * (1.0 - q).ln();
            }
            l
        })
        .sum();
    if clamped > 0 {
        log::debug!("clamped {clamped} reconstruction values to [{BCE_EPS}, 1 - {BCE_EPS}]");
    }
    bce
}

fn elbo_terms(image: &[f64], reconstruction: &[f64], mu: &[f64], logvar: &[f64], beta: f64) -> LossBreakdown {
    let reconstruction = binary_cross_entropy(image, reconstruction);
    let kl = kl_divergence(mu, logvar);
    LossBreakdown {
        reconstruction,
        kl,
        total: reconstruction + beta * kl,
    }
}

/// Reconstruction BCE plus β-weighted KL for one sample.
pub fn elbo_loss(
    image: &[f64],
    reconstruction: &[f64],
    mu: &[f64],
    logvar: &[f64],
    beta: f64,
) -> Result<LossBreakdown> {
    if image.len() != reconstruction.len() {
        return Err(Error::shape(image.len(), reconstruction.len()));
    }
    if mu.len() != logvar.len() {
        return Err(Error::shape(mu.len(), logvar.len()));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", "must be finite and >= 0"));
    }
    Ok(elbo_terms(image, reconstruction, mu, logvar, beta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub beta: f64,
    pub latent_dim: usize,
    pub hidden_width: usize,
}

impl Default for TrainConfig {
    /// Desk-scale settings.
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 64,
            learning_rate: 1e-3,
            seed: 0,
            beta: 0.1,
            latent_dim: 8,
            hidden_width: 128,
        }
    }
}

impl TrainConfig {
    /// 750 epochs, batch 64, learning rate 1e-4, d = 32, β = 0.1.
    pub fn paper_scale() -> Self {
        Self {
            epochs: 750,
            batch_size: 64,
            learning_rate: 1e-4,
            latent_dim: 32,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs", "must be > 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", "must be > 0"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", "must be finite and > 0"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta", "must be finite and > 0"));
        }
        if self.latent_dim < 2 {
            return Err(Error::invalid("latent_dim", "must be >= 2"));
        }
        if self.hidden_width == 0 {
            return Err(Error::invalid("hidden_width", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: VaeParams,
    /// Mean per-sample loss of each epoch.
    pub history: Vec<LossBreakdown>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    fn new(n: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        }
    }
}

/// Standard-normal reparameterization noise for one sample.
fn sample_noise(seed: u64, epoch: usize, batch: usize, sample: usize, d: usize) -> Vec<f64> {
    let mut rng = rng::stream(seed, &[TAG_NOISE, epoch as u64, batch as u64, sample as u64]);
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// Trains a β-VAE on equally sized crops with Adam.
pub fn train(crops: &[ImageCrop], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if crops.len() < 2 * config.batch_size {
        return Err(Error::InsufficientData(format!(
            "training needs at least 2 x batch_size = {} crops, got {}",
            2 * config.batch_size,
            crops.len()
        )));
    }
    let (w, h) = (crops[0].width(), crops[0].height());
    let mut params = VaeParams::init(
        w,
        h,
        config.hidden_width,
        config.latent_dim,
        config.beta,
        config.seed,
    )?;
    for c in crops {
        params.check_image(c)?;
    }

    let mut flat = params.flat();
    let mut adam = Adam::new(flat.len(), config.learning_rate);
    let mut order: Vec<usize> = (0..crops.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::stream(config.seed, &[TAG_SHUFFLE, epoch as u64]));
        let mut epoch_sum = LossBreakdown::default();
        for (bi, idx) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&[f64]> = idx.iter().map(|&i| crops[i].pixels()).collect();
            let noise: Vec<Vec<f64>> = (0..idx.len())
                .map(|s| sample_noise(config.seed, epoch, bi, s, config.latent_dim))
                .collect();
            let (loss, grad) = params.batch_loss_grad(&batch, &noise);
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "training loss at epoch {epoch}, batch {bi}: {loss:?}"
                )));
            }
            epoch_sum.add(&loss.scaled(idx.len() as f64));
            adam.step(&mut flat, &grad.flat());
            params.set_flat(&flat);
        }
        let mean = epoch_sum.scaled(1.0 / crops.len() as f64);
        log::debug!(
            "epoch {epoch}: total {:.4} (recon {:.4}, kl {:.4})",
            mean.total,
            mean.reconstruction,
            mean.kl
        );
        history.push(mean);
    }
    Ok(TrainOutcome { params, history })
}

/// Stacks the encoder means of `crops` into an N×d matrix.
pub fn embed_dataset(params: &VaeParams, crops: &[ImageCrop]) -> Result<LatentMatrix> {
    let rows = crops
        .par_iter()
        .map(|c| params.encode(c).map(|(mu, _)| mu))
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Ok(LatentMatrix::zeros(0, params.latent_dim));
    }
    LatentMatrix::from_rows(&rows)
}

/// Decodes `steps` points along one latent axis, all other coordinates fixed
/// at `base_z`.
pub fn traverse(
    params: &VaeParams,
    base_z: &[f64],
    dim: usize,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<Vec<ImageCrop>> {
    if base_z.len() != params.latent_dim {
        return Err(Error::shape(params.latent_dim, base_z.len()));
    }
    if dim >= params.latent_dim {
        return Err(Error::invalid(
            "dim",
            format!("{dim} out of range for d = {}", params.latent_dim),
        ));
    }
    if steps < 2 {
        return Err(Error::invalid("steps", "must be >= 2"));
    }
    traversal_values(lo, hi, steps)
        .into_iter()
        .map(|v| {
            let mut z = base_z.to_vec();
            z[dim] = v;
            params.decode(&z)
        })
        .collect()
}

pub fn traversal_values(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|k| lo + k as f64 * (hi - lo) / (steps - 1) as f64)
        .collect()
}
