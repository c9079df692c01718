//! Maximum-likelihood and clipped-surrogate PPO updates over any model that
//! can score a choice and back-propagate a weighted objective.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Scores of one (input, choice) pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Eval {
    pub log_prob: f64,
    pub entropy: f64,
    pub value: f64,
}

/// Coefficients of the objective `w.log_prob * log_prob + w.entropy * entropy + w.value * value`
/// whose gradient `evaluate` accumulates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Weights {
    pub log_prob: f64,
    pub entropy: f64,
    pub value: f64,
}

pub trait Differentiable {
    type Input;
    type Choice;

    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];

    /// Scores `choice`; with `grad`, adds the gradient of the weighted objective into it.
    fn evaluate(&self, input: &Self::Input, choice: &Self::Choice, grad: Option<(&mut [f64], Weights)>) -> Eval;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    pub clip: f64,
    pub gamma: f64,
    /// Advantage smoothing coefficient.
    pub lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub sft_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-2,
            clip: 0.2,
            gamma: 0.9,
            lambda: 0.95,
            epochs: 4,
            batch_size: 32,
            entropy_coef: 0.01,
            value_coef: 0.5,
            sft_epochs: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite loss {loss} at sample {sample}")]
    NonFiniteLoss { loss: f64, sample: usize },
    #[error("length mismatch: {rewards} rewards, {values} values")]
    LengthMismatch { rewards: usize, values: usize },
    #[error("invalid training config: {0}")]
    Config(&'static str),
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(TrainError::Config("clip must be in (0, 1)"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(TrainError::Config("gamma must be in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(TrainError::Config("lambda must be in [0, 1]"));
        }
        if self.lr <= 0.0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(TrainError::Config("lr, epochs and batch_size must be positive"));
        }
        Ok(())
    }
}

/// Adam optimiser minimising the loss whose gradient is passed to `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
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
    pub fn new(n: usize, lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let b1t = 1.0 - libm::pow(self.beta1, self.t as f64);
        let b2t = 1.0 - libm::pow(self.beta2, self.t as f64);
        for i in 0..params.len() {
            let g = grad[i];
            if g == 0.0 && self.m[i] == 0.0 && self.v[i] == 0.0 {
                continue;
            }
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / b1t;
            let vh = self.v[i] / b2t;
            params[i] -= self.lr * mh / (libm::sqrt(vh) + self.eps);
        }
    }
}

/// One gradient step on the mean negative log-likelihood of `batch`.
/// Returns the loss before the step.
pub fn sft_update<D: Differentiable>(
    model: &mut D,
    opt: &mut Adam,
    batch: &[(D::Input, D::Choice)],
) -> Result<f64, TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let scale = 1.0 / batch.len() as f64;
    let mut grad = vec![0.0; model.params().len()];
    let mut loss = 0.0;
    for (i, (x, c)) in batch.iter().enumerate() {
        let w = Weights { log_prob: -scale, ..Weights::default() };
        let e = model.evaluate(x, c, Some((&mut grad, w)));
        if !e.log_prob.is_finite() {
            return Err(TrainError::NonFiniteLoss { loss: -e.log_prob, sample: i });
        }
        loss -= e.log_prob * scale;
    }
    opt.step(model.params_mut(), &grad);
    Ok(loss)
}

/// Generalised advantage estimates for one episode (terminal after the last step).
pub fn compute_advantages(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> Result<Vec<f64>, TrainError> {
    if rewards.len() != values.len() {
        return Err(TrainError::LengthMismatch { rewards: rewards.len(), values: values.len() });
    }
    let mut adv = vec![0.0; rewards.len()];
    let mut next_value = 0.0;
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        let delta = rewards[t] + gamma * next_value - values[t];
        acc = delta + gamma * lambda * acc;
        adv[t] = acc;
        next_value = values[t];
    }
    Ok(adv)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoSample<I, C> {
    pub input: I,
    pub choice: C,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PpoStats {
    pub clip_fraction: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

/// Normalises advantages to zero mean and unit variance (no-op for one sample).
pub fn normalize_advantages<I, C>(batch: &mut [PpoSample<I, C>]) {
    if batch.len() < 2 {
        return;
    }
    let n = batch.len() as f64;
    let mean = batch.iter().map(|s| s.advantage).sum::<f64>() / n;
    let var = batch.iter().map(|s| (s.advantage - mean) * (s.advantage - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var);
    for s in batch.iter_mut() {
        s.advantage = if std > 1e-12 { (s.advantage - mean) / std } else { s.advantage - mean };
    }
}

/// Clipped-surrogate PPO over `cfg.epochs` passes of shuffled minibatches.
pub fn ppo_update<D: Differentiable, R: Rng>(
    model: &mut D,
    opt: &mut Adam,
    batch: &mut [PpoSample<D::Input, D::Choice>],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<PpoStats, TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    normalize_advantages(batch);
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut stats = PpoStats::default();
    let mut count = 0usize;
    let mut grad = vec![0.0; model.params().len()];
    for _ in 0..cfg.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / chunk.len() as f64;
            for &k in chunk {
                let s = &batch[k];
                let e = model.evaluate(&s.input, &s.choice, None);
                let ratio = libm::exp(e.log_prob - s.old_log_prob);
                let clipped = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip);
                let unclipped_obj = ratio * s.advantage;
                let clipped_obj = clipped * s.advantage;
                let objective = unclipped_obj.min(clipped_obj);
                let value_err = e.value - s.ret;
                let loss = -objective + cfg.value_coef * value_err * value_err - cfg.entropy_coef * e.entropy;
                if !loss.is_finite() {
                    return Err(TrainError::NonFiniteLoss { loss, sample: k });
                }
                // d(-min(rA, clip(r)A))/dlogp is -rA when the unclipped term is active
                let w_lp = if unclipped_obj <= clipped_obj { -unclipped_obj } else { 0.0 };
                let w = Weights {
                    log_prob: w_lp * scale,
                    entropy: -cfg.entropy_coef * scale,
                    value: 2.0 * cfg.value_coef * value_err * scale,
                };
                model.evaluate(&s.input, &s.choice, Some((&mut grad, w)));
                stats.clip_fraction += (libm::fabs(ratio - 1.0) > cfg.clip) as u8 as f64;
                stats.policy_loss -= objective;
                stats.value_loss += value_err * value_err;
                stats.entropy += e.entropy;
                count += 1;
            }
            opt.step(model.params_mut(), &grad);
        }
    }
    let n = count.max(1) as f64;
    stats.clip_fraction /= n;
    stats.policy_loss /= n;
    stats.value_loss /= n;
    stats.entropy /= n;
    Ok(stats)
}

/// Log-softmax probabilities and entropy of a logit vector.
pub(crate) fn softmax(logits: &[f64], probs: &mut [f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (p, &z) in probs.iter_mut().zip(logits) {
        *p = libm::exp(z - max);
        sum += *p;
    }
    let mut entropy = 0.0;
    for p in probs.iter_mut() {
        *p /= sum;
        if *p > 0.0 {
            entropy -= *p * libm::log(*p);
        }
    }
    entropy
}

/// Gradient of `w_lp * log p[choice] + w_ent * H` with respect to the logits.
pub(crate) fn softmax_grad(probs: &[f64], entropy: f64, choice: usize, w: &Weights, out: &mut [f64]) {
    for (j, (&p, o)) in probs.iter().zip(out.iter_mut()).enumerate() {
        let onehot = (j == choice) as u8 as f64;
        let dh = if p > 0.0 { -p * (libm::log(p) + entropy) } else { 0.0 };
        *o = w.log_prob * (onehot - p) + w.entropy * dh;
    }
}

/// Two-or-more armed softmax bandit with a scalar value baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxBandit {
    /// Arm logits followed by the value estimate.
    pub params: Vec<f64>,
}

impl SoftmaxBandit {
    pub fn new(arms: usize) -> Self {
        SoftmaxBandit { params: vec![0.0; arms + 1] }
    }

    pub fn arms(&self) -> usize {
        self.params.len() - 1
    }

    pub fn probs(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.arms()];
        softmax(&self.params[..self.arms()], &mut p);
        p
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let p = self.probs();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, q) in p.iter().enumerate() {
            acc += q;
            if u < acc {
                return i;
            }
        }
        p.len() - 1
    }
}

impl Differentiable for SoftmaxBandit {
    type Input = ();
    type Choice = usize;

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn evaluate(&self, _: &(), choice: &usize, grad: Option<(&mut [f64], Weights)>) -> Eval {
        let k = self.arms();
        let mut p = vec![0.0; k];
        let entropy = softmax(&self.params[..k], &mut p);
        let value = self.params[k];
        if let Some((g, w)) = grad {
            let mut dz = vec![0.0; k];
            softmax_grad(&p, entropy, *choice, &w, &mut dz);
            for j in 0..k {
                g[j] += dz[j];
            }
            g[k] += w.value;
        }
        Eval { log_prob: libm::log(p[*choice]), entropy, value }
    }
}
