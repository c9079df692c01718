//! A small parametric policy: one tanh hidden layer over sparse features,
//! with direct linear paths from the features to every head.
//!
//! Heads: the formula template factorised into slot permutation (24), three
//! operators (4 each) and tree shape (5); a per-card number head (14 values)
//! reading only the card's rank and the rule flag; a 14-slot navigation head
//! masked to the active action space; and a scalar value head.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::choice::{render_choice, Choice, GpChoice, NUMBER_CLASSES};
use super::features::{featurize, FeatureConfig, Features, DIM};
use super::train::{softmax, softmax_grad, Differentiable, Eval, Weights};
use crate::nav::{ActionSpace, NUM_ACTION_SLOTS};
use crate::revision::{Act, Observation, Policy, PolicyError};
use crate::seed::rng_from_seed;

pub const HIDDEN: usize = 64;
/// Template logits: permutation, three operators, shape.
pub const TEMPLATE_GROUPS: [(usize, usize); 5] = [(0, 24), (24, 4), (28, 4), (32, 4), (36, 5)];
pub const TEMPLATE_LOGITS: usize = 41;
const NUMBER_INPUTS: usize = 13 + 2;

/// Offsets of each parameter block in the flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    w1: usize,
    b1: usize,
    wt: usize,
    bt: usize,
    vt: usize,
    wn: usize,
    bn: usize,
    vn: usize,
    wv: usize,
    bv: usize,
    uv: usize,
    wnum: usize,
    bnum: usize,
    total: usize,
}

impl Layout {
    const fn new() -> Self {
        let w1 = 0;
        let b1 = w1 + DIM * HIDDEN;
        let wt = b1 + HIDDEN;
        let bt = wt + TEMPLATE_LOGITS * HIDDEN;
        let vt = bt + TEMPLATE_LOGITS;
        let wn = vt + DIM * TEMPLATE_LOGITS;
        let bn = wn + NUM_ACTION_SLOTS * HIDDEN;
        let vn = bn + NUM_ACTION_SLOTS;
        let wv = vn + DIM * NUM_ACTION_SLOTS;
        let bv = wv + HIDDEN;
        let uv = bv + 1;
        let wnum = uv + DIM;
        let bnum = wnum + NUMBER_INPUTS * NUMBER_CLASSES;
        let total = bnum + NUMBER_CLASSES;
        Layout { w1, b1, wt, bt, vt, wn, bn, vn, wv, bv, uv, wnum, bnum, total }
    }
}

const LAYOUT: Layout = Layout::new();
pub const NUM_PARAMS: usize = LAYOUT.total;

/// Parameters of the tiny policy as one flat vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TinyParams {
    pub values: Vec<f64>,
}

impl TinyParams {
    /// Small random hidden weights; every head starts at zero (uniform).
    pub fn init(seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut values = vec![0.0; NUM_PARAMS];
        let scale = 0.1;
        for v in &mut values[LAYOUT.w1..LAYOUT.b1] {
            *v = (rng.random::<f64>() * 2.0 - 1.0) * scale;
        }
        TinyParams { values }
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self, PolicyError> {
        if values.len() != NUM_PARAMS {
            return Err(PolicyError::DimensionMismatch { expected: NUM_PARAMS, found: values.len() });
        }
        Ok(TinyParams { values })
    }
}

/// Forward pass intermediates.
struct Forward {
    h: [f64; HIDDEN],
    template: [f64; TEMPLATE_LOGITS],
    nav: [f64; NUM_ACTION_SLOTS],
    value: f64,
}

impl TinyParams {
    fn check(&self, x: &Features) -> Result<(), PolicyError> {
        if let Some(&(i, _)) = x.sparse.iter().find(|e| e.0 as usize >= DIM) {
            return Err(PolicyError::DimensionMismatch { expected: DIM, found: i as usize + 1 });
        }
        Ok(())
    }

    fn forward(&self, x: &Features) -> Forward {
        let p = &self.values;
        let l = &LAYOUT;
        let mut a = [0.0; HIDDEN];
        a.copy_from_slice(&p[l.b1..l.b1 + HIDDEN]);
        for &(i, v) in &x.sparse {
            let row = &p[l.w1 + i as usize * HIDDEN..][..HIDDEN];
            for k in 0..HIDDEN {
                a[k] += row[k] * v;
            }
        }
        let h = a.map(libm::tanh);
        let mut template = [0.0; TEMPLATE_LOGITS];
        let mut nav = [0.0; NUM_ACTION_SLOTS];
        let mut value = p[l.bv];
        if x.cards.is_some() {
            head(p, l.wt, l.bt, l.vt, &h, x, &mut template);
        }
        if x.space.is_some() {
            head(p, l.wn, l.bn, l.vn, &h, x, &mut nav);
        }
        for k in 0..HIDDEN {
            value += p[l.wv + k] * h[k];
        }
        for &(i, v) in &x.sparse {
            value += p[l.uv + i as usize] * v;
        }
        Forward { h, template, nav, value }
    }

    fn number_logits(&self, rank: u8, rule: u8) -> [f64; NUMBER_CLASSES] {
        let p = &self.values;
        let l = &LAYOUT;
        let mut z = [0.0; NUMBER_CLASSES];
        for (c, zc) in z.iter_mut().enumerate() {
            *zc = p[l.bnum + c]
                + p[l.wnum + rank as usize * NUMBER_CLASSES + c]
                + p[l.wnum + (13 + rule as usize) * NUMBER_CLASSES + c];
        }
        z
    }
}

/// `out = W h + b + V^T x` with `W` stored row-major (out x HIDDEN) and `V` (DIM x out).
fn head(p: &[f64], w: usize, b: usize, v: usize, h: &[f64; HIDDEN], x: &Features, out: &mut [f64]) {
    let n = out.len();
    for (j, o) in out.iter_mut().enumerate() {
        let row = &p[w + j * HIDDEN..][..HIDDEN];
        *o = p[b + j] + row.iter().zip(h).map(|(a, b)| a * b).sum::<f64>();
    }
    for &(i, xv) in &x.sparse {
        let row = &p[v + i as usize * n..][..n];
        for j in 0..n {
            out[j] += row[j] * xv;
        }
    }
}

/// Accumulates the gradient of a head and returns its contribution to dL/dh.
fn head_backward(g: &mut [f64], p: &[f64], w: usize, b: usize, v: usize, h: &[f64; HIDDEN], x: &Features, dz: &[f64], dh: &mut [f64; HIDDEN]) {
    let n = dz.len();
    for (j, &d) in dz.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        g[b + j] += d;
        let row = w + j * HIDDEN;
        for k in 0..HIDDEN {
            g[row + k] += d * h[k];
            dh[k] += d * p[row + k];
        }
    }
    for &(i, xv) in &x.sparse {
        let row = v + i as usize * n;
        for j in 0..n {
            g[row + j] += dz[j] * xv;
        }
    }
}

fn masked(logits: &[f64; NUM_ACTION_SLOTS], space: ActionSpace) -> [f64; NUM_ACTION_SLOTS] {
    let mut z = [f64::NEG_INFINITY; NUM_ACTION_SLOTS];
    for &i in space.active() {
        z[i] = logits[i];
    }
    z
}

impl Differentiable for TinyParams {
    type Input = Features;
    type Choice = Choice;

    fn params(&self) -> &[f64] {
        &self.values
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn evaluate(&self, x: &Features, choice: &Choice, grad: Option<(&mut [f64], Weights)>) -> Eval {
        let f = self.forward(x);
        let l = &LAYOUT;
        let mut log_prob = 0.0;
        let mut entropy = 0.0;
        let mut grad = grad;
        let mut dh = [0.0; HIDDEN];
        match (choice, x.cards, x.space) {
            (Choice::Gp(c), Some(cards), _) => {
                let picks = [c.perm as usize, c.ops[0] as usize, c.ops[1] as usize, c.ops[2] as usize, c.shape as usize];
                let mut dz = [0.0; TEMPLATE_LOGITS];
                for (&(off, len), &pick) in TEMPLATE_GROUPS.iter().zip(&picks) {
                    let mut probs = [0.0; 24];
                    let hg = softmax(&f.template[off..off + len], &mut probs[..len]);
                    log_prob += libm::log(probs[pick]);
                    entropy += hg;
                    if let Some((_, w)) = grad.as_ref() {
                        softmax_grad(&probs[..len], hg, pick, w, &mut dz[off..off + len]);
                    }
                }
                if let Some((g, _)) = grad.as_mut() {
                    head_backward(g, &self.values, l.wt, l.bt, l.vt, &f.h, x, &dz, &mut dh);
                }
                for (k, &(rank, rule)) in cards.iter().enumerate() {
                    let z = self.number_logits(rank, rule);
                    let mut probs = [0.0; NUMBER_CLASSES];
                    let hg = softmax(&z, &mut probs);
                    let pick = (c.numbers[k] as usize).min(NUMBER_CLASSES - 1);
                    log_prob += libm::log(probs[pick]);
                    entropy += hg;
                    if let Some((g, w)) = grad.as_mut() {
                        let mut dzn = [0.0; NUMBER_CLASSES];
                        softmax_grad(&probs, hg, pick, w, &mut dzn);
                        for (cls, &d) in dzn.iter().enumerate() {
                            g[l.bnum + cls] += d;
                            g[l.wnum + rank as usize * NUMBER_CLASSES + cls] += d;
                            g[l.wnum + (13 + rule as usize) * NUMBER_CLASSES + cls] += d;
                        }
                    }
                }
            }
            (Choice::Nav { slot }, _, Some(space)) => {
                let z = masked(&f.nav, space);
                let mut probs = [0.0; NUM_ACTION_SLOTS];
                let hg = softmax(&z, &mut probs);
                let pick = *slot as usize;
                log_prob = if pick < NUM_ACTION_SLOTS { libm::log(probs[pick]) } else { f64::NEG_INFINITY };
                entropy = hg;
                if let Some((g, w)) = grad.as_mut() {
                    let mut dz = [0.0; NUM_ACTION_SLOTS];
                    softmax_grad(&probs, hg, pick, w, &mut dz);
                    head_backward(g, &self.values, l.wn, l.bn, l.vn, &f.h, x, &dz, &mut dh);
                }
            }
            _ => log_prob = f64::NEG_INFINITY,
        }
        if let Some((g, w)) = grad {
            if w.value != 0.0 {
                g[l.bv] += w.value;
                for k in 0..HIDDEN {
                    g[l.wv + k] += w.value * f.h[k];
                    dh[k] += w.value * self.values[l.wv + k];
                }
                for &(i, xv) in &x.sparse {
                    g[l.uv + i as usize] += w.value * xv;
                }
            }
            let mut da = [0.0; HIDDEN];
            for k in 0..HIDDEN {
                da[k] = dh[k] * (1.0 - f.h[k] * f.h[k]);
            }
            if da.iter().any(|&d| d != 0.0) {
                for k in 0..HIDDEN {
                    g[l.b1 + k] += da[k];
                }
                for &(i, xv) in &x.sparse {
                    let row = l.w1 + i as usize * HIDDEN;
                    for k in 0..HIDDEN {
                        g[row + k] += da[k] * xv;
                    }
                }
            }
        }
        Eval { log_prob, entropy, value: f.value }
    }
}

/// How the policy turns distributions into choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActMode {
    Sample,
    Greedy,
}

fn pick<R: Rng>(probs: &[f64], mode: ActMode, rng: &mut R) -> usize {
    match mode {
        ActMode::Greedy => {
            let mut best = 0;
            for (i, &p) in probs.iter().enumerate() {
                if p > probs[best] {
                    best = i;
                }
            }
            best
        }
        ActMode::Sample => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut last = 0;
            for (i, &p) in probs.iter().enumerate() {
                if p > 0.0 {
                    acc += p;
                    last = i;
                    if u < acc {
                        return i;
                    }
                }
            }
            last
        }
    }
}

impl TinyParams {
    /// Chooses components for a feature vector.
    pub fn choose<R: Rng>(&self, x: &Features, mode: ActMode, rng: &mut R) -> Result<Choice, PolicyError> {
        self.check(x)?;
        let f = self.forward(x);
        if let Some(cards) = x.cards {
            let mut picks = [0u8; 5];
            for (k, &(off, len)) in TEMPLATE_GROUPS.iter().enumerate() {
                let mut probs = [0.0; 24];
                softmax(&f.template[off..off + len], &mut probs[..len]);
                picks[k] = pick(&probs[..len], mode, rng) as u8;
            }
            let mut numbers = [0u8; 4];
            for (k, &(rank, rule)) in cards.iter().enumerate() {
                let mut probs = [0.0; NUMBER_CLASSES];
                softmax(&self.number_logits(rank, rule), &mut probs);
                numbers[k] = pick(&probs, mode, rng) as u8;
            }
            return Ok(Choice::Gp(GpChoice {
                numbers,
                perm: picks[0],
                ops: [picks[1], picks[2], picks[3]],
                shape: picks[4],
            }));
        }
        if let Some(space) = x.space {
            let mut probs = [0.0; NUM_ACTION_SLOTS];
            softmax(&masked(&f.nav, space), &mut probs);
            return Ok(Choice::Nav { slot: pick(&probs, mode, rng) as u8 });
        }
        Err(PolicyError::Unsupported)
    }
}

/// The tiny policy bound to a feature configuration, an act mode and an RNG.
#[derive(Debug, Clone)]
pub struct TinyPolicy {
    pub params: TinyParams,
    pub features: FeatureConfig,
    pub mode: ActMode,
    rng: rand_chacha::ChaCha8Rng,
}

impl TinyPolicy {
    pub fn new(params: TinyParams, features: FeatureConfig, mode: ActMode, seed: u64) -> Self {
        TinyPolicy { params, features, mode, rng: rng_from_seed(seed) }
    }

    pub fn reseed(&mut self, seed: u64) {
        self.rng = rng_from_seed(seed);
    }
}

impl Policy for TinyPolicy {
    fn act(&mut self, obs: &Observation<'_>) -> Result<Act, PolicyError> {
        let x = featurize(obs.snapshot, &self.features);
        let choice = self.params.choose(&x, self.mode, &mut self.rng)?;
        let e = self.params.evaluate(&x, &choice, None);
        let text = render_choice(obs.snapshot, &choice).ok_or(PolicyError::Unsupported)?;
        Ok(Act { text, log_prob: e.log_prob, value: e.value, choice: Some(choice) })
    }

    fn is_deterministic(&self) -> bool {
        self.mode == ActMode::Greedy
    }
}
