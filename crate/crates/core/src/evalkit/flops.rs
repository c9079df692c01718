//! Training-compute estimates: `6ND` per training token and `2ND` per
//! generated token, with rollout generation approximated as `lambda * D_RL`.
//!
//! Everything is evaluated in exact integer arithmetic and rounded once.

use serde::{Deserialize, Serialize};

/// Rollout buffer multiplier as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lambda {
    pub num: u128,
    pub den: u128,
}

impl Lambda {
    pub const GENERAL_POINTS: Lambda = Lambda { num: 6, den: 1 };
    pub const NAVIGATION: Lambda = Lambda { num: 51, den: 10 };

    /// `E * d_in * d_out / D_RL` from the number of generation calls and
    /// mean input/output tokens per call.
    pub fn from_components(calls: u64, mean_input: u64, mean_output: u64, d_rl: u64) -> Option<Lambda> {
        if d_rl == 0 {
            return None;
        }
        Some(Lambda { num: calls as u128 * mean_input as u128 * mean_output as u128, den: d_rl as u128 })
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopsConfig {
    /// Parameter count.
    pub n: u64,
    pub d_init: u64,
    pub d_sft: u64,
    pub d_rl: u64,
    pub lambda: Lambda,
}

/// An exact non-negative rational FLOP count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactFlops {
    pub num: u128,
    pub den: u128,
}

impl ExactFlops {
    pub fn to_f64(self) -> f64 {
        if self.num.is_multiple_of(self.den) {
            (self.num / self.den) as f64
        } else {
            self.num as f64 / self.den as f64
        }
    }
}

pub fn flops_sft_exact(c: &FlopsConfig) -> ExactFlops {
    ExactFlops { num: 6 * c.n as u128 * (c.d_init as u128 + c.d_sft as u128), den: 1 }
}

pub fn flops_rl_exact(c: &FlopsConfig) -> ExactFlops {
    let n = c.n as u128;
    let train = 6 * n * (c.d_init as u128 + c.d_rl as u128);
    let buffer = 2 * n * c.lambda.num * c.d_rl as u128;
    ExactFlops { num: train * c.lambda.den + buffer, den: c.lambda.den }
}

/// `6N(D_init + D_SFT)`.
pub fn flops_sft(c: &FlopsConfig) -> f64 {
    flops_sft_exact(c).to_f64()
}

/// `6N(D_init + D_RL) + 2N * lambda * D_RL`.
pub fn flops_rl(c: &FlopsConfig) -> f64 {
    flops_rl_exact(c).to_f64()
}
