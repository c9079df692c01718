use alloc::vec::Vec;

use rand::Rng;

use super::cards::{deck, Card};
use super::rules::{map_card, RuleConfig, RuleError, Sampling};
use super::solver::solve;
use crate::seed::rng_from_seed;

/// Rejection-sampling budget per call.
pub const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SampleError {
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("no solvable hand found in {MAX_ATTEMPTS} attempts")]
    SamplingExhausted,
}

pub fn numbers_of(cards: &[Card; 4], rule: &RuleConfig) -> [u64; 4] {
    cards.map(|c| map_card(c.rank, rule.face_rule))
}

/// Draws four distinct cards admitted by the rule, re-drawing until the hand
/// is solvable (and contains a face card when the sampling mode asks for one).
pub fn sample_quadruple(seed: u64, rule: &RuleConfig) -> Result<[Card; 4], SampleError> {
    rule.validate()?;
    let mut pool: Vec<Card> = deck().filter(|c| rule.colors.admits(c)).collect();
    let mut rng = rng_from_seed(seed);
    for _ in 0..MAX_ATTEMPTS {
        // partial Fisher-Yates over the first four slots
        for i in 0..4 {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        let hand = [pool[0], pool[1], pool[2], pool[3]];
        if rule.sampling == Sampling::AtLeastOneFace && !hand.iter().any(|c| c.rank.is_face()) {
            continue;
        }
        if solve(&numbers_of(&hand, rule), rule.target).is_some() {
            return Ok(hand);
        }
    }
    Err(SampleError::SamplingExhausted)
}
