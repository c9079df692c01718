//! Reference policies: the rule-aware expert and a uniform-random policy.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::choice::{expert_choice, render_choice, Choice, GpChoice};
use crate::equation::Rational;
use crate::gp::{Template, NUM_TEMPLATES};
use crate::nav::NavAction;
use crate::revision::{Act, Observation, Policy, PolicyError, Snapshot};
use crate::seed::rng_from_seed;

/// Answers with the solver's formula (GP) or the route's expert action (Nav).
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpertPolicy;

impl Policy for ExpertPolicy {
    fn act(&mut self, obs: &Observation<'_>) -> Result<Act, PolicyError> {
        let choice = expert_choice(obs.snapshot).ok_or(PolicyError::Unsupported)?;
        let text = render_choice(obs.snapshot, &choice).ok_or(PolicyError::Unsupported)?;
        Ok(Act { text, log_prob: 0.0, value: 0.0, choice: Some(choice) })
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// GP: a uniformly drawn formula template over the correct card values.
/// Nav: a uniformly drawn action from the active action space.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy { rng: rng_from_seed(seed) }
    }

    pub fn choose(&mut self, s: &Snapshot) -> (Choice, f64) {
        match s {
            Snapshot::Gp(g) => {
                let t = Template::from_index(self.rng.random_range(0..NUM_TEMPLATES)).expect("index in range");
                let numbers = g.numbers().map(|n| n as u8);
                (Choice::Gp(GpChoice::from_template(numbers, &t)), -libm::log(NUM_TEMPLATES as f64))
            }
            Snapshot::Nav(n) => {
                let active = n.space.active();
                let slot = active[self.rng.random_range(0..active.len())];
                (Choice::Nav { slot: slot as u8 }, -libm::log(active.len() as f64))
            }
        }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, obs: &Observation<'_>) -> Result<Act, PolicyError> {
        let (choice, log_prob) = self.choose(obs.snapshot);
        let text = render_choice(obs.snapshot, &choice).ok_or(PolicyError::Unsupported)?;
        Ok(Act { text, log_prob, value: 0.0, choice: Some(choice) })
    }
}

/// True when a choice matches the expert's decision for the snapshot.
/// GP choices match when they reach the target with the correct values.
pub fn matches_expert(s: &Snapshot, c: &Choice) -> bool {
    match (s, c) {
        (Snapshot::Gp(g), Choice::Gp(c)) => {
            let truth = g.numbers();
            let mut sorted = truth;
            sorted.sort_unstable();
            c.numbers.map(u64::from) == truth
                && c.template().value(&sorted.map(|n| Rational::from_int(n as i64)))
                    == Some(Rational::from_int(g.rule.target as i64))
        }
        (Snapshot::Nav(n), Choice::Nav { slot }) => NavAction::from_slot(*slot as usize) == Some(n.expert_action()),
        _ => false,
    }
}
