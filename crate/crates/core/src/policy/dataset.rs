//! Supervised data: prompts paired with expert responses.
//!
//! Single-turn records pair a fresh context with the expert answer. Sub-optimal
//! records first inject sampled wrong attempts (with their verifier messages)
//! into the prompt, then pair it with the expert answer for the same state.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::baselines::RandomPolicy;
use super::choice::{expert_choice, render_choice, Choice};
use crate::revision::{build_prompt, prompt_hash, Environment, Snapshot, Transcript, Turn};
use crate::seed::{derive_seed, rng_from_seed};
use crate::task::{AnyEnv, EnvError, EnvSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SftMode {
    ExpertSingleTurn,
    SubOptimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftRecord {
    pub prompt: String,
    pub target: String,
    pub snapshot: Snapshot,
    pub choice: Choice,
}

/// Most wrong attempts injected before a GP expert turn.
pub const MAX_INJECTED: usize = 3;

fn record_step(env: &mut AnyEnv, transcript: &mut Transcript, output: String) -> bool {
    let prompt = build_prompt(transcript, transcript.turns.len());
    let out = env.step(&output).expect("stepping a live episode");
    transcript.turns.push(Turn {
        output,
        verifier: out.verifier,
        reward: out.reward,
        penalty: out.penalty,
        correct: out.correct,
        verdict: out.verdict,
        next_context: out.next_context,
        prompt_hash: prompt_hash(&prompt),
    });
    out.correct
}

fn expert_record(env: &AnyEnv, transcript: &Transcript) -> SftRecord {
    let snapshot = env.snapshot();
    let choice = expert_choice(&snapshot).expect("environment states have an expert answer");
    let target = render_choice(&snapshot, &choice).expect("expert choice fits its snapshot");
    SftRecord { prompt: build_prompt(transcript, transcript.turns.len()), target, snapshot, choice }
}

/// A sampled wrong answer for the current state.
fn wrong_answer<R: Rng>(env: &AnyEnv, random: &mut RandomPolicy, rng: &mut R) -> String {
    let snapshot = env.snapshot();
    loop {
        let (mut choice, _) = random.choose(&snapshot);
        if let (Choice::Gp(c), true) = (&mut choice, rng.random_bool(0.5)) {
            let k = rng.random_range(0..4);
            c.numbers[k] = (c.numbers[k] % 13) + 1;
        }
        let text = render_choice(&snapshot, &choice).expect("random choice fits its snapshot");
        let wrong = match env {
            AnyEnv::Gp(g) => !g.judge(&text).is_success(),
            AnyEnv::Nav(_) => Some(choice) != expert_choice(&snapshot),
        };
        if wrong {
            return text;
        }
    }
}

/// Builds `count` records from episodes seeded by `derive_seed(seed, i)`.
///
/// In sub-optimal mode the verification budget is raised so the injected
/// attempts never end the episode.
pub fn make_sft_records(spec: &EnvSpec, count: usize, mode: SftMode, seed: u64) -> Result<Vec<SftRecord>, EnvError> {
    let spec = match (mode, spec) {
        (SftMode::SubOptimal, EnvSpec::Gp { rule }) if rule.max_steps <= MAX_INJECTED => {
            spec.clone().with_verification(MAX_INJECTED + 1)
        }
        (SftMode::SubOptimal, EnvSpec::Nav { nav, .. }) if nav.max_attempts < 2 => spec.clone().with_verification(2),
        _ => spec.clone(),
    };
    let mut rng = rng_from_seed(derive_seed(seed, u64::MAX));
    let mut random = RandomPolicy::new(derive_seed(seed, u64::MAX - 1));
    let mut records = Vec::with_capacity(count);
    let mut episode = 0u64;
    while records.len() < count {
        let mut env = spec.make(derive_seed(seed, episode))?;
        episode += 1;
        let mut transcript = Transcript::new(env.context());
        match (&env, mode) {
            (AnyEnv::Gp(_), SftMode::ExpertSingleTurn) => records.push(expert_record(&env, &transcript)),
            (AnyEnv::Gp(_), SftMode::SubOptimal) => {
                let k = rng.random_range(1..=MAX_INJECTED);
                for _ in 0..k {
                    let text = wrong_answer(&env, &mut random, &mut rng);
                    record_step(&mut env, &mut transcript, text);
                }
                records.push(expert_record(&env, &transcript));
            }
            (AnyEnv::Nav(_), _) => {
                let scenes = match &env {
                    AnyEnv::Nav(n) => n.route().expert.len(),
                    AnyEnv::Gp(_) => unreachable!(),
                };
                let inject_at = rng.random_range(0..scenes);
                let mut scene = 0;
                while !env.is_done() && records.len() < count {
                    if mode == SftMode::ExpertSingleTurn || scene == inject_at {
                        if mode == SftMode::SubOptimal {
                            let text = wrong_answer(&env, &mut random, &mut rng);
                            record_step(&mut env, &mut transcript, text);
                        }
                        records.push(expert_record(&env, &transcript));
                    }
                    let text = env.expert_response();
                    record_step(&mut env, &mut transcript, text);
                    scene += 1;
                }
            }
        }
    }
    Ok(records)
}
