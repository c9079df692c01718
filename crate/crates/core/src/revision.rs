//! Sequential-revision episodes.
//!
//! The prompt at turn `t` is the current context followed by every model
//! output and verifier message recorded since that context was set, joined
//! with single newlines. GeneralPoints never replaces its context, so its
//! prompt is the system prompt plus all prior (output, verifier) pairs.
//! Navigation replaces the context after each correct action (the agent moves
//! to the next scene), so wrong attempts only accumulate within one scene.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::gp::GpSnapshot;
use crate::nav::NavSnapshot;
use crate::policy::Choice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Success,
    StepLimit,
    Failure,
}

/// Structured state handed to policies alongside the prompt text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "snake_case")]
pub enum Snapshot {
    Gp(GpSnapshot),
    Nav(NavSnapshot),
}

/// Result of one verifier call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    /// Reward of the attempt itself.
    pub reward: f64,
    /// Terminal penalty applied on budget exhaustion (0 otherwise).
    pub penalty: f64,
    pub verifier: String,
    pub done: bool,
    pub correct: bool,
    /// Verdict label, e.g. `wrong_value` or `incorrect_action`.
    pub verdict: String,
    /// New context that replaces the prompt base for the following turn.
    pub next_context: Option<String>,
    pub status: Option<EpisodeStatus>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum StepError {
    #[error("episode already finished")]
    EpisodeOver,
}

/// A verifier-backed text environment.
pub trait Environment {
    /// Context the next prompt is built on (initially the system prompt).
    fn context(&self) -> &str;
    fn step(&mut self, output: &str) -> Result<StepOutcome, StepError>;
    fn is_done(&self) -> bool;
    fn snapshot(&self) -> Snapshot;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub output: String,
    pub verifier: String,
    pub reward: f64,
    pub penalty: f64,
    pub correct: bool,
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_context: Option<String>,
    /// Hex sha256 of the prompt the policy saw for this turn.
    pub prompt_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub system_prompt: String,
    pub turns: Vec<Turn>,
    pub status: Option<EpisodeStatus>,
}

impl Transcript {
    pub fn new(system_prompt: impl Into<String>) -> Self {
        Transcript { system_prompt: system_prompt.into(), turns: Vec::new(), status: None }
    }

    /// Sum of rewards and penalties over all turns.
    pub fn episode_return(&self) -> f64 {
        self.turns.iter().map(|t| t.reward + t.penalty).sum()
    }

    pub fn any_correct(&self) -> bool {
        self.turns.iter().any(|t| t.correct)
    }

    /// Checks every stored prompt hash against the reconstructed prompt.
    pub fn verify_hashes(&self) -> Result<(), usize> {
        for (t, turn) in self.turns.iter().enumerate() {
            if prompt_hash(&build_prompt(self, t)) != turn.prompt_hash {
                return Err(t);
            }
        }
        Ok(())
    }
}

pub fn prompt_hash(prompt: &str) -> String {
    let digest = Sha256::digest(prompt.as_bytes());
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Prompt the policy receives at turn `t` (clamped to the recorded turns).
pub fn build_prompt(transcript: &Transcript, t: usize) -> String {
    let mut base: &str = &transcript.system_prompt;
    let mut from = 0;
    let t = t.min(transcript.turns.len());
    for (k, turn) in transcript.turns[..t].iter().enumerate() {
        if let Some(ctx) = &turn.next_context {
            base = ctx;
            from = k + 1;
        }
    }
    let mut out = base.to_string();
    for turn in &transcript.turns[from..t] {
        out.push('\n');
        out.push_str(&turn.output);
        out.push('\n');
        out.push_str(&turn.verifier);
    }
    out
}

/// What a policy sees before acting.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub prompt: &'a str,
    pub snapshot: &'a Snapshot,
    pub transcript: &'a Transcript,
}

/// A policy decision: the text submitted plus scoring information.
#[derive(Debug, Clone, PartialEq)]
pub struct Act {
    pub text: String,
    pub log_prob: f64,
    pub value: f64,
    /// Structured components, present for parametric policies.
    pub choice: Option<Choice>,
}

impl Act {
    pub fn text(text: impl Into<String>) -> Self {
        Act { text: text.into(), log_prob: 0.0, value: 0.0, choice: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("policy cannot act on this environment")]
    Unsupported,
    #[error("feature dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("policy failure: {0}")]
    Other(String),
}

pub trait Policy {
    fn act(&mut self, obs: &Observation<'_>) -> Result<Act, PolicyError>;

    /// True when `act` is a pure function of its input.
    fn is_deterministic(&self) -> bool {
        false
    }
}

impl<P: Policy + ?Sized> Policy for &mut P {
    fn act(&mut self, obs: &Observation<'_>) -> Result<Act, PolicyError> {
        (**self).act(obs)
    }

    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}

/// One recorded decision, for trainers.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub snapshot: Snapshot,
    pub act: Act,
    pub reward: f64,
}

/// Runs an episode to completion. A policy error is submitted as empty text.
pub fn run_episode<E: Environment + ?Sized, P: Policy + ?Sized>(env: &mut E, policy: &mut P) -> Transcript {
    run_episode_traced(env, policy).0
}

/// As [`run_episode`], also returning the per-turn decisions.
pub fn run_episode_traced<E: Environment + ?Sized, P: Policy + ?Sized>(
    env: &mut E,
    policy: &mut P,
) -> (Transcript, Vec<Step>) {
    let mut transcript = Transcript::new(env.context());
    let mut steps = Vec::new();
    while !env.is_done() {
        let prompt = build_prompt(&transcript, transcript.turns.len());
        let snapshot = env.snapshot();
        let act = {
            let obs = Observation { prompt: &prompt, snapshot: &snapshot, transcript: &transcript };
            policy.act(&obs).unwrap_or_else(|_| Act::text(""))
        };
        let Ok(outcome) = env.step(&act.text) else { break };
        transcript.turns.push(Turn {
            output: act.text.clone(),
            verifier: outcome.verifier,
            reward: outcome.reward,
            penalty: outcome.penalty,
            correct: outcome.correct,
            verdict: outcome.verdict,
            next_context: outcome.next_context,
            prompt_hash: prompt_hash(&prompt),
        });
        steps.push(Step { snapshot, act, reward: outcome.reward + outcome.penalty });
        if outcome.done {
            transcript.status = outcome.status;
        }
    }
    (transcript, steps)
}
