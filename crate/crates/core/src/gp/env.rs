use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::cards::Card;
use super::rules::{FaceRule, Modality, RuleConfig};
use super::sampling::{numbers_of, sample_quadruple, SampleError};
use super::solver::solve;
use crate::answer::parse_gp_answer;
use crate::equation::{classify, GpAnswer, GpTruth, Verdict, VerdictClass};
use crate::revision::{Environment, EpisodeStatus, Snapshot, StepError, StepOutcome};

pub const PROMPT_TEMPLATE: &str = include_str!("../../assets/gp_prompt.v1.txt");
pub const FAILURE_TEXT: &str = "You failed this trial because your formula is incorrect.";
pub const SUCCESS_TEXT: &str = "You succeeded in this trial because your formula is correct.";

pub const RULE_TEXT_ALL_TEN: &str = "'J', 'Q', and 'K' count as '10'";
pub const RULE_TEXT_ORDINAL: &str = "'J', 'Q', and 'K' count as '11', '12', and '13' respectively";

/// Per-class counts of earlier failed attempts: wrong value, illegal numbers, malformed.
pub type FailureCounts = [u32; 3];

fn failure_slot(class: VerdictClass) -> Option<usize> {
    match class {
        VerdictClass::WrongValue => Some(0),
        VerdictClass::IllegalNumbers => Some(1),
        VerdictClass::Malformed => Some(2),
        _ => None,
    }
}

/// What a policy may know about a GeneralPoints state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GpSnapshot {
    pub cards: [Card; 4],
    pub rule: RuleConfig,
    pub t: usize,
    pub failures: FailureCounts,
}

impl GpSnapshot {
    pub fn numbers(&self) -> [u64; 4] {
        numbers_of(&self.cards, &self.rule)
    }

    pub fn symbols(&self) -> [&'static str; 4] {
        self.cards.map(|c| c.rank.symbol())
    }
}

fn card_list(cards: &[Card; 4]) -> String {
    let items: Vec<String> = cards.iter().map(|c| format!("'{}'", c.rank.symbol())).collect();
    format!("[{}]", items.join(", "))
}

pub fn render_prompt(rule: &RuleConfig, cards: &[Card; 4]) -> String {
    let rule_text = match rule.face_rule {
        FaceRule::AllTen => RULE_TEXT_ALL_TEN,
        FaceRule::Ordinal => RULE_TEXT_ORDINAL,
    };
    let input = match rule.modality {
        Modality::Language => format!("[Input]\nCards: {}\n\n", card_list(cards)),
        Modality::VisionLanguage => String::new(),
    };
    PROMPT_TEMPLATE
        .replace("{rule}", rule_text)
        .replace("{target}", &rule.target.to_string())
        .replace("{input}", &input)
}

/// Renders an answer in the response layout of the reference transcripts.
pub fn render_answer(cards: &[&str; 4], numbers: &[i64; 4], formula: &str) -> String {
    let cards: Vec<String> = cards.iter().map(|s| format!("'{s}'")).collect();
    let numbers: Vec<String> = numbers.iter().map(|n| n.to_string()).collect();
    format!(
        "{{\n\"cards\": [{}],\n\"number\": [{}],\n\"formula\": \"{}\",\n}}",
        cards.join(", "),
        numbers.join(", "),
        formula
    )
}

/// Expert answer for a snapshot; `None` only for unsolvable hands.
pub fn expert_response(s: &GpSnapshot) -> Option<String> {
    let numbers = s.numbers();
    let sol = solve(&numbers, s.rule.target)?;
    let formula = format!("{}={}", sol.expr, s.rule.target);
    Some(render_answer(&s.symbols(), &numbers.map(|n| n as i64), &formula))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum GpError {
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("hand has no solution for the target")]
    Unsolvable,
}

#[derive(Debug, Clone)]
pub struct GpEnv {
    rule: RuleConfig,
    cards: [Card; 4],
    prompt: String,
    t: usize,
    failures: FailureCounts,
    done: bool,
    last: Option<Verdict>,
}

impl GpEnv {
    pub fn reset(rule: RuleConfig, seed: u64) -> Result<Self, GpError> {
        let cards = sample_quadruple(seed, &rule)?;
        Ok(Self::with_cards(rule, cards))
    }

    /// Environment over a given hand; fails if the hand cannot reach the target.
    pub fn from_cards(rule: RuleConfig, cards: [Card; 4]) -> Result<Self, GpError> {
        rule.validate().map_err(SampleError::from)?;
        if solve(&numbers_of(&cards, &rule), rule.target).is_none() {
            return Err(GpError::Unsolvable);
        }
        Ok(Self::with_cards(rule, cards))
    }

    fn with_cards(rule: RuleConfig, cards: [Card; 4]) -> Self {
        let prompt = render_prompt(&rule, &cards);
        GpEnv { rule, cards, prompt, t: 0, failures: [0; 3], done: false, last: None }
    }

    pub fn rule(&self) -> &RuleConfig {
        &self.rule
    }

    pub fn cards(&self) -> &[Card; 4] {
        &self.cards
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn last_verdict(&self) -> Option<Verdict> {
        self.last
    }

    pub fn truth(&self) -> GpTruth {
        GpTruth {
            legal_numbers: numbers_of(&self.cards, &self.rule),
            card_symbols: self.cards.map(|c| c.rank.symbol().to_string()),
            target: self.rule.target,
            recognition_channel: self.rule.recognition_channel,
        }
    }

    pub fn gp_snapshot(&self) -> GpSnapshot {
        GpSnapshot { cards: self.cards, rule: self.rule, t: self.t, failures: self.failures }
    }

    pub fn expert_response(&self) -> String {
        expert_response(&self.gp_snapshot()).expect("environment hands are solvable")
    }

    /// Classifies raw model output; text without a readable object is malformed.
    pub fn judge(&self, output: &str) -> Verdict {
        let answer = parse_gp_answer(output).unwrap_or_else(|_| GpAnswer::default());
        classify(&answer, &self.truth())
    }
}

impl Environment for GpEnv {
    fn context(&self) -> &str {
        &self.prompt
    }

    fn step(&mut self, output: &str) -> Result<StepOutcome, StepError> {
        if self.done {
            return Err(StepError::EpisodeOver);
        }
        let verdict = self.judge(output);
        self.last = Some(verdict);
        self.t += 1;
        let success = verdict.is_success();
        if let Some(slot) = failure_slot(verdict.class) {
            self.failures[slot] += 1;
        }
        let exhausted = !success && self.t >= self.rule.max_steps;
        self.done = success || exhausted;
        let status = if success {
            Some(EpisodeStatus::Success)
        } else if exhausted {
            Some(EpisodeStatus::StepLimit)
        } else {
            None
        };
        Ok(StepOutcome {
            reward: verdict.reward,
            penalty: if exhausted { VerdictClass::StepLimit.reward() } else { 0.0 },
            verifier: if success { SUCCESS_TEXT } else { FAILURE_TEXT }.to_string(),
            done: self.done,
            correct: success,
            verdict: verdict.class.name().to_string(),
            next_context: None,
            status,
        })
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot::Gp(self.gp_snapshot())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::cards::{Rank, Suit};

    fn fig_hand() -> [Card; 4] {
        [
            Card::new(Rank::Ace, Suit::Spade),
            Card::new(Rank::Three, Suit::Heart),
            Card::new(Rank::King, Suit::Club),
            Card::new(Rank::Six, Suit::Diamond),
        ]
    }

    const FIG_OUTPUT: &str = "{\n\"cards\": ['A', '3', 'K', '6'],\n\"number\": [1, 3, 13, 6],\n\"formula\": \"(1+6)*3+13=24\",\n}";

    #[test]
    fn reference_failure_step() {
        let mut env = GpEnv::from_cards(RuleConfig::default(), fig_hand()).unwrap();
        let out = env.step(FIG_OUTPUT).unwrap();
        assert_eq!(out.reward, -2.0);
        assert_eq!(out.verifier, FAILURE_TEXT);
        assert!(!out.done);
        assert_eq!(env.gp_snapshot().failures, [0, 1, 0]);
    }

    #[test]
    fn expert_closes_episode() {
        let mut env = GpEnv::from_cards(RuleConfig::default(), fig_hand()).unwrap();
        let text = env.expert_response();
        assert!(text.contains("\"number\": [1, 3, 10, 6]"));
        let out = env.step(&text).unwrap();
        assert_eq!((out.reward, out.done, out.status), (5.0, true, Some(EpisodeStatus::Success)));
        assert_eq!(env.step(&text), Err(StepError::EpisodeOver));

        let env = GpEnv::from_cards(RuleConfig::out_of_distribution(), fig_hand()).unwrap();
        assert!(env.expert_response().contains("\"number\": [1, 3, 13, 6]"));
    }

    #[test]
    fn step_limit() {
        let mut env = GpEnv::from_cards(RuleConfig::default(), fig_hand()).unwrap();
        for i in 0..5 {
            let out = env.step("no json here").unwrap();
            assert_eq!(out.reward, -3.0);
            assert_eq!(out.done, i == 4);
            assert_eq!(out.penalty, if i == 4 { -1.0 } else { 0.0 });
        }
        assert!(env.is_done());
    }

    #[test]
    fn prompt_variants() {
        let env = GpEnv::from_cards(RuleConfig::default(), fig_hand()).unwrap();
        assert!(env.context().contains("Note that 'J', 'Q', and 'K' count as '10', and each"));
        assert!(env.context().contains("[Input]\nCards: ['A', '3', 'K', '6']\n\n[Output]"));
        let vl = RuleConfig { modality: Modality::VisionLanguage, ..RuleConfig::out_of_distribution() };
        let env = GpEnv::from_cards(vl, fig_hand()).unwrap();
        assert!(env.context().contains("count as '11', '12', and '13' respectively, and each"));
        assert!(!env.context().contains("[Input]"));
    }
}
