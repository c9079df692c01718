//! The GeneralPoints card game: reach a target number using all four cards.

pub mod cards;
mod env;
pub mod rules;
mod sampling;
pub mod solver;

pub use cards::{deck, Card, Color, Rank, Suit};
pub use env::{
    expert_response, render_answer, render_prompt, FailureCounts, GpEnv, GpError, GpSnapshot, FAILURE_TEXT,
    PROMPT_TEMPLATE, RULE_TEXT_ALL_TEN, RULE_TEXT_ORDINAL, SUCCESS_TEXT,
};
pub use rules::{map_card, ColorFilter, FaceRule, Modality, RuleConfig, RuleError, Sampling};
pub use sampling::{numbers_of, sample_quadruple, SampleError, MAX_ATTEMPTS};
pub use solver::{solve, solve_formula, Shape, Solution, Template, NUM_TEMPLATES};
