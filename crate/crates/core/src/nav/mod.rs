//! Instruction-following navigation on an 8-connected street grid.

mod action;
mod env;
mod generate;
pub mod geometry;
mod route;

pub use action::{ActionSpace, NavAction, NUM_ACTION_SLOTS};
pub use env::{
    expert_response, first_person, render_answer, NavConfig, NavEnv, NavSnapshot, CORRECT_TEXT, INCORRECT_TEXT,
    PENALTY_DETECTION, PENALTY_EXHAUSTED, PROMPT_TEMPLATE, REWARD_CORRECT, REWARD_WRONG,
};
pub use generate::{generate_route, GenError, RouteGenConfig, HELD_OUT_LANDMARKS, TRAIN_LANDMARKS};
pub use geometry::{relative_bucket, Heading, RelTurn};
pub use route::{InvariantError, Landmark, Route, TurningPoint};
