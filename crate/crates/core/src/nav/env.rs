use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::action::{ActionSpace, NavAction};
use super::geometry::Heading;
use super::route::{InvariantError, Route};
use crate::answer::parse_nav_answer;
use crate::revision::{Environment, EpisodeStatus, Snapshot, StepError, StepOutcome};

pub const PROMPT_TEMPLATE: &str = include_str!("../../assets/nav_prompt.v1.txt");
pub const CORRECT_TEXT: &str = "Correct solution.";
pub const INCORRECT_TEXT: &str = "Incorrect action.";

pub const REWARD_CORRECT: f64 = 1.0;
pub const REWARD_WRONG: f64 = -1.0;
pub const PENALTY_EXHAUSTED: f64 = -1.0;
pub const PENALTY_DETECTION: f64 = -1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NavConfig {
    pub action_space: ActionSpace,
    /// Attempts allowed at one coordinate before the episode fails.
    pub max_attempts: usize,
    pub detection_channel: bool,
}

impl Default for NavConfig {
    fn default() -> Self {
        NavConfig { action_space: ActionSpace::Absolute, max_attempts: 2, detection_channel: false }
    }
}

impl NavConfig {
    pub fn in_distribution() -> Self {
        NavConfig::default()
    }

    pub fn out_of_distribution() -> Self {
        NavConfig { action_space: ActionSpace::Relative, ..NavConfig::default() }
    }
}

/// What a policy may know about a navigation state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavSnapshot {
    pub space: ActionSpace,
    pub heading: Heading,
    /// Heading of the road ahead; `None` at the destination.
    pub required: Option<Heading>,
    pub intersection: bool,
    pub destination: bool,
    pub visible_landmarks: usize,
    /// Failed attempts at the current coordinate.
    pub attempts: usize,
    pub observation: String,
    pub instruction: String,
}

impl NavSnapshot {
    pub fn expert_action(&self) -> NavAction {
        match self.required {
            None => NavAction::Stop,
            Some(r) if r == self.heading => NavAction::Forward,
            Some(r) => match self.space {
                ActionSpace::Absolute => NavAction::Turn(r),
                ActionSpace::Relative => NavAction::TurnRelative(
                    super::geometry::RelTurn::first_step(self.heading, r).unwrap_or(super::geometry::RelTurn::Right),
                ),
            },
        }
    }
}

/// Rewrites a prompt observation in the first person used by responses.
pub fn first_person(observation: &str) -> String {
    observation.replace(" on your ", " on my ").replace("You observe", "I observe")
}

pub fn render_answer(observation: &str, instruction: &str, action: &str) -> String {
    format!(
        "{{\n\"current observation\": \"{}\",\n\"current instruction\": \"{}\",\n\"action\": \"{}\",\n}}",
        observation, instruction, action
    )
}

pub fn expert_response(s: &NavSnapshot) -> String {
    render_answer(&first_person(&s.observation), &s.instruction, &s.expert_action().render())
}

#[derive(Debug, Clone)]
pub struct NavEnv {
    route: Arc<Route>,
    config: NavConfig,
    pos: usize,
    heading: Heading,
    attempts: usize,
    /// Past scenes: observation line and the action that left it.
    history: Vec<(String, String)>,
    context: String,
    done: bool,
}

impl NavEnv {
    pub fn new(route: Arc<Route>, config: NavConfig) -> Result<Self, InvariantError> {
        route.validate()?;
        let heading = route.start_heading;
        let mut env =
            NavEnv { route, config, pos: 0, heading, attempts: 0, history: Vec::new(), context: String::new(), done: false };
        env.context = env.render_prompt();
        Ok(env)
    }

    pub fn route(&self) -> &Route {
        &self.route
    }

    pub fn config(&self) -> &NavConfig {
        &self.config
    }

    pub fn position(&self) -> (usize, Heading) {
        (self.pos, self.heading)
    }

    pub fn observe(&self) -> String {
        self.route.observe(self.pos, self.heading)
    }

    pub fn expert_action(&self) -> NavAction {
        self.route.expert_action(self.pos, self.heading, self.config.action_space)
    }

    fn history_line(obs: &str) -> String {
        if obs.ends_with("You observe an intersection") {
            obs.to_string()
        } else {
            format!("{obs};")
        }
    }

    pub fn render_prompt(&self) -> String {
        let instructions: Vec<String> =
            self.route.instructions.iter().enumerate().map(|(i, s)| format!("{}. {}", i + 1, s)).collect();
        let mut history: Vec<String> = Vec::new();
        for (k, (obs, act)) in self.history.iter().enumerate() {
            history.push(format!("O_{}: {}", k + 1, Self::history_line(obs)));
            history.push(format!("A_{}: {}", k + 1, act));
        }
        let k = self.history.len() + 1;
        history.push(format!("O_{}: {}", k, Self::history_line(&self.observe())));
        history.push(format!("A_{k}:"));
        PROMPT_TEMPLATE
            .replace("{instructions}", &instructions.join("\n"))
            .replace("{actions}", self.config.action_space.prompt_list())
            .replace("{history}", &history.join("\n"))
    }

    pub fn nav_snapshot(&self) -> NavSnapshot {
        let idx = self.route.instruction_index(self.pos, self.heading);
        NavSnapshot {
            space: self.config.action_space,
            heading: self.heading,
            required: self.route.road_heading(self.pos),
            intersection: self.route.is_turning_point(self.pos),
            destination: self.pos >= self.route.last(),
            visible_landmarks: self.route.landmarks_at(self.pos).count(),
            attempts: self.attempts,
            observation: self.observe(),
            instruction: self.route.instructions.get(idx).cloned().unwrap_or_default(),
        }
    }

    pub fn expert_response(&self) -> String {
        expert_response(&self.nav_snapshot())
    }

    /// True when the named landmarks in `text` are exactly those visible here.
    fn detection_ok(&self, text: Option<&str>) -> bool {
        let Some(text) = text else { return false };
        self.route.landmarks.iter().all(|l| {
            let visible = l.waypoint == self.pos;
            text.contains(l.name.as_str()) == visible
        })
    }
}

impl Environment for NavEnv {
    fn context(&self) -> &str {
        &self.context
    }

    fn step(&mut self, output: &str) -> Result<StepOutcome, StepError> {
        if self.done {
            return Err(StepError::EpisodeOver);
        }
        let answer = parse_nav_answer(output).ok();
        let space = self.config.action_space;
        let action = answer.as_ref().and_then(|a| a.action.as_deref()).and_then(|s| NavAction::parse(s, space));
        let expert = self.expert_action();
        let correct = action == Some(expert);
        let mut reward = if correct { REWARD_CORRECT } else { REWARD_WRONG };
        if self.config.detection_channel
            && !self.detection_ok(answer.as_ref().and_then(|a| a.observation.as_deref()))
        {
            reward += PENALTY_DETECTION;
        }
        if correct {
            let obs = self.observe();
            self.history.push((obs, expert.render()));
            self.attempts = 0;
            match expert {
                NavAction::Stop => self.done = true,
                NavAction::Forward => self.pos += 1,
                NavAction::Turn(h) => self.heading = h,
                NavAction::TurnRelative(r) => self.heading = self.heading.rotate(r.eighths()),
            }
            let next_context = if self.done {
                None
            } else {
                self.context = self.render_prompt();
                Some(self.context.clone())
            };
            return Ok(StepOutcome {
                reward,
                penalty: 0.0,
                verifier: CORRECT_TEXT.to_string(),
                done: self.done,
                correct: true,
                verdict: "correct_action".to_string(),
                next_context,
                status: self.done.then_some(EpisodeStatus::Success),
            });
        }
        self.attempts += 1;
        let exhausted = self.attempts >= self.config.max_attempts.max(1);
        self.done = exhausted;
        Ok(StepOutcome {
            reward,
            penalty: if exhausted { PENALTY_EXHAUSTED } else { 0.0 },
            verifier: INCORRECT_TEXT.to_string(),
            done: exhausted,
            correct: false,
            verdict: "incorrect_action".to_string(),
            next_context: None,
            status: exhausted.then_some(EpisodeStatus::Failure),
        })
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot::Nav(self.nav_snapshot())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nav::route::tests::chinatown;

    fn at_first_intersection(config: NavConfig) -> NavEnv {
        let mut env = NavEnv::new(Arc::new(chinatown()), config).unwrap();
        for _ in 0..3 {
            let text = env.expert_response();
            assert_eq!(env.step(&text).unwrap().reward, 1.0);
        }
        env
    }

    #[test]
    fn reference_transition() {
        let mut env = at_first_intersection(NavConfig::default());
        assert!(env.context().contains(
            "O_1: No landmarks nearby;\nA_1: turn_direction(east)\nO_2: No landmarks nearby;\nA_2: forward()\nO_3: No landmarks nearby;\nA_3: forward()\nO_4: Hotel 32One is on your right behind; You observe an intersection\nA_4:\n"
        ));
        let out = "{\n\"current observation\": \"Hotel 32One is on my right behind; I observe an intersection\",\n\"current instruction\": \"Turn right to face north.\",\n\"action\": \"turn_direction(north)\",\n}";
        assert_eq!(env.expert_response(), out);
        let o = env.step(out).unwrap();
        assert_eq!((o.reward, o.verifier.as_str(), o.done), (1.0, CORRECT_TEXT, false));
        assert!(o.next_context.is_some());
    }

    #[test]
    fn wrong_actions_exhaust_the_coordinate() {
        let mut env = at_first_intersection(NavConfig::default());
        let bad = render_answer("", "", "turn_direction(northwest)");
        let o = env.step(&bad).unwrap();
        assert_eq!((o.reward, o.penalty, o.verifier.as_str(), o.done), (-1.0, 0.0, INCORRECT_TEXT, false));
        let o = env.step(&bad).unwrap();
        assert_eq!((o.reward, o.penalty, o.done, o.status), (-1.0, -1.0, true, Some(EpisodeStatus::Failure)));
    }

    #[test]
    fn unparseable_is_wrong() {
        let mut env = NavEnv::new(Arc::new(chinatown()), NavConfig::default()).unwrap();
        assert_eq!(env.step("I will go east").unwrap().reward, -1.0);
    }

    #[test]
    fn detection_penalty() {
        let cfg = NavConfig { detection_channel: true, ..NavConfig::default() };
        let mut env = at_first_intersection(cfg);
        let o = env.step(&render_answer("nothing here", "", "turn_direction(north)")).unwrap();
        assert_eq!(o.reward, 1.0 - 1.5);
    }

    #[test]
    fn relative_expert_completes() {
        let mut env = NavEnv::new(Arc::new(chinatown()), NavConfig::out_of_distribution()).unwrap();
        assert!(env.context().contains("x∈['left', 'right', 'slightly left', 'slightly right']"));
        let mut n = 0;
        while !env.is_done() {
            let o = env.step(&env.expert_response()).unwrap();
            assert!(o.correct);
            n += 1;
        }
        assert_eq!(n, 9);
    }
}
