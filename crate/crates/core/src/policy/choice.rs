use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::equation::Op;
use crate::gp::{render_answer, solve, GpSnapshot, Shape, Template};
use crate::nav::{first_person, render_answer as render_nav_answer, NavAction, NavSnapshot};
use crate::revision::Snapshot;

/// Number-head classes: card values 0 through 13.
pub const NUMBER_CLASSES: usize = 14;

/// Sampled components of a GeneralPoints answer. The template's slots refer
/// to the predicted numbers in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GpChoice {
    pub numbers: [u8; 4],
    pub perm: u8,
    pub ops: [u8; 3],
    pub shape: u8,
}

impl GpChoice {
    pub fn template(&self) -> Template {
        Template {
            perm: self.perm,
            ops: self.ops.map(|o| Op::ALL[o as usize]),
            shape: Shape::ALL[self.shape as usize],
        }
    }

    pub fn from_template(numbers: [u8; 4], t: &Template) -> Self {
        GpChoice { numbers, perm: t.perm, ops: t.ops.map(|o| o.index() as u8), shape: t.shape.index() as u8 }
    }

    pub fn formula(&self, target: u64) -> String {
        let mut sorted = self.numbers.map(u64::from);
        sorted.sort_unstable();
        format!("{}={}", self.template().instantiate(&sorted), target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "snake_case")]
pub enum Choice {
    Gp(GpChoice),
    Nav { slot: u8 },
}

pub fn expert_gp_choice(s: &GpSnapshot) -> Option<GpChoice> {
    let numbers = s.numbers();
    let sol = solve(&numbers, s.rule.target)?;
    Some(GpChoice::from_template(numbers.map(|n| n as u8), &sol.template))
}

pub fn expert_choice(s: &Snapshot) -> Option<Choice> {
    match s {
        Snapshot::Gp(g) => expert_gp_choice(g).map(Choice::Gp),
        Snapshot::Nav(n) => Some(Choice::Nav { slot: n.expert_action().slot() as u8 }),
    }
}

pub fn render_gp(s: &GpSnapshot, c: &GpChoice) -> String {
    render_answer(&s.symbols(), &c.numbers.map(i64::from), &c.formula(s.rule.target))
}

pub fn render_nav(s: &NavSnapshot, action: NavAction) -> String {
    render_nav_answer(&first_person(&s.observation), &s.instruction, &action.render())
}

/// Response text for a choice; `None` if the choice does not fit the snapshot.
pub fn render_choice(s: &Snapshot, c: &Choice) -> Option<String> {
    match (s, c) {
        (Snapshot::Gp(g), Choice::Gp(c)) => Some(render_gp(g, c)),
        (Snapshot::Nav(n), Choice::Nav { slot }) => NavAction::from_slot(*slot as usize).map(|a| render_nav(n, a)),
        _ => None,
    }
}
