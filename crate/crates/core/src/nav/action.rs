use alloc::format;
use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::geometry::{Heading, RelTurn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionSpace {
    #[default]
    Absolute,
    Relative,
}

impl ActionSpace {
    pub fn index(self) -> usize {
        self as usize
    }

    /// The bracketed list of turn arguments shown in the prompt.
    pub fn prompt_list(self) -> &'static str {
        match self {
            ActionSpace::Absolute => {
                "'north', 'northeast', 'east', 'southeast', 'south', 'southwest', 'west', 'northwest'"
            }
            ActionSpace::Relative => "'left', 'right', 'slightly left', 'slightly right'",
        }
    }

    /// Action slots of the shared 14-way action index that are legal here.
    pub fn active(self) -> &'static [usize] {
        match self {
            ActionSpace::Absolute => &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
            ActionSpace::Relative => &[0, 1, 10, 11, 12, 13],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NavAction {
    Forward,
    Stop,
    Turn(Heading),
    TurnRelative(RelTurn),
}

pub const NUM_ACTION_SLOTS: usize = 14;

impl NavAction {
    /// Index in the shared action table: forward, stop, eight headings, four relative turns.
    pub fn slot(self) -> usize {
        match self {
            NavAction::Forward => 0,
            NavAction::Stop => 1,
            NavAction::Turn(h) => 2 + h.index(),
            NavAction::TurnRelative(r) => 10 + r.index(),
        }
    }

    pub fn from_slot(i: usize) -> Option<NavAction> {
        match i {
            0 => Some(NavAction::Forward),
            1 => Some(NavAction::Stop),
            2..=9 => Some(NavAction::Turn(Heading::from_index(i - 2))),
            10..=13 => Some(NavAction::TurnRelative(RelTurn::ALL[i - 10])),
            _ => None,
        }
    }

    pub fn in_space(self, space: ActionSpace) -> bool {
        match self {
            NavAction::Forward | NavAction::Stop => true,
            NavAction::Turn(_) => space == ActionSpace::Absolute,
            NavAction::TurnRelative(_) => space == ActionSpace::Relative,
        }
    }

    /// Parses `forward()`, `stop()` or `turn_direction(x)`; `x` may be quoted.
    pub fn parse(text: &str, space: ActionSpace) -> Option<NavAction> {
        let t = text.trim();
        let compact: String = t.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.eq_ignore_ascii_case("forward()") {
            return Some(NavAction::Forward);
        }
        if compact.eq_ignore_ascii_case("stop()") {
            return Some(NavAction::Stop);
        }
        let inner = t.strip_prefix("turn_direction")?.trim().strip_prefix('(')?.strip_suffix(')')?;
        let arg = inner.trim().trim_matches(|c| c == '\'' || c == '"').trim();
        match space {
            ActionSpace::Absolute => Heading::from_name(arg).map(NavAction::Turn),
            ActionSpace::Relative => RelTurn::from_name(arg).map(NavAction::TurnRelative),
        }
    }

    pub fn render(self) -> String {
        match self {
            NavAction::Forward => String::from("forward()"),
            NavAction::Stop => String::from("stop()"),
            NavAction::Turn(h) => format!("turn_direction({})", h.name()),
            NavAction::TurnRelative(r) => format!("turn_direction({})", r.name()),
        }
    }
}

impl fmt::Display for NavAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_render_roundtrip() {
        for i in 0..NUM_ACTION_SLOTS {
            let a = NavAction::from_slot(i).unwrap();
            let space = if matches!(a, NavAction::TurnRelative(_)) { ActionSpace::Relative } else { ActionSpace::Absolute };
            assert_eq!(NavAction::parse(&a.render(), space), Some(a));
            assert_eq!(a.slot(), i);
            assert!(space.active().contains(&i));
        }
    }

    #[test]
    fn space_mismatch_and_quotes() {
        assert_eq!(NavAction::parse("turn_direction(north)", ActionSpace::Relative), None);
        assert_eq!(NavAction::parse("turn_direction('slightly left')", ActionSpace::Relative), Some(NavAction::TurnRelative(RelTurn::SlightlyLeft)));
        assert_eq!(NavAction::parse(" forward( ) ", ActionSpace::Relative), Some(NavAction::Forward));
        assert_eq!(NavAction::parse("go north", ActionSpace::Absolute), None);
    }
}
