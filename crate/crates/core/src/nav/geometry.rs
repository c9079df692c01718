use core::fmt;

use serde::{Deserialize, Serialize};

/// Eight compass headings, clockwise from north in 45 degree steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heading {
    North,
    Northeast,
    East,
    Southeast,
    South,
    Southwest,
    West,
    Northwest,
}

impl Heading {
    pub const ALL: [Heading; 8] = [
        Heading::North,
        Heading::Northeast,
        Heading::East,
        Heading::Southeast,
        Heading::South,
        Heading::Southwest,
        Heading::West,
        Heading::Northwest,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Heading {
        Heading::ALL[i % 8]
    }

    pub fn degrees(self) -> u32 {
        self.index() as u32 * 45
    }

    pub fn name(self) -> &'static str {
        ["north", "northeast", "east", "southeast", "south", "southwest", "west", "northwest"][self.index()]
    }

    pub fn from_name(s: &str) -> Option<Heading> {
        let s = s.trim();
        Heading::ALL.into_iter().find(|h| h.name().eq_ignore_ascii_case(s))
    }

    /// Unit grid step; x grows east, y grows north.
    pub fn step(self) -> (i64, i64) {
        [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)][self.index()]
    }

    pub fn from_step(dx: i64, dy: i64) -> Option<Heading> {
        Heading::ALL.into_iter().find(|h| h.step() == (dx, dy))
    }

    /// Heading after rotating clockwise by `eighths` * 45 degrees.
    pub fn rotate(self, eighths: i32) -> Heading {
        Heading::from_index((self.index() as i32 + eighths).rem_euclid(8) as usize)
    }

    /// Clockwise offset from `self` to `other` in eighths, in `0..8`.
    pub fn offset_to(self, other: Heading) -> u32 {
        (other.index() as i32 - self.index() as i32).rem_euclid(8) as u32
    }
}

impl fmt::Display for Heading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One step of the relative action space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelTurn {
    Left,
    Right,
    SlightlyLeft,
    SlightlyRight,
}

impl RelTurn {
    pub const ALL: [RelTurn; 4] = [RelTurn::Left, RelTurn::Right, RelTurn::SlightlyLeft, RelTurn::SlightlyRight];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn eighths(self) -> i32 {
        match self {
            RelTurn::Left => -2,
            RelTurn::Right => 2,
            RelTurn::SlightlyLeft => -1,
            RelTurn::SlightlyRight => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RelTurn::Left => "left",
            RelTurn::Right => "right",
            RelTurn::SlightlyLeft => "slightly left",
            RelTurn::SlightlyRight => "slightly right",
        }
    }

    pub fn from_name(s: &str) -> Option<RelTurn> {
        let s = s.trim();
        RelTurn::ALL.into_iter().find(|r| r.name().eq_ignore_ascii_case(s))
    }

    /// First relative step towards `to`. Turns of 135 degrees take a 90 degree
    /// step first; a reversal takes two right turns.
    pub fn first_step(from: Heading, to: Heading) -> Option<RelTurn> {
        match from.offset_to(to) {
            0 => None,
            1 => Some(RelTurn::SlightlyRight),
            2..=4 => Some(RelTurn::Right),
            5 | 6 => Some(RelTurn::Left),
            _ => Some(RelTurn::SlightlyLeft),
        }
    }
}

/// Egocentric position of something at world `bearing` for an agent facing `heading`.
pub fn relative_bucket(heading: Heading, bearing: Heading) -> &'static str {
    [
        "front",
        "right front",
        "right",
        "right behind",
        "behind",
        "left behind",
        "left",
        "left front",
    ][heading.offset_to(bearing) as usize]
}

/// Instruction wording for a turn between two headings.
pub fn turn_word(from: Heading, to: Heading) -> &'static str {
    [
        "around",
        "slightly right",
        "right",
        "sharp right",
        "around",
        "sharp left",
        "left",
        "slightly left",
    ][from.offset_to(to) as usize]
}
