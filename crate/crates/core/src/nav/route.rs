use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::action::{ActionSpace, NavAction};
use super::geometry::{relative_bucket, Heading, RelTurn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurningPoint {
    pub waypoint: usize,
    /// Heading of the road leaving this waypoint.
    pub heading: Heading,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Landmark {
    pub name: String,
    pub waypoint: usize,
    /// World bearing from the anchor waypoint to the landmark.
    pub bearing: Heading,
}

/// A navigation route on the 8-connected grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Route {
    pub waypoints: Vec<(i64, i64)>,
    pub start_heading: Heading,
    pub turning_points: Vec<TurningPoint>,
    pub landmarks: Vec<Landmark>,
    /// Name of the landmark anchored at the last waypoint.
    pub destination: String,
    pub instructions: Vec<String>,
    pub max_straight: usize,
    /// Expert actions in the absolute action space.
    pub expert: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvariantError {
    #[error("route needs at least two waypoints")]
    TooFewWaypoints,
    #[error("max_straight must be at least 1")]
    MaxStraightZero,
    #[error("waypoints {0} and {1} are not adjacent grid points")]
    NotAdjacent(usize, usize),
    #[error("turning points must be interior waypoints in increasing order (at waypoint {0})")]
    TurningPointOrder(usize),
    #[error("turning point at waypoint {0} declares a heading that differs from the road leaving it")]
    TurningPointHeading(usize),
    #[error("road changes direction at waypoint {0}, which is not a turning point")]
    UnmarkedTurn(usize),
    #[error("straight segment starting at waypoint {start} has length {len}, above the cap {max}")]
    SegmentTooLong { start: usize, len: usize, max: usize },
    #[error("landmark {0:?} is anchored outside the route")]
    LandmarkOutOfRange(String),
    #[error("destination landmark {0:?} is not anchored at the last waypoint")]
    MissingDestination(String),
    #[error("instruction list is empty")]
    NoInstructions,
    #[error("expert trajectory differs from the route at action {0}")]
    ExpertMismatch(usize),
}

impl Route {
    pub fn last(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }

    /// Heading of the road from waypoint `i` to `i + 1`.
    pub fn road_heading(&self, i: usize) -> Option<Heading> {
        let (a, b) = (self.waypoints.get(i)?, self.waypoints.get(i + 1)?);
        Heading::from_step(b.0 - a.0, b.1 - a.1)
    }

    pub fn is_turning_point(&self, i: usize) -> bool {
        self.turning_points.iter().any(|t| t.waypoint == i)
    }

    pub fn landmarks_at(&self, i: usize) -> impl Iterator<Item = &Landmark> {
        self.landmarks.iter().filter(move |l| l.waypoint == i)
    }

    pub fn validate(&self) -> Result<(), InvariantError> {
        let n = self.waypoints.len();
        if n < 2 {
            return Err(InvariantError::TooFewWaypoints);
        }
        if self.max_straight == 0 {
            return Err(InvariantError::MaxStraightZero);
        }
        for i in 0..n - 1 {
            if self.road_heading(i).is_none() {
                return Err(InvariantError::NotAdjacent(i, i + 1));
            }
        }
        let mut prev = 0;
        for tp in &self.turning_points {
            if tp.waypoint <= prev || tp.waypoint >= n - 1 {
                return Err(InvariantError::TurningPointOrder(tp.waypoint));
            }
            if self.road_heading(tp.waypoint) != Some(tp.heading) {
                return Err(InvariantError::TurningPointHeading(tp.waypoint));
            }
            prev = tp.waypoint;
        }
        for i in 1..n - 1 {
            if self.road_heading(i) != self.road_heading(i - 1) && !self.is_turning_point(i) {
                return Err(InvariantError::UnmarkedTurn(i));
            }
        }
        let mut breaks: Vec<usize> = Vec::with_capacity(self.turning_points.len() + 2);
        breaks.push(0);
        breaks.extend(self.turning_points.iter().map(|t| t.waypoint));
        breaks.push(n - 1);
        for w in breaks.windows(2) {
            let len = w[1] - w[0];
            if len > self.max_straight {
                return Err(InvariantError::SegmentTooLong { start: w[0], len, max: self.max_straight });
            }
        }
        if let Some(l) = self.landmarks.iter().find(|l| l.waypoint >= n) {
            return Err(InvariantError::LandmarkOutOfRange(l.name.clone()));
        }
        if !self.landmarks_at(n - 1).any(|l| l.name == self.destination) {
            return Err(InvariantError::MissingDestination(self.destination.clone()));
        }
        if self.instructions.is_empty() {
            return Err(InvariantError::NoInstructions);
        }
        let expected = self.expert_trajectory(ActionSpace::Absolute);
        if self.expert.len() != expected.len() {
            return Err(InvariantError::ExpertMismatch(self.expert.len().min(expected.len())));
        }
        for (i, (s, a)) in self.expert.iter().zip(&expected).enumerate() {
            if NavAction::parse(s, ActionSpace::Absolute) != Some(*a) {
                return Err(InvariantError::ExpertMismatch(i));
            }
        }
        Ok(())
    }

    /// Expert action at a position and heading on the route.
    pub fn expert_action(&self, pos: usize, heading: Heading, space: ActionSpace) -> NavAction {
        let Some(required) = self.road_heading(pos) else {
            return NavAction::Stop;
        };
        if required == heading {
            return NavAction::Forward;
        }
        match space {
            ActionSpace::Absolute => NavAction::Turn(required),
            ActionSpace::Relative => {
                NavAction::TurnRelative(RelTurn::first_step(heading, required).unwrap_or(RelTurn::Right))
            }
        }
    }

    /// Expert actions from the start state to `stop()`.
    pub fn expert_trajectory(&self, space: ActionSpace) -> Vec<NavAction> {
        let mut out = Vec::new();
        let (mut pos, mut heading) = (0, self.start_heading);
        loop {
            let a = self.expert_action(pos, heading, space);
            out.push(a);
            match a {
                NavAction::Stop => return out,
                NavAction::Forward => pos += 1,
                NavAction::Turn(h) => heading = h,
                NavAction::TurnRelative(r) => heading = heading.rotate(r.eighths()),
            }
        }
    }

    /// Index of the instruction being executed in a state.
    pub fn instruction_index(&self, pos: usize, heading: Heading) -> usize {
        let segment = self.turning_points.iter().filter(|t| t.waypoint <= pos).count();
        let idx = if pos >= self.last() {
            self.instructions.len().saturating_sub(1)
        } else if self.road_heading(pos) != Some(heading) {
            2 * segment
        } else {
            2 * segment + 1
        };
        idx.min(self.instructions.len().saturating_sub(1))
    }

    /// Observation text at a state (second person, as shown in prompts).
    pub fn observe(&self, pos: usize, heading: Heading) -> String {
        let mut parts: Vec<String> = self
            .landmarks_at(pos)
            .map(|l| alloc::format!("{} is on your {}", l.name, relative_bucket(heading, l.bearing)))
            .collect();
        if parts.is_empty() {
            parts.push(String::from("No landmarks nearby"));
        }
        if self.is_turning_point(pos) {
            parts.push(String::from("You observe an intersection"));
        }
        parts.join("; ")
    }
}
