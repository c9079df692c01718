use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::action::ActionSpace;
use super::geometry::{relative_bucket, turn_word, Heading};
use super::route::{Landmark, Route, TurningPoint};
use crate::seed::rng_from_seed;

/// Landmark names used for training routes.
pub const TRAIN_LANDMARKS: &[&str] = &[
    "Blue Door Bakery", "Harbor Lights Hotel", "Maple Street Pharmacy", "Old Town Library", "Central Fire Station",
    "Riverside Diner", "Golden Lantern Theater", "Elm Park Gate", "Northside Post Office", "Corner Deli",
    "Grand Plaza Fountain", "Lucky Star Noodles", "Iron Bridge Cafe", "Saint Mark Church", "Union Bank Tower",
    "Green Leaf Market", "Silver Spoon Bistro", "City Hall Annex", "Red Brick Brewery", "Pioneer Museum",
    "Sunrise Bagels", "Atlas Bookshop", "Hillside Clinic", "Lighthouse Gallery", "Chestnut Tavern",
    "Orchard Hardware", "Metro Cinema", "Parkview Laundromat", "Willow Pub", "Summit Gym",
];

/// Disjoint pool for held-out routes.
pub const HELD_OUT_LANDMARKS: &[&str] = &[
    "Copper Kettle Tea House", "Bayside Aquarium", "Juniper Hostel", "Stone Arch Bridge", "Amber Dumpling House",
    "Falcon Records", "Harvest Moon Grocery", "Cedar Chapel", "Lotus Spa", "Pinecrest School",
    "Velvet Jazz Club", "Anchor Fish Market", "Crescent Mall", "Ivy Bookbinders", "Beacon Observatory",
    "Saffron Kitchen", "Marble Courthouse", "Kite Toy Store", "Redwood Pharmacy", "Garnet Hotel",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RouteGenConfig {
    pub turning_points: usize,
    pub max_straight: usize,
    pub landmarks: Vec<String>,
}

impl Default for RouteGenConfig {
    fn default() -> Self {
        RouteGenConfig {
            turning_points: 2,
            max_straight: 3,
            landmarks: TRAIN_LANDMARKS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("max_straight must be at least 1")]
    MaxStraightZero,
    #[error("landmark pool has {have} names but the route needs {need}")]
    PoolTooSmall { have: usize, need: usize },
}

fn random_turn<R: Rng>(rng: &mut R, h: Heading) -> Heading {
    const TURNS: [i32; 4] = [-2, -1, 1, 2];
    h.rotate(TURNS[rng.random_range(0..4)])
}

/// Generates a grid route with `turning_points` turns, a landmark at every
/// turning point and at the destination, numbered-style instructions and the
/// expert trajectory.
pub fn generate_route(seed: u64, config: &RouteGenConfig) -> Result<Route, GenError> {
    if config.max_straight == 0 {
        return Err(GenError::MaxStraightZero);
    }
    let need = config.turning_points + 1;
    if config.landmarks.len() < need {
        return Err(GenError::PoolTooSmall { have: config.landmarks.len(), need });
    }
    let mut rng = rng_from_seed(seed);
    let start_heading = Heading::from_index(rng.random_range(0..8));
    let mut headings = Vec::with_capacity(need);
    headings.push(random_turn(&mut rng, start_heading));
    for i in 1..need {
        let h = random_turn(&mut rng, headings[i - 1]);
        headings.push(h);
    }
    let mut names: Vec<&String> = config.landmarks.iter().collect();
    for i in 0..need {
        let j = rng.random_range(i..names.len());
        names.swap(i, j);
    }

    let mut waypoints = alloc::vec![(0i64, 0i64)];
    let mut turning_points = Vec::new();
    let mut landmarks = Vec::new();
    for (k, h) in headings.iter().enumerate() {
        if k > 0 {
            let w = waypoints.len() - 1;
            turning_points.push(TurningPoint { waypoint: w, heading: *h });
            landmarks.push(Landmark {
                name: names[k - 1].clone(),
                waypoint: w,
                bearing: Heading::from_index(rng.random_range(0..8)),
            });
        }
        let len = rng.random_range(1..=config.max_straight);
        let (dx, dy) = h.step();
        for _ in 0..len {
            let &(x, y) = waypoints.last().expect("non-empty");
            waypoints.push((x + dx, y + dy));
        }
    }
    let destination = names[need - 1].clone();
    landmarks.push(Landmark {
        name: destination.clone(),
        waypoint: waypoints.len() - 1,
        bearing: Heading::from_index(rng.random_range(0..8)),
    });

    let mut instructions = Vec::with_capacity(2 * need);
    instructions.push(format!("First, turn {} to face {}.", turn_word(start_heading, headings[0]), headings[0]));
    for k in 1..need {
        let arrive = headings[k - 1];
        let l = &landmarks[k - 1];
        instructions.push(format!(
            "Move forward until you reach the next intersection where {} is on your {}.",
            l.name,
            relative_bucket(arrive, l.bearing)
        ));
        instructions.push(format!("Turn {} to face {}.", turn_word(arrive, headings[k]), headings[k]));
    }
    let d = landmarks.last().expect("destination landmark");
    instructions.push(format!(
        "Move forward until the destination {} is on your {}.",
        d.name,
        relative_bucket(headings[need - 1], d.bearing)
    ));

    let mut route = Route {
        waypoints,
        start_heading,
        turning_points,
        landmarks,
        destination,
        instructions,
        max_straight: config.max_straight,
        expert: Vec::new(),
    };
    route.expert = route.expert_trajectory(ActionSpace::Absolute).iter().map(|a| a.render()).collect();
    Ok(route)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_routes_validate() {
        for seed in 0..200 {
            let cfg = RouteGenConfig { turning_points: (seed % 5) as usize, ..RouteGenConfig::default() };
            let r = generate_route(seed, &cfg).unwrap();
            assert_eq!(r.validate(), Ok(()), "seed {seed}");
            assert_eq!(r.instructions.len(), 2 * cfg.turning_points + 2);
            assert_eq!(r, generate_route(seed, &cfg).unwrap());
        }
    }

    #[test]
    fn pool_size_checked() {
        let cfg = RouteGenConfig { turning_points: 3, landmarks: alloc::vec!["A".into()], ..RouteGenConfig::default() };
        assert_eq!(generate_route(0, &cfg), Err(GenError::PoolTooSmall { have: 1, need: 4 }));
    }
}
