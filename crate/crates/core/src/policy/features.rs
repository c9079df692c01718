//! Sparse feature vectors for the tiny policy.
//!
//! The GeneralPoints block carries the face-rule flag, per-card rank, suit and
//! color one-hots, the turn index, failure counts and a one-hot over the
//! unordered rank hand. The navigation block carries the action-space flag,
//! current and required heading, their clockwise offset, observation flags and
//! the retry count. The rule only reaches the policy through its flag.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::gp::GpSnapshot;
use crate::nav::{ActionSpace, NavSnapshot};
use crate::revision::Snapshot;

pub const RULE: usize = 0;
pub const RANK: usize = RULE + 2;
pub const SUIT: usize = RANK + 4 * 13;
pub const COLOR: usize = SUIT + 4 * 4;
pub const TURN: usize = COLOR + 4 * 2;
pub const FAILS: usize = TURN + 1;
pub const HAND: usize = FAILS + 3;
pub const NUM_HANDS: usize = 1820;
pub const NAV: usize = HAND + NUM_HANDS;
pub const SPACE: usize = NAV + 1;
pub const HEADING: usize = SPACE + 2;
pub const REQUIRED: usize = HEADING + 8;
pub const OFFSET: usize = REQUIRED + 8;
pub const OBS: usize = OFFSET + 8;
pub const RETRY: usize = OBS + 3;
pub const DIM: usize = RETRY + 1;

/// Scale applied to count-valued features.
const COUNT_SCALE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    /// Include suit and color one-hots.
    pub suits: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { suits: true }
    }
}

/// Input to the policy network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Features {
    /// Non-zero entries, sorted by index.
    pub sparse: Vec<(u32, f64)>,
    /// Per card: rank index and rule index, for the number head.
    pub cards: Option<[(u8, u8); 4]>,
    /// Active navigation action set.
    pub space: Option<ActionSpace>,
}

impl Features {
    pub fn dense(&self) -> Vec<f64> {
        let mut v = alloc::vec![0.0; DIM];
        for &(i, x) in &self.sparse {
            v[i as usize] += x;
        }
        v
    }
}

const fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1;
    let mut i = 0;
    while i < k {
        r = r * (n - i) / (i + 1);
        i += 1;
    }
    r
}

/// Index of an unordered 4-multiset of ranks (0..13) in `0..1820`.
pub fn hand_index(ranks: [usize; 4]) -> usize {
    let mut r = ranks;
    r.sort_unstable();
    // stars and bars: r_i + i is strictly increasing in 0..16
    (0..4).map(|i| binom(r[i] + i, i + 1)).sum()
}

pub fn featurize_gp(s: &GpSnapshot, cfg: &FeatureConfig) -> Features {
    let mut sp: Vec<(u32, f64)> = Vec::with_capacity(32);
    let rule = s.rule.face_rule.index();
    sp.push(((RULE + rule) as u32, 1.0));
    for (i, c) in s.cards.iter().enumerate() {
        sp.push(((RANK + 13 * i + c.rank.index()) as u32, 1.0));
    }
    if cfg.suits {
        for (i, c) in s.cards.iter().enumerate() {
            sp.push(((SUIT + 4 * i + c.suit.index()) as u32, 1.0));
        }
        for (i, c) in s.cards.iter().enumerate() {
            sp.push(((COLOR + 2 * i + c.color() as usize) as u32, 1.0));
        }
    }
    if s.t > 0 {
        sp.push((TURN as u32, s.t as f64 * COUNT_SCALE));
    }
    for (i, &n) in s.failures.iter().enumerate() {
        if n > 0 {
            sp.push(((FAILS + i) as u32, n as f64 * COUNT_SCALE));
        }
    }
    sp.push(((HAND + hand_index(s.cards.map(|c| c.rank.index()))) as u32, 1.0));
    sp.sort_unstable_by_key(|e| e.0);
    let cards = s.cards.map(|c| (c.rank.index() as u8, rule as u8));
    Features { sparse: sp, cards: Some(cards), space: None }
}

pub fn featurize_nav(s: &NavSnapshot) -> Features {
    let mut sp: Vec<(u32, f64)> = Vec::with_capacity(12);
    sp.push((NAV as u32, 1.0));
    sp.push(((SPACE + s.space.index()) as u32, 1.0));
    sp.push(((HEADING + s.heading.index()) as u32, 1.0));
    if let Some(r) = s.required {
        sp.push(((REQUIRED + r.index()) as u32, 1.0));
        sp.push(((OFFSET + s.heading.offset_to(r) as usize) as u32, 1.0));
    }
    if s.intersection {
        sp.push((OBS as u32, 1.0));
    }
    if s.destination {
        sp.push(((OBS + 1) as u32, 1.0));
    }
    if s.visible_landmarks > 0 {
        sp.push(((OBS + 2) as u32, 1.0));
    }
    if s.attempts > 0 {
        sp.push((RETRY as u32, s.attempts as f64 * COUNT_SCALE));
    }
    Features { sparse: sp, cards: None, space: Some(s.space) }
}

pub fn featurize(s: &Snapshot, cfg: &FeatureConfig) -> Features {
    match s {
        Snapshot::Gp(g) => featurize_gp(g, cfg),
        Snapshot::Nav(n) => featurize_nav(n),
    }
}
