use serde::{Deserialize, Serialize};

use super::cards::{Card, Color, Rank};

/// Interpretation of J, Q and K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaceRule {
    /// J, Q, K all count as 10.
    #[default]
    AllTen,
    /// J, Q, K count as 11, 12, 13.
    Ordinal,
}

impl FaceRule {
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Four cards without replacement from the (color-filtered) deck.
    #[default]
    Uniform,
    /// As `Uniform`, but at least one of the cards is J, Q or K.
    AtLeastOneFace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColorFilter {
    Black,
    Red,
    #[default]
    All,
}

impl ColorFilter {
    pub fn admits(self, card: &Card) -> bool {
        match self {
            ColorFilter::All => true,
            ColorFilter::Black => card.color() == Color::Black,
            ColorFilter::Red => card.color() == Color::Red,
        }
    }
}

/// Prompt surface: the language variant lists the cards as text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modality {
    #[default]
    Language,
    VisionLanguage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("target must be at least 1")]
    Target,
    #[error("max_steps must be at least 1")]
    MaxSteps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RuleConfig {
    pub face_rule: FaceRule,
    pub target: u64,
    pub sampling: Sampling,
    pub colors: ColorFilter,
    pub max_steps: usize,
    pub modality: Modality,
    pub recognition_channel: bool,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            face_rule: FaceRule::AllTen,
            target: 24,
            sampling: Sampling::Uniform,
            colors: ColorFilter::All,
            max_steps: 5,
            modality: Modality::Language,
            recognition_channel: false,
        }
    }
}

impl RuleConfig {
    /// Training / in-distribution rule: faces count as 10.
    pub fn in_distribution() -> Self {
        RuleConfig::default()
    }

    /// Held-out rule: faces count as 11/12/13 and every hand has a face card.
    pub fn out_of_distribution() -> Self {
        RuleConfig { face_rule: FaceRule::Ordinal, sampling: Sampling::AtLeastOneFace, ..RuleConfig::default() }
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        if self.target < 1 {
            return Err(RuleError::Target);
        }
        if self.max_steps < 1 {
            return Err(RuleError::MaxSteps);
        }
        Ok(())
    }
}

/// Numeric value of a rank under a face rule.
pub fn map_card(rank: Rank, rule: FaceRule) -> u64 {
    match (rank, rule) {
        (Rank::Jack, FaceRule::Ordinal) => 11,
        (Rank::Queen, FaceRule::Ordinal) => 12,
        (Rank::King, FaceRule::Ordinal) => 13,
        (r, _) if r.is_face() => 10,
        (r, _) => r.index() as u64 + 1,
    }
}
